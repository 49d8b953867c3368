//! Applied current densities `F(x, t)` sampled at the electric locations.

use crate::error::{Error, Result};
use crate::grid::{Location, StaggeredGrid};

/// Time-dependent source term for the electric-field equation.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    /// `F(x, t) = ramp(t) * profile(x)` with a C^1 ramp that reaches 1 at
    /// `ramp_time` and stays there. A smooth switch-on keeps the initial
    /// boundary layer of the full solver mild.
    Ramped { profile: Vec<f64>, ramp_time: f64 },
    /// Source that makes the standing mode
    /// `E_z = sin(x) sin(y) cos(t)`, `H = (-sin(x) cos(y), cos(x) sin(y)) sin(t)`
    /// an exact solution of the full system on `[0, pi]^2` with permittivity
    /// `epsilon` and constant conductivity `sigma`.
    StandingMode { epsilon: f64, sigma: f64 },
}

impl Forcing {
    pub fn validate(&self, grid: &StaggeredGrid) -> Result<()> {
        match self {
            Forcing::Zero => Ok(()),
            Forcing::Ramped { profile, ramp_time } => {
                if profile.len() != grid.e_len() {
                    return Err(Error::Shape(format!(
                        "forcing profile has {} samples, grid wants {}",
                        profile.len(),
                        grid.e_len()
                    )));
                }
                if !(*ramp_time > 0.0) {
                    return Err(Error::Parameter(format!("ramp time must be > 0, got {ramp_time}")));
                }
                Ok(())
            }
            Forcing::StandingMode { epsilon, sigma } => {
                if grid.dim() != 2 {
                    return Err(Error::Unsupported("standing-mode source is 2D only".into()));
                }
                if !(*epsilon >= 0.0 && *sigma >= 0.0) {
                    return Err(Error::Parameter("standing mode needs epsilon, sigma >= 0".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }

    /// Sample the source at time `t` on the electric locations.
    pub fn eval(&self, grid: &StaggeredGrid, t: f64) -> Result<Vec<f64>> {
        match self {
            Forcing::Zero => Ok(vec![0.0; grid.e_len()]),
            Forcing::Ramped { profile, ramp_time } => {
                let w = smoothstep(t / ramp_time);
                Ok(profile.iter().map(|&p| w * p).collect())
            }
            Forcing::StandingMode { epsilon, sigma } => {
                let amp = (2.0 - epsilon) * t.sin() + sigma * t.cos();
                let mut out = Vec::with_capacity(grid.e_len());
                for pos in grid.e_positions() {
                    out.push(pos[0].sin() * pos[1].sin() * amp);
                }
                Ok(out)
            }
        }
    }
}

/// C^1 ramp: 0 at u <= 0, 1 at u >= 1, cubic in between.
fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * (3.0 - 2.0 * u)
    }
}

/// Exact standing-mode fields used for convergence measurement.
pub mod standing_mode {
    use super::*;

    /// Electric field `E_z` at time `t` on the electric sample set.
    pub fn electric(grid: &StaggeredGrid, t: f64) -> Vec<f64> {
        grid.e_positions()
            .iter()
            .map(|p| p[0].sin() * p[1].sin() * t.cos())
            .collect()
    }

    /// Magnetic field `(H_x, H_y)` at time `t` on the magnetic sample set.
    pub fn magnetic(grid: &StaggeredGrid, t: f64) -> Vec<f64> {
        let [nx, ny, _] = [grid.cells()[0], grid.cells()[1], 0];
        let [hx, hy] = [grid.spacing()[0], grid.spacing()[1]];
        let mut out = Vec::with_capacity(grid.len_of(Location::Magnetic));
        let s = t.sin();
        for j in 0..ny {
            for i in 0..=nx {
                let x = i as f64 * hx;
                let y = (j as f64 + 0.5) * hy;
                out.push(-x.sin() * y.cos() * s);
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                let x = (i as f64 + 0.5) * hx;
                let y = j as f64 * hy;
                out.push(x.cos() * y.sin() * s);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_is_monotone_and_saturates() {
        let grid = StaggeredGrid::new_2d(4, 4, 1.0, 1.0).unwrap();
        let f = Forcing::Ramped { profile: vec![2.0; grid.e_len()], ramp_time: 0.5 };
        f.validate(&grid).unwrap();
        let mut prev = -1.0;
        for k in 0..=20 {
            let t = 0.05 * k as f64;
            let v = f.eval(&grid, t).unwrap()[0];
            assert!(v >= prev);
            prev = v;
        }
        assert_eq!(f.eval(&grid, 0.5).unwrap()[0], 2.0);
        assert_eq!(f.eval(&grid, 9.0).unwrap()[0], 2.0);
        assert_eq!(f.eval(&grid, 0.0).unwrap()[0], 0.0);
    }

    #[test]
    fn standing_mode_satisfies_equations_to_truncation() {
        // Residual of the two discrete equations on the exact fields
        // should shrink at second order in h.
        let mut errs = Vec::new();
        for n in [16usize, 32] {
            let grid = StaggeredGrid::new_2d(n, n, std::f64::consts::PI, std::f64::consts::PI).unwrap();
            let (eps, sigma, t) = (0.3, 1.2, 0.7);
            let f = Forcing::StandingMode { epsilon: eps, sigma };
            let e = standing_mode::electric(&grid, t);
            let h = standing_mode::magnetic(&grid, t);
            // eps dE/dt + sigma E - curl_h H - F = 0 at interior nodes.
            let e_t: Vec<f64> = grid
                .e_positions()
                .iter()
                .map(|p| -p[0].sin() * p[1].sin() * t.sin())
                .collect();
            let curl = grid.curl_h(&h).unwrap();
            let src = f.eval(&grid, t).unwrap();
            let mask = grid.pec_mask();
            let mut worst: f64 = 0.0;
            for i in 0..e.len() {
                if mask[i] {
                    continue;
                }
                let r = eps * e_t[i] + sigma * e[i] - curl[i] - src[i];
                worst = worst.max(r.abs());
            }
            // dH/dt + curl_e E = 0 everywhere.
            let h_t: Vec<f64> = standing_mode::magnetic(&grid, t)
                .iter()
                .map(|v| v / t.sin() * t.cos())
                .collect();
            let ce = grid.curl_e(&e).unwrap();
            for i in 0..h.len() {
                worst = worst.max((h_t[i] + ce[i]).abs());
            }
            errs.push(worst);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.8, "orders {errs:?} -> {order}");
    }
}
