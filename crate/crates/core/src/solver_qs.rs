//! Explicit solver for the quasi-static (zero permittivity) system
//! `H_t + curl E = 0`, `sigma(|E|) E = curl H + F`,
//! a degenerate nonlinear diffusion equation for `H`. The electric field
//! is recovered pointwise through the stationary resolvent; below the
//! small-signal threshold `delta` the inversion is linearized with the
//! secant conductivity at `delta`, which keeps the map continuous and
//! leaves laws with `sigma` constant near zero exactly unchanged.

use crate::conductivity::{ConductivityGraph, Medium};
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::grid::{Location, StaggeredGrid};
use crate::trajectory::{EnergyRecord, SnapshotPlan, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QsSolverConfig {
    pub t_final: f64,
    /// Small-signal threshold of the stationary inversion.
    pub delta: f64,
    /// Fraction of the diffusion stability bound used for the step.
    pub diffusion_safety: f64,
    /// Upper bound on the adaptive step.
    pub dt_max: f64,
    /// Half-width of the band around the jump magnitude reported as the
    /// free-boundary cell set.
    pub interface_tol: f64,
    pub step_cap: usize,
}

impl Default for QsSolverConfig {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            delta: 1e-4,
            diffusion_safety: 0.5,
            dt_max: f64::INFINITY,
            interface_tol: 1e-2,
            step_cap: 50_000_000,
        }
    }
}

impl QsSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("final time must be > 0, got {}", self.t_final)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("threshold delta must be > 0, got {}", self.delta)));
        }
        if !(self.diffusion_safety > 0.0 && self.diffusion_safety <= 1.0) {
            return Err(Error::Config(format!(
                "diffusion safety must be in (0, 1], got {}",
                self.diffusion_safety
            )));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::Config(format!("dt_max must be > 0, got {}", self.dt_max)));
        }
        if !(self.interface_tol > 0.0) {
            return Err(Error::Config(format!(
                "interface tolerance must be > 0, got {}",
                self.interface_tol
            )));
        }
        if self.step_cap == 0 {
            return Err(Error::Config("step cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Initial magnetic data must be discretely divergence free.
pub(crate) fn check_solenoidal(grid: &StaggeredGrid, h: &[f64]) -> Result<()> {
    let scale = 1.0 + h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let div = grid.div_h(h)?;
    let worst = div.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if worst > 1e-12 * scale {
        return Err(Error::Config(format!(
            "initial magnetic field is not divergence free: max |div| = {worst}"
        )));
    }
    Ok(())
}

/// Secant conductivity `delta / s(delta)` used below the threshold.
fn sigma_floor(graph: &ConductivityGraph, delta: f64) -> Result<f64> {
    let res = graph.resolve(0.0, delta)?;
    Ok(delta / res.s)
}

/// Recover `E` and the effective conductivity from `H` at one instant:
/// `G = curl H + F`, then invert `sigma(|E|) E = G` pointwise. Entries
/// carrying the PEC constraint return `E = 0` with `sigma_eff = 0`.
pub fn qs_electric_field(
    grid: &StaggeredGrid,
    medium: &Medium,
    h: &[f64],
    f: &[f64],
    delta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if h.len() != grid.h_len() || f.len() != grid.e_len() {
        return Err(Error::Shape("field lengths do not match the grid".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("threshold delta must be > 0, got {delta}")));
    }
    medium.stationary_ok()?;
    let floors: Vec<f64> = medium
        .graphs()
        .iter()
        .map(|g| sigma_floor(g, delta))
        .collect::<Result<_>>()?;
    let curl = grid.curl_h(h)?;
    let mask = grid.pec_mask();
    let mut e = vec![0.0; grid.e_len()];
    let mut sigma_eff = vec![0.0; grid.e_len()];
    for i in 0..e.len() {
        if mask[i] {
            continue;
        }
        let g = curl[i] + f[i];
        let r = g.abs();
        if r >= delta {
            let res = medium.graph_at(i).resolve(0.0, r)?;
            e[i] = if g >= 0.0 { res.s } else { -res.s };
            sigma_eff[i] = res.sigma_eff;
        } else {
            let floor = floors[medium.slot_at(i)];
            e[i] = g / floor;
            sigma_eff[i] = floor;
        }
    }
    Ok((e, sigma_eff))
}

/// Electric sample indices whose magnitude sits within `tol` of the jump
/// magnitude `s_star`, the discrete free-boundary band. No structure
/// beyond membership is claimed.
pub fn interface_cells(grid: &StaggeredGrid, e: &[f64], s_star: f64, tol: f64) -> Result<Vec<usize>> {
    if e.len() != grid.e_len() {
        return Err(Error::Shape("electric field does not match the grid".into()));
    }
    if !(tol > 0.0) || !(s_star > 0.0) {
        return Err(Error::Parameter(format!(
            "interface extraction needs s_star > 0 and tol > 0, got {s_star}, {tol}"
        )));
    }
    Ok(e.iter()
        .enumerate()
        .filter(|(_, v)| (v.abs() - s_star).abs() <= tol)
        .map(|(i, _)| i)
        .collect())
}

/// Output of a quasi-static run.
#[derive(Debug, Clone)]
pub struct QsRun {
    pub records: Vec<EnergyRecord>,
    pub trajectory: Trajectory,
    pub e_final: Vec<f64>,
    pub h_final: Vec<f64>,
    pub steps: usize,
    /// Smallest step the adaptive controller took.
    pub dt_min_taken: f64,
}

/// Advance the quasi-static system from `h0`. The step adapts to the
/// current effective conductivity: the scheme is forward Euler on a
/// diffusion problem with diffusivity up to `1/sigma_min`, so
/// `dt <= safety * h_min^2 * sigma_min / (2 dim)`. Snapshot times are hit
/// exactly by clipping the step.
pub fn run_qs(
    grid: &StaggeredGrid,
    medium: &Medium,
    forcing: &Forcing,
    h0: &[f64],
    config: &QsSolverConfig,
    plan: &SnapshotPlan,
) -> Result<QsRun> {
    config.validate()?;
    forcing.validate(grid)?;
    plan.validate(config.t_final)?;
    if h0.len() != grid.h_len() {
        return Err(Error::Shape("initial magnetic field does not match the grid".into()));
    }
    check_solenoidal(grid, h0)?;

    let mask = grid.pec_mask();
    let vol = grid.cell_volume();
    let dim = grid.dim() as f64;
    let h_min = grid.h_min();
    let dt_floor = 1e-12 * config.t_final;

    let mut h = h0.to_vec();
    let mut t = 0.0f64;
    let mut steps = 0usize;
    let mut dissipation = 0.0f64;
    let mut work = 0.0f64;
    let mut dt_min_taken = f64::INFINITY;
    let mut records = Vec::new();
    let mut trajectory = Trajectory::new(grid.clone());
    let mut snap_cursor = 0usize;

    loop {
        let f = forcing.eval(grid, t)?;
        let (e, sigma_eff) = qs_electric_field(grid, medium, &h, &f, config.delta)?;

        let magnetic = 0.5 * grid.inner_product(Location::Magnetic, &h, &h)?;
        records.push(EnergyRecord { t, electric: 0.0, magnetic, dissipation, work });
        let at_snapshot = match plan {
            SnapshotPlan::None => false,
            SnapshotPlan::EverySteps(k) => steps % k == 0,
            SnapshotPlan::AtTimes(times) => {
                if steps == 0 {
                    true
                } else if snap_cursor < times.len()
                    && (t - times[snap_cursor]).abs() <= 1e-9 * (1.0 + t)
                {
                    snap_cursor += 1;
                    true
                } else {
                    false
                }
            }
        };
        if at_snapshot {
            let current: Vec<f64> = e.iter().zip(&sigma_eff).map(|(v, s)| s * v).collect();
            trajectory.push(t, e.clone(), h.clone(), current)?;
        }

        let remaining = config.t_final - t;
        if remaining <= dt_floor {
            return finish(grid, medium, forcing, config, plan, snap_cursor, records, trajectory, e, h, steps, dt_min_taken);
        }

        let sigma_min = sigma_eff
            .iter()
            .zip(&mask)
            .filter(|(_, m)| !**m)
            .map(|(s, _)| *s)
            .fold(f64::INFINITY, f64::min);
        if !(sigma_min > 0.0) || !sigma_min.is_finite() {
            return Err(Error::Solver(format!("effective conductivity collapsed at t = {t}")));
        }
        let mut dt = (config.diffusion_safety * h_min * h_min * sigma_min / (2.0 * dim))
            .min(config.dt_max)
            .min(remaining);
        if let SnapshotPlan::AtTimes(times) = plan {
            if snap_cursor < times.len() {
                let gap = times[snap_cursor] - t;
                if gap > dt_floor {
                    dt = dt.min(gap);
                }
            }
        }
        if dt < dt_floor {
            return Err(Error::Stiffness(format!(
                "adaptive step {dt} fell below {dt_floor} at t = {t} (sigma_min = {sigma_min})"
            )));
        }
        if steps >= config.step_cap {
            return Err(Error::Config(format!(
                "quasi-static run exceeded the step cap {} before t = {}",
                config.step_cap, config.t_final
            )));
        }

        let curl = grid.curl_e(&e)?;
        for (hv, c) in h.iter_mut().zip(&curl) {
            *hv -= dt * c;
        }
        let mut d_inc = 0.0;
        let mut w_inc = 0.0;
        for i in 0..e.len() {
            d_inc += sigma_eff[i] * e[i] * e[i];
            w_inc += f[i] * e[i];
        }
        if !d_inc.is_finite() {
            return Err(Error::Solver(format!("non-finite fields at t = {t}")));
        }
        dissipation += dt * vol * d_inc;
        work += dt * vol * w_inc;
        t += dt;
        steps += 1;
        dt_min_taken = dt_min_taken.min(dt);
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    _grid: &StaggeredGrid,
    _medium: &Medium,
    _forcing: &Forcing,
    _config: &QsSolverConfig,
    plan: &SnapshotPlan,
    snap_cursor: usize,
    records: Vec<EnergyRecord>,
    trajectory: Trajectory,
    e: Vec<f64>,
    h: Vec<f64>,
    steps: usize,
    dt_min_taken: f64,
) -> Result<QsRun> {
    if let SnapshotPlan::AtTimes(times) = plan {
        if snap_cursor < times.len() {
            return Err(Error::Solver(format!(
                "missed snapshot time {}",
                times[snap_cursor]
            )));
        }
    }
    Ok(QsRun { records, trajectory, e_final: e, h_final: h, steps, dt_min_taken })
}
