//! Leapfrog solver for the full system
//! `eps E_t + sigma(|E|) E = curl H + F`, `H_t + curl E = 0`
//! with PEC boundaries. `H` lives at half-integer times; the stiff
//! conductive term is treated with the backward-Euler resolvent, so the
//! scheme stays dissipative for every monotone law, including jumps.

use crate::conductivity::Medium;
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::grid::{Location, StaggeredGrid};
use crate::trajectory::{EnergyRecord, SnapshotPlan, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullSolverConfig {
    /// Electric permittivity `eps > 0`.
    pub epsilon: f64,
    pub t_final: f64,
    /// Fraction of the CFL bound used when `dt_override` is absent.
    pub cfl_safety: f64,
    /// Fixed step, bypassing the CFL-derived step (still checked against
    /// the stability bound).
    pub dt_override: Option<f64>,
    pub step_cap: usize,
}

impl Default for FullSolverConfig {
    fn default() -> Self {
        Self { epsilon: 1.0, t_final: 1.0, cfl_safety: 0.7, dt_override: None, step_cap: 50_000_000 }
    }
}

impl FullSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("permittivity must be > 0, got {}", self.epsilon)));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("final time must be > 0, got {}", self.t_final)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!("cfl safety must be in (0, 1], got {}", self.cfl_safety)));
        }
        if let Some(dt) = self.dt_override {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::Config(format!("step override must be > 0, got {dt}")));
            }
        }
        if self.step_cap == 0 {
            return Err(Error::Config("step cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Stability bound on the leapfrog step: the wave speed is
/// `1/sqrt(eps)`, so `dt <= safety * sqrt(eps) * h_min / sqrt(dim)`.
pub fn cfl_dt(grid: &StaggeredGrid, epsilon: f64, safety: f64) -> f64 {
    safety * epsilon.sqrt() * grid.h_min() / (grid.dim() as f64).sqrt()
}

/// Output of a full-solver run.
#[derive(Debug, Clone)]
pub struct FullRun {
    pub records: Vec<EnergyRecord>,
    pub trajectory: Trajectory,
    /// Electric field at the final time.
    pub e_final: Vec<f64>,
    /// Magnetic field at the final (integer) time, averaged from the two
    /// adjacent half levels.
    pub h_final: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
}

/// Advance the full system from `t = 0` with initial data `(e0, h0)` at
/// integer time zero. The step is chosen as `t_final / n` with the
/// smallest `n` respecting the CFL bound (or the override), so the run
/// ends exactly at `t_final`.
pub fn run_full(
    grid: &StaggeredGrid,
    medium: &Medium,
    forcing: &Forcing,
    e0: &[f64],
    h0: &[f64],
    config: &FullSolverConfig,
    plan: &SnapshotPlan,
) -> Result<FullRun> {
    config.validate()?;
    forcing.validate(grid)?;
    plan.validate(config.t_final)?;
    if e0.len() != grid.e_len() || h0.len() != grid.h_len() {
        return Err(Error::Shape("initial data does not match the grid".into()));
    }
    crate::solver_qs::check_solenoidal(grid, h0)?;

    let hard_cfl = cfl_dt(grid, config.epsilon, 1.0);
    let dt_raw = match config.dt_override {
        Some(dt) => {
            if dt > hard_cfl * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "step override {dt} exceeds the stability bound {hard_cfl}"
                )));
            }
            dt
        }
        None => cfl_dt(grid, config.epsilon, config.cfl_safety),
    };
    let steps = (config.t_final / dt_raw).ceil().max(1.0) as usize;
    if steps > config.step_cap {
        return Err(Error::Config(format!(
            "run needs {steps} steps, exceeding the cap {}",
            config.step_cap
        )));
    }
    let dt = config.t_final / steps as f64;
    let lambda = config.epsilon / dt;
    let mask = grid.pec_mask();
    let vol = grid.cell_volume();

    let mut e = e0.to_vec();
    grid.apply_pec(&mut e)?;
    // Backward half step initializes the lagged level H^{-1/2}.
    let ce0 = grid.curl_e(&e)?;
    let mut h_prev: Vec<f64> = h0.iter().zip(&ce0).map(|(h, c)| h + 0.5 * dt * c).collect();

    let mut sigma_eff: Vec<f64> = (0..e.len())
        .map(|i| medium.graph_at(i).sigma_mid(e[i].abs()))
        .collect();
    let mut dissipation = 0.0f64;
    let mut work = 0.0f64;
    let mut records = Vec::with_capacity(steps + 1);
    let mut trajectory = Trajectory::new(grid.clone());
    let mut snap_cursor = 0usize;
    let mut h_next = Vec::new();

    for n in 0..=steps {
        let t = n as f64 * dt;
        h_next = h_prev.iter().zip(grid.curl_e(&e)?.iter()).map(|(h, c)| h - dt * c).collect();
        let electric = 0.5 * config.epsilon * grid.inner_product(Location::Electric, &e, &e)?;
        let magnetic = 0.5 * grid.inner_product(Location::Magnetic, &h_prev, &h_next)?;
        records.push(EnergyRecord { t, electric, magnetic, dissipation, work });

        if snapshot_due(plan, n, steps, t, dt, &mut snap_cursor) {
            let h_int: Vec<f64> =
                h_prev.iter().zip(&h_next).map(|(a, b)| 0.5 * (a + b)).collect();
            let current: Vec<f64> = e.iter().zip(&sigma_eff).map(|(v, s)| s * v).collect();
            trajectory.push(t, e.clone(), h_int, current)?;
        }
        if n == steps {
            break;
        }

        let curl = grid.curl_h(&h_next)?;
        let f = forcing.eval(grid, t + 0.5 * dt)?;
        let mut d_inc = 0.0f64;
        let mut w_inc = 0.0f64;
        for i in 0..e.len() {
            if mask[i] {
                e[i] = 0.0;
                continue;
            }
            let r = lambda * e[i] + curl[i] + f[i];
            let res = medium.graph_at(i).resolve(lambda, r.abs())?;
            e[i] = if r >= 0.0 { res.s } else { -res.s };
            sigma_eff[i] = res.sigma_eff;
            d_inc += res.sigma_eff * e[i] * e[i];
            w_inc += f[i] * e[i];
        }
        if !d_inc.is_finite() || !w_inc.is_finite() {
            return Err(Error::Solver(format!("non-finite fields at t = {t}")));
        }
        dissipation += dt * vol * d_inc;
        work += dt * vol * w_inc;
        h_prev = h_next.clone();
    }

    if let SnapshotPlan::AtTimes(times) = plan {
        if snap_cursor < times.len() {
            return Err(Error::Config(format!(
                "snapshot time {} is not a multiple of the step {dt}",
                times[snap_cursor]
            )));
        }
    }

    let h_final: Vec<f64> = h_prev.iter().zip(&h_next).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(FullRun { records, trajectory, e_final: e, h_final, dt, steps })
}

fn snapshot_due(
    plan: &SnapshotPlan,
    n: usize,
    steps: usize,
    t: f64,
    dt: f64,
    cursor: &mut usize,
) -> bool {
    match plan {
        SnapshotPlan::None => false,
        SnapshotPlan::EverySteps(k) => n % k == 0 || n == steps,
        SnapshotPlan::AtTimes(times) => {
            if n == 0 {
                return true;
            }
            if *cursor < times.len() && (t - times[*cursor]).abs() <= 1e-9 * (1.0 + dt) {
                *cursor += 1;
                true
            } else {
                false
            }
        }
    }
}
