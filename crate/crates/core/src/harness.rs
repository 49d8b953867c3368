//! Experiment drivers: the vanishing-permittivity sweep comparing the
//! full solver against the quasi-static one, and manufactured-solution
//! convergence studies for both solvers.

use sha2::{Digest, Sha256};

use crate::conductivity::Medium;
use crate::error::{Error, Result};
use crate::forcing::{standing_mode, Forcing};
use crate::grid::{Location, StaggeredGrid};
use crate::solver_full::{cfl_dt, run_full, FullSolverConfig};
use crate::solver_qs::{qs_electric_field, run_qs, QsSolverConfig};
use crate::trajectory::{solution_gap, spacetime_gap, FieldSelect, SnapshotPlan};

/// One permittivity level of the sweep.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    /// Space-time L^2 gap of the electric fields.
    pub e_gap_l2: f64,
    /// `sup_t ||H_eps(t) - H_qs(t)||_{L^2}` over the snapshot times.
    pub h_gap_linf_l2: f64,
    /// Space-time gap of the conducted currents in the dual exponent
    /// `(p+2)/(p+1)` of the growth class.
    pub dissipation_gap: f64,
    /// Wall time of the full-solver run; excluded from the fingerprint.
    pub wall_secs: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln h_gap` against `ln epsilon`; recorded
    /// for inspection, not asserted. Absent for single-level sweeps.
    pub slope: Option<f64>,
    /// Root-mean-square residual of the slope fit.
    pub slope_residual: Option<f64>,
    /// H-gap non-increasing in epsilon within 5% slack and the last gap
    /// at most a fifth of the first.
    pub confirming: bool,
    /// Hex digest over the gap columns; wall time excluded so repeated
    /// runs of the same configuration fingerprint identically.
    pub fingerprint: String,
}

#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub eps_list: Vec<f64>,
    pub t_final: f64,
    /// Number of uniform comparison times in `(0, T]`.
    pub snapshots: usize,
    pub cfl_safety: f64,
    pub qs: QsSolverConfig,
    pub full_step_cap: usize,
    /// Worker threads for the per-epsilon full runs (1 = serial).
    pub threads: usize,
}

impl Default for SweepSetup {
    fn default() -> Self {
        Self {
            eps_list: vec![1e-1, 1e-2, 1e-3, 1e-4],
            t_final: 0.5,
            snapshots: 10,
            cfl_safety: 0.7,
            qs: QsSolverConfig { t_final: 0.5, delta: 1e-3, ..Default::default() },
            full_step_cap: 50_000_000,
            threads: 1,
        }
    }
}

impl SweepSetup {
    fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::Config("sweep needs at least one permittivity".into()));
        }
        for w in self.eps_list.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::Config("sweep permittivities must be strictly decreasing".into()));
            }
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Config("sweep permittivities must be > 0".into()));
        }
        if self.snapshots == 0 {
            return Err(Error::Config("sweep needs at least one comparison time".into()));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::Config(format!("final time must be > 0, got {}", self.t_final)));
        }
        if self.threads == 0 {
            return Err(Error::Config("thread count must be >= 1".into()));
        }
        if (self.qs.t_final - self.t_final).abs() > 1e-12 * self.t_final {
            return Err(Error::Config("quasi-static horizon must match the sweep horizon".into()));
        }
        Ok(())
    }
}

/// Run the vanishing-permittivity comparison. The quasi-static reference
/// is computed once; each full run starts from the quasi-static electric
/// field at `t = 0` so the comparison is free of the initial layer.
pub fn run_sweep(
    grid: &StaggeredGrid,
    medium: &Medium,
    forcing: &Forcing,
    h0: &[f64],
    setup: &SweepSetup,
) -> Result<SweepReport> {
    setup.validate()?;
    let snap_dt = setup.t_final / setup.snapshots as f64;
    let times: Vec<f64> = (1..=setup.snapshots).map(|k| k as f64 * snap_dt).collect();
    let plan = SnapshotPlan::AtTimes(times);

    let qs_run = run_qs(grid, medium, forcing, h0, &setup.qs, &plan)?;
    let f0 = forcing.eval(grid, 0.0)?;
    let (e0, _) = qs_electric_field(grid, medium, h0, &f0, setup.qs.delta)?;

    let p = medium.growth_exponent();
    let dual_q = (p + 2.0) / (p + 1.0);

    let worker = |eps: f64| -> Result<SweepRow> {
        let started = std::time::Instant::now();
        let dt_raw = cfl_dt(grid, eps, setup.cfl_safety);
        let per_snap = (snap_dt / dt_raw).ceil().max(1.0);
        let config = FullSolverConfig {
            epsilon: eps,
            t_final: setup.t_final,
            cfl_safety: setup.cfl_safety,
            dt_override: Some(snap_dt / per_snap),
            step_cap: setup.full_step_cap,
        };
        let full = run_full(grid, medium, forcing, &e0, h0, &config, &plan)?;
        Ok(SweepRow {
            epsilon: eps,
            e_gap_l2: spacetime_gap(
                &full.trajectory,
                &qs_run.trajectory,
                FieldSelect::Electric,
                2.0,
                2.0,
            )?,
            h_gap_linf_l2: solution_gap(&full.trajectory, &qs_run.trajectory, FieldSelect::Magnetic)?,
            dissipation_gap: spacetime_gap(
                &full.trajectory,
                &qs_run.trajectory,
                FieldSelect::Current,
                dual_q,
                dual_q,
            )?,
            wall_secs: started.elapsed().as_secs_f64(),
        })
    };

    let rows: Vec<SweepRow> = if setup.threads <= 1 || setup.eps_list.len() <= 1 {
        setup.eps_list.iter().map(|&e| worker(e)).collect::<Result<_>>()?
    } else {
        let mut out: Vec<Option<Result<SweepRow>>> = Vec::new();
        out.resize_with(setup.eps_list.len(), || None);
        let slots = std::sync::Mutex::new(&mut out);
        let next = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..setup.threads.min(setup.eps_list.len()) {
                scope.spawn(|| loop {
                    let k = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if k >= setup.eps_list.len() {
                        break;
                    }
                    let row = worker(setup.eps_list[k]);
                    slots.lock().unwrap()[k] = Some(row);
                });
            }
        });
        out.into_iter().map(|r| r.expect("worker filled slot")).collect::<Result<_>>()?
    };

    let (slope, slope_residual) = fit_line(
        &rows.iter().map(|r| r.epsilon.ln()).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.h_gap_linf_l2.max(1e-300).ln()).collect::<Vec<_>>(),
    );
    let mut confirming = rows
        .windows(2)
        .all(|w| w[1].h_gap_linf_l2 <= w[0].h_gap_linf_l2 * 1.05);
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        if rows.len() > 1 {
            confirming &= last.h_gap_linf_l2 <= 0.2 * first.h_gap_linf_l2;
        }
    }

    let mut hasher = Sha256::new();
    hasher.update((grid.dim() as u64).to_le_bytes());
    for c in grid.cells() {
        hasher.update((*c as u64).to_le_bytes());
    }
    for s in grid.spacing() {
        hasher.update(s.to_bits().to_le_bytes());
    }
    hasher.update(setup.t_final.to_bits().to_le_bytes());
    hasher.update((setup.snapshots as u64).to_le_bytes());
    hasher.update(setup.cfl_safety.to_bits().to_le_bytes());
    hasher.update(setup.qs.delta.to_bits().to_le_bytes());
    for r in &rows {
        hasher.update(r.epsilon.to_bits().to_le_bytes());
        hasher.update(r.e_gap_l2.to_bits().to_le_bytes());
        hasher.update(r.h_gap_linf_l2.to_bits().to_le_bytes());
        hasher.update(r.dissipation_gap.to_bits().to_le_bytes());
    }
    let fingerprint = hex(&hasher.finalize());

    Ok(SweepReport { rows, slope, slope_residual, confirming, fingerprint })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn fit_line(x: &[f64], y: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return (None, None);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let fit = my + slope * (a - mx);
            (b - fit) * (b - fit)
        })
        .sum();
    (Some(slope), Some((ss / n).sqrt()))
}

/// Result of a refinement study: per-level errors and the observed orders
/// between consecutive levels.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceReport {
    pub resolutions: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

impl ConvergenceReport {
    fn from_errors(resolutions: Vec<f64>, errors: Vec<f64>) -> Self {
        let orders = errors
            .windows(2)
            .zip(resolutions.windows(2))
            .map(|(e, r)| (e[0] / e[1]).ln() / (r[0] / r[1]).ln())
            .collect();
        Self { resolutions, errors, orders }
    }

    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Spatial convergence of the full solver against the manufactured
/// standing mode on `[0, pi]^2`. The step is tied to `h^2` so the time
/// error rides below the spatial one.
pub fn mms_full_study(
    levels: &[usize],
    epsilon: f64,
    sigma: f64,
    t_final: f64,
) -> Result<ConvergenceReport> {
    if levels.len() < 2 {
        return Err(Error::Config("spatial study needs at least two levels".into()));
    }
    let medium = Medium::uniform(crate::conductivity::ConductivityGraph::Constant { sigma })?;
    let forcing = Forcing::StandingMode { epsilon, sigma };
    let mut errors = Vec::new();
    let mut hs = Vec::new();
    for &n in levels {
        let grid = StaggeredGrid::new_2d(n, n, std::f64::consts::PI, std::f64::consts::PI)?;
        let h = grid.h_min();
        let dt_target = (0.3 * h * h).min(cfl_dt(&grid, epsilon, 0.7));
        let steps = (t_final / dt_target).ceil();
        let config = FullSolverConfig {
            epsilon,
            t_final,
            cfl_safety: 0.7,
            dt_override: Some(t_final / steps),
            step_cap: 50_000_000,
        };
        let e0 = standing_mode::electric(&grid, 0.0);
        let h0 = standing_mode::magnetic(&grid, 0.0);
        let run = run_full(&grid, &medium, &forcing, &e0, &h0, &config, &SnapshotPlan::None)?;
        let exact = standing_mode::electric(&grid, t_final);
        let diff: Vec<f64> = run.e_final.iter().zip(&exact).map(|(a, b)| a - b).collect();
        errors.push(grid.lq_norm(Location::Electric, &diff, 2.0)?);
        hs.push(h);
    }
    Ok(ConvergenceReport::from_errors(hs, errors))
}

/// Temporal convergence of the quasi-static solver at fixed resolution:
/// errors of forced-step runs against a reference run with a step
/// `refine`-times smaller than the finest level.
pub fn mms_qs_study(
    n: usize,
    sigma: f64,
    t_final: f64,
    dt_levels: &[f64],
    refine: f64,
) -> Result<ConvergenceReport> {
    if dt_levels.len() < 2 {
        return Err(Error::Config("temporal study needs at least two levels".into()));
    }
    for w in dt_levels.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Config("temporal levels must be strictly decreasing".into()));
        }
    }
    if !(refine > 1.0) {
        return Err(Error::Config("reference refinement must exceed 1".into()));
    }
    let grid = StaggeredGrid::new_2d(n, n, std::f64::consts::PI, std::f64::consts::PI)?;
    let medium = Medium::uniform(crate::conductivity::ConductivityGraph::Constant { sigma })?;
    let e: Vec<f64> = grid
        .e_positions()
        .iter()
        .map(|p| p[0].sin() * p[1].sin())
        .collect();
    let h0 = grid.curl_e(&e)?;
    let stability = 0.9 * grid.h_min() * grid.h_min() * sigma / (2.0 * grid.dim() as f64);
    if dt_levels[0] > stability {
        return Err(Error::Config(format!(
            "coarsest step {} exceeds the diffusion bound {stability}",
            dt_levels[0]
        )));
    }
    let run_at = |dt: f64| -> Result<Vec<f64>> {
        let cfg = QsSolverConfig { t_final, dt_max: dt, ..Default::default() };
        Ok(run_qs(&grid, &medium, &Forcing::Zero, &h0, &cfg, &SnapshotPlan::None)?.h_final)
    };
    let reference = run_at(dt_levels[dt_levels.len() - 1] / refine)?;
    let mut errors = Vec::new();
    for &dt in dt_levels {
        let h_final = run_at(dt)?;
        let diff: Vec<f64> = h_final.iter().zip(&reference).map(|(a, b)| a - b).collect();
        errors.push(grid.lq_norm(Location::Magnetic, &diff, 2.0)?);
    }
    Ok(ConvergenceReport::from_errors(dt_levels.to_vec(), errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductivity::ConductivityGraph;

    #[test]
    fn slope_fit_oracle() {
        let x = [0.0, 1.0, 2.0];
        let y = [1.0, 3.0, 5.0];
        let (slope, resid) = fit_line(&x, &y);
        assert!((slope.unwrap() - 2.0).abs() <= 1e-14);
        assert!(resid.unwrap() <= 1e-14);
        assert_eq!(fit_line(&[1.0], &[1.0]), (None, None));
    }

    #[test]
    fn convergence_report_orders() {
        let rep = ConvergenceReport::from_errors(vec![0.2, 0.1, 0.05], vec![4e-2, 1e-2, 2.5e-3]);
        for o in &rep.orders {
            assert!((o - 2.0).abs() <= 1e-12);
        }
        assert!((rep.min_order() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn sweep_setup_validation() {
        let grid = StaggeredGrid::new_2d(8, 8, 1.0, 1.0).unwrap();
        let medium = Medium::uniform(ConductivityGraph::Constant { sigma: 1.0 }).unwrap();
        let h0 = vec![0.0; grid.h_len()];
        let bad = SweepSetup { eps_list: vec![1e-2, 1e-1], ..Default::default() };
        assert!(run_sweep(&grid, &medium, &Forcing::Zero, &h0, &bad).is_err());
        let bad = SweepSetup { snapshots: 0, ..Default::default() };
        assert!(run_sweep(&grid, &medium, &Forcing::Zero, &h0, &bad).is_err());
    }

    #[test]
    fn small_sweep_confirms_and_fingerprint_is_stable() {
        let grid =
            StaggeredGrid::new_2d(12, 12, std::f64::consts::PI, std::f64::consts::PI).unwrap();
        let medium = Medium::uniform(ConductivityGraph::Constant { sigma: 1.0 }).unwrap();
        let e: Vec<f64> = grid
            .e_positions()
            .iter()
            .map(|p| p[0].sin() * p[1].sin())
            .collect();
        let h0 = grid.curl_e(&e).unwrap();
        let setup = SweepSetup {
            eps_list: vec![1e-1, 1e-2, 1e-3],
            t_final: 0.25,
            snapshots: 5,
            qs: QsSolverConfig { t_final: 0.25, ..Default::default() },
            ..Default::default()
        };
        let a = run_sweep(&grid, &medium, &Forcing::Zero, &h0, &setup).unwrap();
        assert!(a.confirming, "{:?}", a.rows);
        assert!(a.slope.unwrap() > 0.0, "slope {:?}", a.slope);
        // Same setup again, and with threads, reproduces the digest.
        let b = run_sweep(&grid, &medium, &Forcing::Zero, &h0, &setup).unwrap();
        assert_eq!(a.fingerprint, b.fingerprint);
        let threaded = SweepSetup { threads: 3, ..setup };
        let c = run_sweep(&grid, &medium, &Forcing::Zero, &h0, &threaded).unwrap();
        assert_eq!(a.fingerprint, c.fingerprint);
    }

    #[test]
    fn mms_studies_converge() {
        let rep = mms_full_study(&[8, 16], 1.0, 1.0, 0.25).unwrap();
        assert!(rep.min_order() > 1.5, "{rep:?}");
        let rep = mms_qs_study(24, 1.0, 0.2, &[2e-3, 1e-3], 8.0).unwrap();
        assert!(rep.min_order() > 0.8, "{rep:?}");
    }
}
