//! Time-series containers shared by the two solvers: scalar energy
//! ledgers and field snapshots, plus the norms used to compare runs.

use crate::error::{Error, Result};
use crate::grid::{Location, StaggeredGrid};

/// One row of the scalar energy ledger. `dissipation` and `work` are
/// running time integrals from `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EnergyRecord {
    pub t: f64,
    /// `eps/2 * ||E||^2` (zero for the quasi-static solver).
    pub electric: f64,
    /// `1/2 * ||H||^2`, staggered-in-time product for the leapfrog.
    pub magnetic: f64,
    /// Cumulative ohmic dissipation `int sigma(|E|) |E|^2`.
    pub dissipation: f64,
    /// Cumulative source work `int <F, E>`.
    pub work: f64,
}

impl EnergyRecord {
    pub fn total(&self) -> f64 {
        self.electric + self.magnetic
    }
}

/// Which stored field a comparison addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSelect {
    Electric,
    Magnetic,
    /// The conducted current `sigma_eff(|E|) E`.
    Current,
}

/// When to store field snapshots.
#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotPlan {
    None,
    EverySteps(usize),
    /// Strictly increasing times in `(0, T]`; `t = 0` is always stored.
    AtTimes(Vec<f64>),
}

impl SnapshotPlan {
    pub fn validate(&self, t_final: f64) -> Result<()> {
        match self {
            SnapshotPlan::None => Ok(()),
            SnapshotPlan::EverySteps(k) => {
                if *k == 0 {
                    Err(Error::Parameter("snapshot stride must be >= 1".into()))
                } else {
                    Ok(())
                }
            }
            SnapshotPlan::AtTimes(times) => {
                let mut prev = 0.0;
                for &t in times {
                    if !(t > prev) {
                        return Err(Error::Parameter(
                            "snapshot times must be strictly increasing and > 0".into(),
                        ));
                    }
                    prev = t;
                }
                if prev > t_final * (1.0 + 1e-12) {
                    return Err(Error::Parameter(format!(
                        "snapshot time {prev} exceeds final time {t_final}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Field history of a run. Snapshots share one index: `times[k]` holds the
/// time of `e[k]`, `h[k]`, `current[k]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: StaggeredGrid,
    times: Vec<f64>,
    e: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    current: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(grid: StaggeredGrid) -> Self {
        Self { grid, times: Vec::new(), e: Vec::new(), h: Vec::new(), current: Vec::new() }
    }

    pub fn push(&mut self, t: f64, e: Vec<f64>, h: Vec<f64>, current: Vec<f64>) -> Result<()> {
        if e.len() != self.grid.e_len() || current.len() != self.grid.e_len() {
            return Err(Error::Shape("snapshot electric length mismatch".into()));
        }
        if h.len() != self.grid.h_len() {
            return Err(Error::Shape("snapshot magnetic length mismatch".into()));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::Parameter("snapshot times must increase".into()));
            }
        }
        self.times.push(t);
        self.e.push(e);
        self.h.push(h);
        self.current.push(current);
        Ok(())
    }

    pub fn grid(&self) -> &StaggeredGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn field(&self, sel: FieldSelect, k: usize) -> &[f64] {
        match sel {
            FieldSelect::Electric => &self.e[k],
            FieldSelect::Magnetic => &self.h[k],
            FieldSelect::Current => &self.current[k],
        }
    }

    fn location(sel: FieldSelect) -> Location {
        match sel {
            FieldSelect::Magnetic => Location::Magnetic,
            _ => Location::Electric,
        }
    }
}

/// `L^inf` in time of the spatial `L^2` norm of the difference of two
/// trajectories at matching snapshot times.
pub fn solution_gap(a: &Trajectory, b: &Trajectory, sel: FieldSelect) -> Result<f64> {
    spacetime_gap(a, b, sel, 2.0, f64::INFINITY)
}

/// Space-time norm of the difference of a stored field: `L^{q_space}` in
/// space composed with an `L^{q_time}` quadrature over the snapshot times
/// (trapezoid rule; `q_time = inf` takes the max over snapshots).
pub fn spacetime_gap(
    a: &Trajectory,
    b: &Trajectory,
    sel: FieldSelect,
    q_space: f64,
    q_time: f64,
) -> Result<f64> {
    matched(a, b)?;
    if !(q_time >= 1.0) {
        return Err(Error::Parameter(format!("time exponent must be in [1, inf], got {q_time}")));
    }
    let loc = Trajectory::location(sel);
    let mut acc = 0.0f64;
    let mut worst = 0.0f64;
    for k in 0..a.len() {
        let fa = a.field(sel, k);
        let fb = b.field(sel, k);
        let diff: Vec<f64> = fa.iter().zip(fb).map(|(x, y)| x - y).collect();
        let slab = a.grid.lq_norm(loc, &diff, q_space)?;
        if q_time.is_infinite() {
            worst = worst.max(slab);
        } else {
            acc += trapezoid_weight(&a.times, k) * slab.powf(q_time);
        }
    }
    Ok(if q_time.is_infinite() { worst } else { acc.powf(1.0 / q_time) })
}

/// Per-snapshot uniqueness gap `eps ||E_A - E_B||^2 + ||H_A - H_B||^2`,
/// the discrete quantity bounded by the stability estimate.
pub fn energy_gap_series(
    a: &Trajectory,
    b: &Trajectory,
    epsilon: f64,
) -> Result<Vec<(f64, f64)>> {
    matched(a, b)?;
    if !(epsilon >= 0.0) {
        return Err(Error::Parameter(format!("permittivity weight must be >= 0, got {epsilon}")));
    }
    let mut out = Vec::with_capacity(a.len());
    for k in 0..a.len() {
        let de: Vec<f64> = a.e[k].iter().zip(&b.e[k]).map(|(x, y)| x - y).collect();
        let dh: Vec<f64> = a.h[k].iter().zip(&b.h[k]).map(|(x, y)| x - y).collect();
        let ge = a.grid.inner_product(Location::Electric, &de, &de)?;
        let gh = a.grid.inner_product(Location::Magnetic, &dh, &dh)?;
        out.push((a.times[k], epsilon * ge + gh));
    }
    Ok(out)
}

fn trapezoid_weight(times: &[f64], k: usize) -> f64 {
    if times.len() < 2 {
        return 1.0;
    }
    let left = if k == 0 { 0.0 } else { times[k] - times[k - 1] };
    let right = if k + 1 == times.len() { 0.0 } else { times[k + 1] - times[k] };
    0.5 * (left + right)
}

fn matched(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::Shape("trajectories live on different grids".into()));
    }
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(format!(
            "snapshot counts differ or are empty: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    for (x, y) in a.times.iter().zip(&b.times) {
        if (x - y).abs() > 1e-9 * (1.0 + x.abs()) {
            return Err(Error::Shape(format!("snapshot times differ: {x} vs {y}")));
        }
    }
    Ok(())
}
