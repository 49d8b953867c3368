//! JSON scenario configuration: parsing with full error collection, and
//! construction of the runtime objects (grid, medium, forcing, initial
//! data) the solvers consume.

use serde::{Deserialize, Serialize};

use crate::conductivity::{ConductivityGraph, GrowthRequest, Medium};
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::grid::StaggeredGrid;
use crate::solver_full::FullSolverConfig;
use crate::solver_qs::{qs_electric_field, QsSolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub graph: GraphConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialConfig>,
    pub initial: InitialConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    pub solver: SolverBlock,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mms: Option<MmsConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub extents: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GraphConfig {
    PowerLaw { p: f64 },
    Step {
        a: f64,
        b: f64,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    Smoothed { m: f64, base: Box<GraphConfig> },
    Constant { sigma: f64 },
}

fn default_threshold() -> f64 {
    1.0
}

impl GraphConfig {
    pub fn to_graph(&self) -> ConductivityGraph {
        match self {
            GraphConfig::PowerLaw { p } => ConductivityGraph::PowerLaw { p: *p },
            GraphConfig::Step { a, b, threshold } => {
                ConductivityGraph::Step { a: *a, b: *b, threshold: *threshold }
            }
            GraphConfig::PiecewiseLinear { knots } => {
                ConductivityGraph::PiecewiseLinear { knots: knots.clone() }
            }
            GraphConfig::Smoothed { m, base } => {
                ConductivityGraph::Smoothed { m: *m, base: Box::new(base.to_graph()) }
            }
            GraphConfig::Constant { sigma } => ConductivityGraph::Constant { sigma: *sigma },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub graph: GraphConfig,
    pub region: RegionConfig,
}

/// Spatial region selecting the secondary material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionConfig {
    XAbove { x: f64 },
    Disk { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum InitialConfig {
    Zero,
    SolenoidalMode {
        wavenumbers: Vec<usize>,
        amplitude: f64,
        #[serde(default)]
        electric: ElectricInit,
    },
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        electric: ElectricInit,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ElectricInit {
    #[default]
    Zero,
    /// Solve the stationary relation at `t = 0` so the full solver starts
    /// on the quasi-static manifold.
    QsConsistent,
    /// The potential itself, PEC-clipped.
    Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum ForcingConfig {
    #[default]
    Zero,
    Ramped { profile: ProfileConfig, ramp_time: f64 },
    /// Manufactured standing-mode source; requires the full solver and a
    /// constant law, from which its coefficients are taken.
    StandingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileConfig {
    Mode { wavenumbers: Vec<usize>, amplitude: f64 },
    Uniform { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SolverBlock {
    Full {
        epsilon: f64,
        t_final: f64,
        #[serde(default = "default_cfl")]
        cfl_safety: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
    },
    Qs {
        t_final: f64,
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default = "default_interface_tol")]
        interface_tol: f64,
        #[serde(default = "default_diffusion_safety")]
        diffusion_safety: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt_max: Option<f64>,
    },
}

fn default_cfl() -> f64 {
    0.7
}
fn default_delta() -> f64 {
    1e-4
}
fn default_interface_tol() -> f64 {
    1e-2
}
fn default_diffusion_safety() -> f64 {
    0.5
}

impl SolverBlock {
    pub fn t_final(&self) -> f64 {
        match self {
            SolverBlock::Full { t_final, .. } | SolverBlock::Qs { t_final, .. } => *t_final,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_ledger")]
    pub ledger: String,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default)]
    pub write_snapshots: bool,
    #[serde(default)]
    pub write_interface: bool,
}

fn default_ledger() -> String {
    "ledger.csv".into()
}
fn default_report() -> String {
    "report.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            ledger: default_ledger(),
            report: default_report(),
            snapshot_stride: None,
            snapshot_times: None,
            write_snapshots: false,
            write_interface: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub eps_list: Vec<f64>,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
}

fn default_snapshots() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub p: f64,
    pub a0: f64,
    #[serde(default)]
    pub a1: f64,
    pub b0: f64,
    #[serde(default)]
    pub m0: f64,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
}

fn default_s_max() -> f64 {
    8.0
}
fn default_n_samples() -> usize {
    200
}

impl GrowthConfig {
    pub fn to_request(&self) -> GrowthRequest {
        GrowthRequest {
            p: self.p,
            a0: self.a0,
            a1: self.a1,
            b0: self.b0,
            m0: self.m0,
            s_max: self.s_max,
            n_samples: self.n_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmsConfig {
    #[serde(default = "default_levels")]
    pub spatial_levels: Vec<usize>,
    #[serde(default = "default_one")]
    pub epsilon: f64,
    #[serde(default = "default_one")]
    pub sigma: f64,
    #[serde(default = "default_mms_t")]
    pub t_final: f64,
    #[serde(default = "default_temporal_n")]
    pub temporal_cells: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dt_levels: Vec<f64>,
    #[serde(default = "default_refine")]
    pub reference_refine: f64,
}

fn default_levels() -> Vec<usize> {
    vec![16, 32, 64]
}
fn default_one() -> f64 {
    1.0
}
fn default_mms_t() -> f64 {
    0.5
}
fn default_temporal_n() -> usize {
    64
}
fn default_refine() -> f64 {
    8.0
}

impl Default for MmsConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

/// Parse a JSON scenario. Syntax errors carry line/column from the JSON
/// parser; semantic problems are collected exhaustively and reported as
/// one configuration error.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("JSON parse failure: {e}")))?;
    let mut errors = Vec::new();
    cfg.collect_errors(&mut errors);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(format!(
            "{} validation error(s): {}",
            errors.len(),
            errors.join("; ")
        )))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.collect_errors(&mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{} validation error(s): {}",
                errors.len(),
                errors.join("; ")
            )))
        }
    }

    fn collect_errors(&self, errors: &mut Vec<String>) {
        let g = &self.grid;
        if g.dim != 2 && g.dim != 3 {
            errors.push(format!("grid.dim must be 2 or 3, got {}", g.dim));
        }
        if g.cells.len() != g.dim {
            errors.push(format!(
                "grid.cells has {} entries for dimension {}",
                g.cells.len(),
                g.dim
            ));
        }
        if g.extents.len() != g.dim {
            errors.push(format!(
                "grid.extents has {} entries for dimension {}",
                g.extents.len(),
                g.dim
            ));
        }
        if g.cells.iter().any(|&c| c < 2) {
            errors.push("grid.cells entries must be >= 2".into());
        }
        if g.extents.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            errors.push("grid.extents entries must be positive and finite".into());
        }

        if let Err(e) = self.graph.to_graph().validate() {
            errors.push(format!("graph: {e}"));
        }
        if let Some(mat) = &self.material {
            if let Err(e) = mat.graph.to_graph().validate() {
                errors.push(format!("material.graph: {e}"));
            }
            match &mat.region {
                RegionConfig::XAbove { x } => {
                    if !x.is_finite() {
                        errors.push("material.region.x must be finite".into());
                    }
                }
                RegionConfig::Disk { center, radius } => {
                    if center.len() != self.grid.dim.min(3) {
                        errors.push("material.region.center must match the dimension".into());
                    }
                    if !(*radius > 0.0) {
                        errors.push("material.region.radius must be > 0".into());
                    }
                }
            }
        }

        match &self.initial {
            InitialConfig::Zero => {}
            InitialConfig::SolenoidalMode { wavenumbers, amplitude, .. } => {
                if wavenumbers.len() != self.grid.dim {
                    errors.push("initial.wavenumbers must match the dimension".into());
                }
                if wavenumbers.iter().any(|&k| k == 0) {
                    errors.push("initial.wavenumbers entries must be >= 1".into());
                }
                if !amplitude.is_finite() {
                    errors.push("initial.amplitude must be finite".into());
                }
            }
            InitialConfig::GaussianBump { center, width, amplitude, .. } => {
                if center.len() != self.grid.dim {
                    errors.push("initial.center must match the dimension".into());
                }
                if !(*width > 0.0) {
                    errors.push("initial.width must be > 0".into());
                }
                if !amplitude.is_finite() {
                    errors.push("initial.amplitude must be finite".into());
                }
            }
        }

        match &self.forcing {
            ForcingConfig::Zero => {}
            ForcingConfig::Ramped { profile, ramp_time } => {
                if !(*ramp_time > 0.0) {
                    errors.push("forcing.ramp_time must be > 0".into());
                }
                if let ProfileConfig::Mode { wavenumbers, .. } = profile {
                    if wavenumbers.len() != self.grid.dim {
                        errors.push("forcing.profile.wavenumbers must match the dimension".into());
                    }
                }
            }
            ForcingConfig::StandingMode => {
                if !matches!(self.solver, SolverBlock::Full { .. }) {
                    errors.push("forcing.standing_mode requires the full solver".into());
                }
                if !matches!(self.graph, GraphConfig::Constant { .. }) {
                    errors.push("forcing.standing_mode requires a constant law".into());
                }
                if self.grid.dim != 2 {
                    errors.push("forcing.standing_mode is 2D only".into());
                }
            }
        }

        match &self.solver {
            SolverBlock::Full { epsilon, t_final, cfl_safety, dt } => {
                if !(*epsilon > 0.0) || !epsilon.is_finite() {
                    errors.push(format!("solver.epsilon must be > 0, got {epsilon}"));
                }
                if !(*t_final > 0.0) || !t_final.is_finite() {
                    errors.push(format!("solver.t_final must be > 0, got {t_final}"));
                }
                if !(*cfl_safety > 0.0 && *cfl_safety <= 1.0) {
                    errors.push(format!("solver.cfl_safety must be in (0, 1], got {cfl_safety}"));
                }
                if let Some(dt) = dt {
                    if !(*dt > 0.0) {
                        errors.push(format!("solver.dt must be > 0, got {dt}"));
                    }
                }
            }
            SolverBlock::Qs { t_final, delta, interface_tol, diffusion_safety, dt_max } => {
                if !(*t_final > 0.0) || !t_final.is_finite() {
                    errors.push(format!("solver.t_final must be > 0, got {t_final}"));
                }
                if !(*delta > 0.0) {
                    errors.push(format!("solver.delta must be > 0, got {delta}"));
                }
                if !(*interface_tol > 0.0) {
                    errors.push(format!("solver.interface_tol must be > 0, got {interface_tol}"));
                }
                if !(*diffusion_safety > 0.0 && *diffusion_safety <= 1.0) {
                    errors.push(format!(
                        "solver.diffusion_safety must be in (0, 1], got {diffusion_safety}"
                    ));
                }
                if let Some(dt) = dt_max {
                    if !(*dt > 0.0) {
                        errors.push(format!("solver.dt_max must be > 0, got {dt}"));
                    }
                }
            }
        }

        if self.output.snapshot_stride == Some(0) {
            errors.push("output.snapshot_stride must be >= 1".into());
        }
        if self.output.snapshot_stride.is_some() && self.output.snapshot_times.is_some() {
            errors.push("output.snapshot_stride and output.snapshot_times are exclusive".into());
        }
        if let Some(times) = &self.output.snapshot_times {
            let mut prev = 0.0;
            for &t in times {
                if !(t > prev) {
                    errors.push("output.snapshot_times must be strictly increasing and > 0".into());
                    break;
                }
                prev = t;
            }
            if prev > self.solver.t_final() {
                errors.push("output.snapshot_times must not exceed solver.t_final".into());
            }
        }

        if let Some(sweep) = &self.sweep {
            if sweep.eps_list.is_empty() {
                errors.push("sweep.eps_list must not be empty".into());
            }
            if sweep.eps_list.iter().any(|&e| !(e > 0.0)) {
                errors.push("sweep.eps_list entries must be > 0".into());
            }
            if sweep.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
                errors.push("sweep.eps_list must be strictly decreasing".into());
            }
            if sweep.snapshots == 0 {
                errors.push("sweep.snapshots must be >= 1".into());
            }
            if !(sweep.cfl_safety > 0.0 && sweep.cfl_safety <= 1.0) {
                errors.push("sweep.cfl_safety must be in (0, 1]".into());
            }
        }

        if let Some(growth) = &self.growth {
            if !(growth.a0 > 0.0) {
                errors.push("growth.a0 must be > 0".into());
            }
            if growth.a1 < 0.0 || growth.b0 < 0.0 || growth.p < 0.0 || growth.m0 < 0.0 {
                errors.push("growth constants must be non-negative".into());
            }
            if !(growth.s_max > growth.m0) {
                errors.push("growth.s_max must exceed growth.m0".into());
            }
            if growth.n_samples < 10 {
                errors.push("growth.n_samples must be >= 10".into());
            }
        }

        if let Some(mms) = &self.mms {
            if mms.spatial_levels.len() < 2 {
                errors.push("mms.spatial_levels needs at least two levels".into());
            }
            if mms.spatial_levels.windows(2).any(|w| !(w[1] > w[0])) {
                errors.push("mms.spatial_levels must be strictly increasing".into());
            }
            if !(mms.epsilon > 0.0 && mms.sigma > 0.0 && mms.t_final > 0.0) {
                errors.push("mms.epsilon, mms.sigma, mms.t_final must be > 0".into());
            }
            if mms.temporal_cells < 4 {
                errors.push("mms.temporal_cells must be >= 4".into());
            }
            if !mms.dt_levels.is_empty() {
                if mms.dt_levels.len() < 2 {
                    errors.push("mms.dt_levels needs at least two levels when given".into());
                }
                if mms.dt_levels.windows(2).any(|w| !(w[1] < w[0])) {
                    errors.push("mms.dt_levels must be strictly decreasing".into());
                }
            }
            if !(mms.reference_refine > 1.0) {
                errors.push("mms.reference_refine must exceed 1".into());
            }
        }
    }

    pub fn build_grid(&self) -> Result<StaggeredGrid> {
        let g = &self.grid;
        match g.dim {
            2 => StaggeredGrid::new_2d(g.cells[0], g.cells[1], g.extents[0], g.extents[1]),
            3 => StaggeredGrid::new_3d(
                g.cells[0], g.cells[1], g.cells[2], g.extents[0], g.extents[1], g.extents[2],
            ),
            d => Err(Error::Config(format!("unsupported dimension {d}"))),
        }
    }

    pub fn build_medium(&self, grid: &StaggeredGrid) -> Result<Medium> {
        let primary = self.graph.to_graph();
        match &self.material {
            None => Medium::uniform(primary),
            Some(mat) => {
                let positions = grid.e_positions();
                let index: Vec<u8> = positions
                    .iter()
                    .map(|p| match &mat.region {
                        RegionConfig::XAbove { x } => u8::from(p[0] > *x),
                        RegionConfig::Disk { center, radius } => {
                            let mut d2 = 0.0;
                            for (k, c) in center.iter().enumerate() {
                                d2 += (p[k] - c) * (p[k] - c);
                            }
                            u8::from(d2.sqrt() <= *radius)
                        }
                    })
                    .collect();
                Medium::two_phase(grid, primary, mat.graph.to_graph(), index)
            }
        }
    }

    pub fn build_forcing(&self, grid: &StaggeredGrid) -> Result<Forcing> {
        let f = match &self.forcing {
            ForcingConfig::Zero => Forcing::Zero,
            ForcingConfig::Ramped { profile, ramp_time } => {
                let samples = match profile {
                    ProfileConfig::Uniform { value } => vec![*value; grid.e_len()],
                    ProfileConfig::Mode { wavenumbers, amplitude } => {
                        mode_samples(grid, wavenumbers, *amplitude)
                    }
                };
                Forcing::Ramped { profile: samples, ramp_time: *ramp_time }
            }
            ForcingConfig::StandingMode => {
                let (epsilon, sigma) = match (&self.solver, &self.graph) {
                    (SolverBlock::Full { epsilon, .. }, GraphConfig::Constant { sigma }) => {
                        (*epsilon, *sigma)
                    }
                    _ => {
                        return Err(Error::Config(
                            "standing-mode forcing requires the full solver and a constant law".into(),
                        ))
                    }
                };
                Forcing::StandingMode { epsilon, sigma }
            }
        };
        f.validate(grid)?;
        Ok(f)
    }

    /// Initial `(E0, H0)`. `H0` is always a discrete curl of an
    /// electric-located potential, hence exactly divergence free.
    pub fn build_initial(
        &self,
        grid: &StaggeredGrid,
        medium: &Medium,
        forcing: &Forcing,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let (potential, electric) = match &self.initial {
            InitialConfig::Zero => (vec![0.0; grid.e_len()], ElectricInit::Zero),
            InitialConfig::SolenoidalMode { wavenumbers, amplitude, electric } => {
                (mode_samples(grid, wavenumbers, *amplitude), *electric)
            }
            InitialConfig::GaussianBump { center, width, amplitude, electric } => {
                let samples = grid
                    .e_positions()
                    .iter()
                    .map(|p| {
                        let mut d2 = 0.0;
                        for (k, c) in center.iter().enumerate() {
                            d2 += (p[k] - c) * (p[k] - c);
                        }
                        amplitude * (-0.5 * d2 / (width * width)).exp()
                    })
                    .collect();
                (samples, *electric)
            }
        };
        let h0 = grid.curl_e(&potential)?;
        let e0 = match electric {
            ElectricInit::Zero => vec![0.0; grid.e_len()],
            ElectricInit::Mode => {
                let mut e = potential;
                grid.apply_pec(&mut e)?;
                e
            }
            ElectricInit::QsConsistent => {
                let delta = match &self.solver {
                    SolverBlock::Qs { delta, .. } => *delta,
                    SolverBlock::Full { .. } => default_delta(),
                };
                let f0 = forcing.eval(grid, 0.0)?;
                qs_electric_field(grid, medium, &h0, &f0, delta)?.0
            }
        };
        Ok((e0, h0))
    }

    pub fn full_solver_config(&self) -> Result<FullSolverConfig> {
        match &self.solver {
            SolverBlock::Full { epsilon, t_final, cfl_safety, dt } => Ok(FullSolverConfig {
                epsilon: *epsilon,
                t_final: *t_final,
                cfl_safety: *cfl_safety,
                dt_override: *dt,
                ..Default::default()
            }),
            SolverBlock::Qs { .. } => {
                Err(Error::Config("scenario selects the quasi-static solver".into()))
            }
        }
    }

    pub fn qs_solver_config(&self) -> Result<QsSolverConfig> {
        match &self.solver {
            SolverBlock::Qs { t_final, delta, interface_tol, diffusion_safety, dt_max } => {
                Ok(QsSolverConfig {
                    t_final: *t_final,
                    delta: *delta,
                    diffusion_safety: *diffusion_safety,
                    dt_max: dt_max.unwrap_or(f64::INFINITY),
                    interface_tol: *interface_tol,
                    ..Default::default()
                })
            }
            SolverBlock::Full { .. } => {
                Err(Error::Config("scenario selects the full solver".into()))
            }
        }
    }
}

/// Product-of-sines sample field, zero on the boundary in every
/// direction, evaluated at the electric locations.
fn mode_samples(grid: &StaggeredGrid, wavenumbers: &[usize], amplitude: f64) -> Vec<f64> {
    let ext = grid.extents();
    grid.e_positions()
        .iter()
        .map(|p| {
            let mut v = amplitude;
            for (k, &w) in wavenumbers.iter().enumerate() {
                v *= (w as f64 * std::f64::consts::PI * p[k] / ext[k]).sin();
            }
            v
        })
        .collect()
}
