//! Command-line orchestration: scenario loading, solver dispatch,
//! artifact emission, and exit-code mapping.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{mms_full_study, mms_qs_study, run_sweep, SweepSetup};
use crate::io;
use crate::scenario::{parse_config, ScenarioConfig, SolverBlock};
use crate::solver_full::{cfl_dt, run_full};
use crate::solver_qs::run_qs;
use crate::trajectory::SnapshotPlan;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_NOT_CONFIRMING: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "emqs",
    version,
    about = "Staggered-grid solvers for Maxwell systems with monotone field-dependent conductivity"
)]
pub struct Cli {
    /// Path to the JSON scenario configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Fail (exit 4) on non-confirming results instead of reporting them.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads for embarrassingly parallel work.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Seed recorded in the manifest; solver math never consumes it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Integrate the configured scenario with its selected solver.
    Run,
    /// Vanishing-permittivity comparison against the quasi-static limit.
    Sweep,
    /// Manufactured-solution convergence studies.
    Mms,
    /// Check the conductivity law against the configured growth bounds.
    ValidateGraph,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Sweep => "sweep",
            Command::Mms => "mms",
            Command::ValidateGraph => "validate-graph",
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parameter(_) | Error::Shape(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

/// Run a CLI invocation to completion, returning the process exit code.
/// Prints a one-line summary on success and the error on failure; always
/// leaves a manifest in the output directory once the config has loaded.
pub fn execute(cli: &Cli) -> i32 {
    let started = std::time::Instant::now();
    let loaded = load_config(cli);
    let (text, cfg) = match loaded {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let sha = io::sha256_hex(text.as_bytes());
    let outcome = dispatch(cli, &cfg);
    let (code, artifacts, summary, error) = match &outcome {
        Ok(out) => (out.code, out.artifacts.clone(), Some(out.summary.clone()), None),
        Err(e) => (exit_code_for(e), Vec::new(), None, Some(e.to_string())),
    };
    let manifest = io::Manifest {
        command: cli.command.name().to_string(),
        config_sha256: sha,
        seed: cli.seed,
        threads: cli.threads,
        artifacts,
        complete: outcome.is_ok(),
        error: error.clone(),
        wall_secs: started.elapsed().as_secs_f64(),
    };
    if let Err(e) = io::write_manifest(&cli.out, &manifest) {
        eprintln!("error: could not write manifest: {e}");
        return EXIT_SOLVER;
    }
    match (summary, error) {
        (Some(s), _) => println!("{s}"),
        (None, Some(e)) => eprintln!("error: {e}"),
        _ => {}
    }
    code
}

struct Outcome {
    code: i32,
    artifacts: Vec<String>,
    summary: String,
}

fn load_config(cli: &Cli) -> Result<(String, ScenarioConfig)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    if cli.threads == 0 {
        return Err(Error::Config("--threads must be >= 1".into()));
    }
    let cfg = parse_config(&text)?;
    Ok((text, cfg))
}

fn dispatch(cli: &Cli, cfg: &ScenarioConfig) -> Result<Outcome> {
    match cli.command {
        Command::Run => command_run(cli, cfg),
        Command::Sweep => command_sweep(cli, cfg),
        Command::Mms => command_mms(cli, cfg),
        Command::ValidateGraph => command_validate_graph(cli, cfg),
    }
}

fn command_run(cli: &Cli, cfg: &ScenarioConfig) -> Result<Outcome> {
    let grid = cfg.build_grid()?;
    let medium = cfg.build_medium(&grid)?;
    let forcing = cfg.build_forcing(&grid)?;
    let (e0, h0) = cfg.build_initial(&grid, &medium, &forcing)?;
    let out = &cli.out;
    let wants_fields = cfg.output.write_snapshots || cfg.output.write_interface;
    let mut artifacts = Vec::new();

    let (records, trajectory, summary) = match &cfg.solver {
        SolverBlock::Full { .. } => {
            let solver_cfg = cfg.full_solver_config()?;
            let plan = match (&cfg.output.snapshot_times, cfg.output.snapshot_stride) {
                (Some(times), _) => SnapshotPlan::AtTimes(times.clone()),
                (None, Some(k)) => SnapshotPlan::EverySteps(k),
                (None, None) if wants_fields => {
                    // Roughly ten snapshots without requiring alignment
                    // knowledge from the user.
                    let dt = solver_cfg
                        .dt_override
                        .unwrap_or_else(|| cfl_dt(&grid, solver_cfg.epsilon, solver_cfg.cfl_safety));
                    let steps = (solver_cfg.t_final / dt).ceil() as usize;
                    SnapshotPlan::EverySteps((steps / 10).max(1))
                }
                (None, None) => SnapshotPlan::None,
            };
            let run = run_full(&grid, &medium, &forcing, &e0, &h0, &solver_cfg, &plan)?;
            let last = *run.records.last().expect("at least one record");
            let summary = format!(
                "run full: steps={} dt={} e_electric={} e_magnetic={} dissipation={} work={}",
                run.steps, run.dt, last.electric, last.magnetic, last.dissipation, last.work
            );
            (run.records, run.trajectory, summary)
        }
        SolverBlock::Qs { .. } => {
            let solver_cfg = cfg.qs_solver_config()?;
            let plan = match (&cfg.output.snapshot_times, cfg.output.snapshot_stride) {
                (Some(times), _) => SnapshotPlan::AtTimes(times.clone()),
                (None, Some(k)) => SnapshotPlan::EverySteps(k),
                (None, None) if wants_fields => {
                    let times = (1..=10)
                        .map(|k| k as f64 * solver_cfg.t_final / 10.0)
                        .collect();
                    SnapshotPlan::AtTimes(times)
                }
                (None, None) => SnapshotPlan::None,
            };
            let run = run_qs(&grid, &medium, &forcing, &h0, &solver_cfg, &plan)?;
            let last = *run.records.last().expect("at least one record");
            let summary = format!(
                "run qs: steps={} dt_min={} e_magnetic={} dissipation={} work={}",
                run.steps, run.dt_min_taken, last.magnetic, last.dissipation, last.work
            );
            if cfg.output.write_interface {
                if let Some(s_star) = medium.primary().jump_threshold() {
                    let path = io::artifact_path(out, "interface.csv");
                    io::write_interface(&path, &run.trajectory, s_star, solver_cfg.interface_tol)?;
                    artifacts.push("interface.csv".into());
                }
            }
            (run.records, run.trajectory, summary)
        }
    };

    io::write_ledger(&io::artifact_path(out, &cfg.output.ledger), &records)?;
    artifacts.push(cfg.output.ledger.clone());
    if cfg.output.write_snapshots && !trajectory.is_empty() {
        io::write_snapshots(&io::artifact_path(out, "snapshots.csv"), &trajectory)?;
        artifacts.push("snapshots.csv".into());
    }
    let last = records.last().expect("at least one record");
    io::write_json(
        &io::artifact_path(out, &cfg.output.report),
        &serde_json::json!({
            "rows": records.len(),
            "final": {
                "t": last.t,
                "e_electric": last.electric,
                "e_magnetic": last.magnetic,
                "dissipation": last.dissipation,
                "work": last.work,
            },
        }),
    )?;
    artifacts.push(cfg.output.report.clone());
    Ok(Outcome { code: EXIT_OK, artifacts, summary })
}

fn command_sweep(cli: &Cli, cfg: &ScenarioConfig) -> Result<Outcome> {
    let sweep_cfg = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep command needs a sweep block with eps_list".into()))?;
    let qs = cfg.qs_solver_config().map_err(|_| {
        Error::Config("sweep command needs the quasi-static solver block (its horizon and threshold drive the reference run)".into())
    })?;
    let grid = cfg.build_grid()?;
    let medium = cfg.build_medium(&grid)?;
    let forcing = cfg.build_forcing(&grid)?;
    let (_, h0) = cfg.build_initial(&grid, &medium, &forcing)?;
    let setup = SweepSetup {
        eps_list: sweep_cfg.eps_list.clone(),
        t_final: qs.t_final,
        snapshots: sweep_cfg.snapshots,
        cfl_safety: sweep_cfg.cfl_safety,
        qs,
        threads: cli.threads,
        ..Default::default()
    };
    let report = run_sweep(&grid, &medium, &forcing, &h0, &setup)?;
    io::write_json(&io::artifact_path(&cli.out, "sweep.json"), &report)?;
    io::write_sweep_csv(&io::artifact_path(&cli.out, "sweep.csv"), &report.rows)?;
    let summary = format!(
        "sweep {}: levels={} slope={} fingerprint={}",
        if report.confirming { "confirming" } else { "NOT confirming" },
        report.rows.len(),
        report.slope.map_or("n/a".into(), |s| format!("{s:.3}")),
        &report.fingerprint[..12],
    );
    let code = if cli.strict && !report.confirming { EXIT_NOT_CONFIRMING } else { EXIT_OK };
    Ok(Outcome { code, artifacts: vec!["sweep.json".into(), "sweep.csv".into()], summary })
}

fn command_mms(cli: &Cli, cfg: &ScenarioConfig) -> Result<Outcome> {
    let mms = cfg.mms.clone().unwrap_or_default();
    let spatial = mms_full_study(&mms.spatial_levels, mms.epsilon, mms.sigma, mms.t_final)?;
    let dt_levels = if mms.dt_levels.is_empty() {
        // Three dyadic levels under the diffusion stability bound of the
        // temporal study grid.
        let h = std::f64::consts::PI / mms.temporal_cells as f64;
        let bound = 0.5 * h * h * mms.sigma / 4.0;
        vec![0.8 * bound, 0.4 * bound, 0.2 * bound]
    } else {
        mms.dt_levels.clone()
    };
    let temporal = mms_qs_study(
        mms.temporal_cells,
        mms.sigma,
        mms.t_final,
        &dt_levels,
        mms.reference_refine,
    )?;
    io::write_json(
        &io::artifact_path(&cli.out, "mms.json"),
        &serde_json::json!({ "spatial": spatial, "temporal": temporal }),
    )?;
    io::write_convergence_csv(&io::artifact_path(&cli.out, "mms_spatial.csv"), &spatial)?;
    io::write_convergence_csv(&io::artifact_path(&cli.out, "mms_temporal.csv"), &temporal)?;
    let summary = format!(
        "mms: spatial order {:.3} (>= 1.8 expected), temporal order {:.3} (>= 0.9 expected)",
        spatial.min_order(),
        temporal.min_order()
    );
    let confirming = spatial.min_order() >= 1.8 && temporal.min_order() >= 0.9;
    let code = if cli.strict && !confirming { EXIT_NOT_CONFIRMING } else { EXIT_OK };
    Ok(Outcome {
        code,
        artifacts: vec!["mms.json".into(), "mms_spatial.csv".into(), "mms_temporal.csv".into()],
        summary,
    })
}

fn command_validate_graph(cli: &Cli, cfg: &ScenarioConfig) -> Result<Outcome> {
    let growth = cfg
        .growth
        .as_ref()
        .ok_or_else(|| Error::Config("validate-graph needs a growth block".into()))?;
    let graph = cfg.graph.to_graph();
    graph.validate()?;
    let report = graph.validate_growth(&growth.to_request())?;
    io::write_json(&io::artifact_path(&cli.out, "growth.json"), &report)?;
    let summary = format!(
        "validate-graph {}: lower={} upper={} monotone={}",
        if report.pass() { "pass" } else { "FAIL" },
        report.lower_ok,
        report.upper_ok,
        report.monotone_ok
    );
    let code = if report.pass() { EXIT_OK } else { EXIT_NOT_CONFIRMING };
    Ok(Outcome { code, artifacts: vec!["growth.json".into()], summary })
}
