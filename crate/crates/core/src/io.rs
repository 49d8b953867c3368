//! Artifact writers: CSV time series, JSON reports, and the manifest
//! that ties a run's input hash to its outputs. All numeric fields are
//! written with shortest round-trip formatting, so identical runs
//! produce byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Location;
use crate::solver_qs::interface_cells;
use crate::trajectory::{EnergyRecord, FieldSelect, Trajectory};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Energy ledger: one row per recorded step.
pub fn write_ledger(path: &Path, records: &[EnergyRecord]) -> Result<()> {
    let mut out = String::from("t,e_electric,e_magnetic,dissipation,work\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.t, r.electric, r.magnetic, r.dissipation, r.work
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Field snapshots: one row per sample per snapshot time.
pub fn write_snapshots(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let grid = trajectory.grid();
    let e_layout = grid.sample_layout(Location::Electric);
    let h_layout = grid.sample_layout(Location::Magnetic);
    let mut out = String::from("t,component,i,j,k,value\n");
    for k in 0..trajectory.len() {
        let t = trajectory.times()[k];
        for (v, ([i, j, kk], label)) in
            trajectory.field(FieldSelect::Electric, k).iter().zip(&e_layout)
        {
            out.push_str(&format!("{t},{label},{i},{j},{kk},{v}\n"));
        }
        for (v, ([i, j, kk], label)) in
            trajectory.field(FieldSelect::Magnetic, k).iter().zip(&h_layout)
        {
            out.push_str(&format!("{t},{label},{i},{j},{kk},{v}\n"));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Free-boundary band per snapshot: one row per member cell, plus the
/// band size repeated for convenient filtering.
pub fn write_interface(
    path: &Path,
    trajectory: &Trajectory,
    s_star: f64,
    tol: f64,
) -> Result<()> {
    let grid = trajectory.grid();
    let mut out = String::from("t,e_index,band_size\n");
    for k in 0..trajectory.len() {
        let t = trajectory.times()[k];
        let e = trajectory.field(FieldSelect::Electric, k);
        let cells = interface_cells(grid, e, s_star, tol)?;
        let n = cells.len();
        if n == 0 {
            out.push_str(&format!("{t},,0\n"));
        }
        for c in cells {
            out.push_str(&format!("{t},{c},{n}\n"));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Sweep rows in CSV form.
pub fn write_sweep_csv(path: &Path, rows: &[crate::harness::SweepRow]) -> Result<()> {
    let mut out = String::from("epsilon,e_gap_l2,h_gap_linf_l2,dissipation_gap,wall_secs\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epsilon, r.e_gap_l2, r.h_gap_linf_l2, r.dissipation_gap, r.wall_secs
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Convergence study rows in CSV form.
pub fn write_convergence_csv(path: &Path, rep: &crate::harness::ConvergenceReport) -> Result<()> {
    let mut out = String::from("resolution,error,order\n");
    for (k, (r, e)) in rep.resolutions.iter().zip(&rep.errors).enumerate() {
        let order = if k == 0 { String::new() } else { format!("{}", rep.orders[k - 1]) };
        out.push_str(&format!("{r},{e},{order}\n"));
    }
    write_atomic(path, out.as_bytes())
}

/// Record tying a command's input hash to its artifacts.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub artifacts: Vec<String>,
    pub complete: bool,
    pub error: Option<String>,
    /// Wall time of the command; the one field allowed to differ between
    /// identical runs.
    pub wall_secs: f64,
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    write_json(&dir.join("manifest.json"), manifest)
}

pub fn artifact_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
