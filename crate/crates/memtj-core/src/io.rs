//! File formats: CSV exports, the drive-basis calibration report, and the
//! run manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so files
//! re-read into `f64` reproduce the exact bit patterns.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::characterization::{BasisAngles, CalibrationFit};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::neuron::{DriveSegment, SpikeTrain};
use crate::params::BiasPoint;
use crate::sweep::{AxisKind, CellFlags, GridCell, LifetimeGrid};
use crate::telegraph::{DwellRecord, LifetimeEstimate, StateLabel};

pub const GRID_CSV_HEADER: &str = "axis_kind,v_a,v_b,tau_p_mean_s,tau_p_stderr_s,tau_p_count,\
tau_ap_mean_s,tau_ap_stderr_s,tau_ap_count,flags";

/// `traj_<seed>_<vme>_<vi>.csv`, voltages in fixed-point millivolts.
pub fn trajectory_filename(seed: u64, bias: BiasPoint) -> String {
    format!(
        "traj_{seed}_{:.3}mV_{:.3}mV.csv",
        bias.v_me * 1e3,
        bias.v_i * 1e3
    )
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.samples.len() * 48 + 32);
    out.push_str("time_s,mx,my,mz\n");
    for &(t, m) in &traj.samples {
        let _ = writeln!(out, "{t},{},{},{}", m.x, m.y, m.z);
    }
    out
}

pub fn dwells_csv(dwells: &[DwellRecord]) -> String {
    let mut out = String::from("state,start_time_s,duration_s\n");
    for d in dwells {
        let _ = writeln!(out, "{},{},{}", d.state, d.start_time, d.duration);
    }
    out
}

/// `v_me,v_i,state,mean_s,stderr_s,count,ks_stat`, one row per present state.
pub fn lifetime_summary_csv(bias: BiasPoint, estimates: &[LifetimeEstimate]) -> String {
    let mut out = String::from("v_me,v_i,state,mean_s,stderr_s,count,ks_stat\n");
    for e in estimates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            bias.v_me, bias.v_i, e.state, e.mean, e.stderr, e.count, e.ks_statistic
        );
    }
    out
}

pub fn grid_csv(grid: &LifetimeGrid) -> String {
    let mut out = String::from(GRID_CSV_HEADER);
    out.push('\n');
    for i1 in 0..grid.n1() {
        for i2 in 0..grid.n2() {
            let (a, b) = grid.node(i1, i2);
            let cell = grid.cell(i1, i2);
            let (pm, ps, pc) = est_fields(&cell.tau_p);
            let (am, asg, ac) = est_fields(&cell.tau_ap);
            let _ = writeln!(
                out,
                "{},{a},{b},{pm},{ps},{pc},{am},{asg},{ac},{}",
                grid.axis_kind, cell.flags
            );
        }
    }
    out
}

fn est_fields(e: &Option<LifetimeEstimate>) -> (f64, f64, usize) {
    match e {
        Some(e) => (e.mean, e.stderr, e.count),
        None => (f64::NAN, f64::NAN, 0),
    }
}

/// Parse a grid CSV back into a `LifetimeGrid`.
///
/// The KS diagnostic and seed provenance are not part of the file format;
/// they come back as NaN / 0.
pub fn parse_grid_csv(text: &str) -> Result<LifetimeGrid> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty grid file".into()))?;
    if header.trim() != GRID_CSV_HEADER {
        return Err(Error::Config(format!(
            "unexpected grid header: '{}'",
            header.trim()
        )));
    }

    let mut axis_kind: Option<AxisKind> = None;
    let mut rows: Vec<(f64, f64, GridCell)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Config(format!(
                "grid line {}: expected 10 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let kind: AxisKind = fields[0].parse()?;
        match axis_kind {
            None => axis_kind = Some(kind),
            Some(k) if k == kind => {}
            Some(_) => {
                return Err(Error::Config("mixed axis kinds in one grid file".into()));
            }
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("grid line {}: bad {what} '{s}'", lineno + 2)))
        };
        let parse_n = |s: &str, what: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::Config(format!("grid line {}: bad {what} '{s}'", lineno + 2)))
        };
        let v_a = parse_f(fields[1], "v_a")?;
        let v_b = parse_f(fields[2], "v_b")?;
        let mk = |mean: f64, stderr: f64, count: usize, state: StateLabel| {
            (count > 0 && mean.is_finite()).then_some(LifetimeEstimate {
                state,
                mean,
                stderr,
                count,
                ks_statistic: f64::NAN,
            })
        };
        let tau_p = mk(
            parse_f(fields[3], "tau_p_mean_s")?,
            parse_f(fields[4], "tau_p_stderr_s")?,
            parse_n(fields[5], "tau_p_count")?,
            StateLabel::P,
        );
        let tau_ap = mk(
            parse_f(fields[6], "tau_ap_mean_s")?,
            parse_f(fields[7], "tau_ap_stderr_s")?,
            parse_n(fields[8], "tau_ap_count")?,
            StateLabel::Ap,
        );
        let flags: CellFlags = fields[9].parse()?;
        rows.push((v_a, v_b, GridCell { tau_p, tau_ap, flags }));
    }
    if rows.is_empty() {
        return Err(Error::Config("grid file has no data rows".into()));
    }

    let mut axis1: Vec<f64> = Vec::new();
    let mut axis2: Vec<f64> = Vec::new();
    for &(a, b, _) in &rows {
        if !axis1.contains(&a) {
            axis1.push(a);
        }
        if !axis2.contains(&b) {
            axis2.push(b);
        }
    }
    if rows.len() != axis1.len() * axis2.len() {
        return Err(Error::Config(format!(
            "grid is not rectangular: {} rows for {}x{} axes",
            rows.len(),
            axis1.len(),
            axis2.len()
        )));
    }
    let n2 = axis2.len();
    let mut cells: Vec<Option<GridCell>> = vec![None; rows.len()];
    for (a, b, cell) in rows {
        let i1 = axis1.iter().position(|&x| x == a).unwrap();
        let i2 = axis2.iter().position(|&x| x == b).unwrap();
        if cells[i1 * n2 + i2].replace(cell).is_some() {
            return Err(Error::Config(format!("duplicate grid node ({a}, {b})")));
        }
    }
    let grid = LifetimeGrid {
        axis_kind: axis_kind.unwrap(),
        axis1,
        axis2,
        cells: cells.into_iter().map(Option::unwrap).collect(),
        master_seed: 0,
        min_dwells: 0,
    };
    grid.validate()?;
    Ok(grid)
}

pub fn read_grid_csv(path: &Path) -> Result<LifetimeGrid> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read grid file {}: {e}", path.display())))?;
    parse_grid_csv(&text)
}

pub fn spikes_csv(train: &SpikeTrain) -> String {
    let mut out = String::from("spike_time_s\n");
    for t in &train.spike_times {
        let _ = writeln!(out, "{t}");
    }
    out
}

pub fn waveform_csv(changes: &[(f64, StateLabel)]) -> String {
    let mut out = String::from("time_s,state\n");
    for (t, s) in changes {
        let _ = writeln!(out, "{t},{s}");
    }
    out
}

/// Parse a piecewise-constant drive schedule: `t_start_s,v1,v2` rows.
pub fn parse_drive_csv(text: &str) -> Result<Vec<DriveSegment>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty drive file".into()))?;
    if header.trim() != "t_start_s,v1,v2" {
        return Err(Error::Config(format!(
            "unexpected drive header: '{}' (want 't_start_s,v1,v2')",
            header.trim()
        )));
    }
    let mut drive = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Config(format!(
                "drive line {}: expected 3 fields",
                lineno + 2
            )));
        }
        let mut vals = [0.0f64; 3];
        for (k, f) in fields.iter().enumerate() {
            vals[k] = f.trim().parse::<f64>().map_err(|_| {
                Error::Config(format!("drive line {}: bad number '{f}'", lineno + 2))
            })?;
        }
        drive.push(DriveSegment { t_start: vals[0], v1: vals[1], v2: vals[2] });
    }
    Ok(drive)
}

pub fn read_drive_csv(path: &Path) -> Result<Vec<DriveSegment>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read drive file {}: {e}", path.display())))?;
    parse_drive_csv(&text)
}

/// Structured-text calibration report (also machine-readable: the transform
/// angles parse back for transformed sweeps).
pub fn calibration_report(fit: &CalibrationFit) -> String {
    let a = fit.angles;
    let m = a.matrix();
    let inv = a.inverse_matrix().expect("calibrated angles are invertible");
    let mut out = String::new();
    let _ = writeln!(out, "# drive-basis calibration");
    let _ = writeln!(out, "alpha_rad = {}", a.alpha);
    let _ = writeln!(out, "alpha_deg = {}", a.alpha.to_degrees());
    let _ = writeln!(out, "beta_rad = {}", a.beta);
    let _ = writeln!(out, "beta_deg = {}", a.beta.to_degrees());
    let _ = writeln!(out, "contour_angle_ap_rad = {}", fit.contour_angle_ap);
    let _ = writeln!(out, "contour_angle_ap_deg = {}", fit.contour_angle_ap.to_degrees());
    let _ = writeln!(out, "contour_angle_p_rad = {}", fit.contour_angle_p);
    let _ = writeln!(out, "contour_angle_p_deg = {}", fit.contour_angle_p.to_degrees());
    let _ = writeln!(out, "r_squared_ap = {}", fit.fit_ap.r_squared);
    let _ = writeln!(out, "r_squared_p = {}", fit.fit_p.r_squared);
    let _ = writeln!(out, "grad_ln_tau_ap = [{}, {}]", fit.fit_ap.grad_1, fit.fit_ap.grad_2);
    let _ = writeln!(out, "grad_ln_tau_p = [{}, {}]", fit.fit_p.grad_1, fit.fit_p.grad_2);
    let _ = writeln!(out, "matrix_row1 = [{}, {}]", m[0][0], m[0][1]);
    let _ = writeln!(out, "matrix_row2 = [{}, {}]", m[1][0], m[1][1]);
    let _ = writeln!(out, "inverse_row1 = [{}, {}]", inv[0][0], inv[0][1]);
    let _ = writeln!(out, "inverse_row2 = [{}, {}]", inv[1][0], inv[1][1]);
    out
}

/// Recover the transform angles from a calibration report.
pub fn parse_calibration_angles(text: &str) -> Result<BasisAngles> {
    let mut alpha = None;
    let mut beta = None;
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("alpha_rad") {
            alpha = Some(parse_kv_f64(rest, "alpha_rad")?);
        } else if let Some(rest) = line.strip_prefix("beta_rad") {
            beta = Some(parse_kv_f64(rest, "beta_rad")?);
        }
    }
    match (alpha, beta) {
        (Some(a), Some(b)) => BasisAngles::new(a, b),
        _ => Err(Error::Config(
            "calibration report lacks alpha_rad / beta_rad".into(),
        )),
    }
}

fn parse_kv_f64(rest: &str, key: &str) -> Result<f64> {
    rest.trim_start()
        .strip_prefix('=')
        .map(str::trim)
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| Error::Config(format!("malformed {key} line in calibration report")))
}

pub fn read_calibration_angles(path: &Path) -> Result<BasisAngles> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read calibration report {}: {e}", path.display()))
    })?;
    parse_calibration_angles(&text)
}

/// Run provenance written next to every output set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub created_utc: String,
    /// Fully resolved configuration (TOML text, defaults materialized).
    pub resolved_config: String,
    pub outputs: Vec<OutputDigest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Write a data file and record its digest.
pub struct OutputWriter {
    dir: PathBuf,
    outputs: Vec<OutputDigest>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputWriter { dir: dir.to_path_buf(), outputs: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.outputs.push(OutputDigest {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(path)
    }

    /// Finish by writing `manifest.json`.
    pub fn finish(
        self,
        command: &str,
        master_seed: u64,
        resolved_config: String,
    ) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: "memtj".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            master_seed,
            created_utc: chrono::Utc::now().to_rfc3339(),
            resolved_config,
            outputs: self.outputs,
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
        fs::write(self.dir.join("manifest.json"), json)?;
        Ok(manifest)
    }
}
