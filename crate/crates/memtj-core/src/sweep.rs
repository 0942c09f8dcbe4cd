//! Bias-plane lifetime sweeps: deterministic, cell-parallel grids of
//! telegraph lifetime estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characterization::BasisAngles;
use crate::error::{Error, Result};
use crate::integrator::{derive_seed, run_telegraph, SimConfig, StopReason};
use crate::params::{BiasPoint, DeviceParams};
use crate::telegraph::{estimate_state, LifetimeEstimate, StateLabel};

/// Seed-derivation stream ids (keep stable: they define reproducibility).
const STREAM_GRID_CELL: u64 = 1;
const STREAM_WINDOW_PROBE: u64 = 2;

/// Which drive pair the grid axes refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisKind {
    /// Physical biases (v_me, v_i).
    MeI,
    /// Transformed drives (v1, v2).
    V1V2,
}

impl std::fmt::Display for AxisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisKind::MeI => write!(f, "ME_I"),
            AxisKind::V1V2 => write!(f, "V1_V2"),
        }
    }
}

impl std::str::FromStr for AxisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ME_I" => Ok(AxisKind::MeI),
            "V1_V2" => Ok(AxisKind::V1V2),
            other => Err(Error::Config(format!("unknown axis kind '{other}'"))),
        }
    }
}

/// Per-cell quality flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellFlags {
    /// The step budget ran out before the dwell target was met.
    pub budget_limited: bool,
    /// A state ended with fewer dwells than requested.
    pub insufficient: bool,
    /// Node mapped outside the physical operating window; not simulated.
    pub out_of_window: bool,
}

impl CellFlags {
    pub fn is_clean(&self) -> bool {
        *self == CellFlags::default()
    }
}

impl std::fmt::Display for CellFlags {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut tokens = Vec::new();
        if self.budget_limited {
            tokens.push("budget_limited");
        }
        if self.insufficient {
            tokens.push("insufficient");
        }
        if self.out_of_window {
            tokens.push("out_of_window");
        }
        write!(f, "{}", tokens.join("|"))
    }
}

impl std::str::FromStr for CellFlags {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut flags = CellFlags::default();
        for token in s.split('|').filter(|t| !t.is_empty()) {
            match token {
                "budget_limited" => flags.budget_limited = true,
                "insufficient" => flags.insufficient = true,
                "out_of_window" => flags.out_of_window = true,
                other => return Err(Error::Config(format!("unknown cell flag '{other}'"))),
            }
        }
        Ok(flags)
    }
}

/// One grid cell: lifetime estimates at a single bias point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub tau_p: Option<LifetimeEstimate>,
    pub tau_ap: Option<LifetimeEstimate>,
    pub flags: CellFlags,
}

impl GridCell {
    pub fn is_valid(&self) -> bool {
        self.tau_p.is_some() && self.tau_ap.is_some() && !self.flags.out_of_window
    }
}

/// Lifetimes over a rectangular grid of drive values.
///
/// `cells` is row-major: index `i1 * axis2.len() + i2` holds the cell at
/// (axis1[i1], axis2[i2]). For `AxisKind::MeI` axis1 is v_me and axis2 is
/// v_i; for `AxisKind::V1V2` they are v1 and v2.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeGrid {
    pub axis_kind: AxisKind,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub cells: Vec<GridCell>,
    /// Provenance: master seed the per-cell seeds derive from.
    pub master_seed: u64,
    /// Provenance: requested dwells per state per cell.
    pub min_dwells: u32,
}

impl LifetimeGrid {
    pub fn n1(&self) -> usize {
        self.axis1.len()
    }

    pub fn n2(&self) -> usize {
        self.axis2.len()
    }

    pub fn cell(&self, i1: usize, i2: usize) -> &GridCell {
        &self.cells[i1 * self.axis2.len() + i2]
    }

    /// Drive values of node (i1, i2).
    pub fn node(&self, i1: usize, i2: usize) -> (f64, f64) {
        (self.axis1[i1], self.axis2[i2])
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis1.is_empty() || self.axis2.is_empty() {
            return Err(Error::InvalidArgument("grid axes must be non-empty".into()));
        }
        for axis in [&self.axis1, &self.axis2] {
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config(
                    "grid axis values must be strictly increasing".into(),
                ));
            }
        }
        if self.cells.len() != self.axis1.len() * self.axis2.len() {
            return Err(Error::InvalidArgument(format!(
                "cell count {} does not match {}x{} axes",
                self.cells.len(),
                self.axis1.len(),
                self.axis2.len()
            )));
        }
        Ok(())
    }
}

/// Symmetric physical operating window around zero bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingWindow {
    pub v_me_max: f64,
    pub v_i_max: f64,
}

impl OperatingWindow {
    pub fn contains(&self, bias: BiasPoint) -> bool {
        bias.v_me.abs() <= self.v_me_max * (1.0 + 1e-12)
            && bias.v_i.abs() <= self.v_i_max * (1.0 + 1e-12)
    }
}

/// Sweep execution settings.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub min_dwells: u32,
    pub max_steps_per_cell: u64,
    pub theta_on: f64,
    pub window: OperatingWindow,
    pub master_seed: u64,
}

/// Estimate both lifetimes at one bias point with a derived seed.
pub fn estimate_cell(
    bias: BiasPoint,
    params: &DeviceParams,
    sim: &SimConfig,
    opts: &SweepOptions,
    seed: u64,
) -> Result<GridCell> {
    let mut cfg = sim.clone();
    cfg.seed = seed;
    cfg.stop_after_transitions = None;
    let run = run_telegraph(
        &cfg,
        bias,
        params,
        opts.theta_on,
        opts.min_dwells,
        opts.max_steps_per_cell,
    )?;
    let tau_p = estimate_state(&run.dwells, StateLabel::P);
    let tau_ap = estimate_state(&run.dwells, StateLabel::Ap);
    let short = |e: &Option<LifetimeEstimate>| {
        e.map_or(true, |est| est.count < opts.min_dwells as usize)
    };
    let flags = CellFlags {
        budget_limited: run.stop_reason == StopReason::BudgetExhausted,
        insufficient: short(&tau_p) || short(&tau_ap),
        out_of_window: false,
    };
    Ok(GridCell { tau_p, tau_ap, flags })
}

fn check_axes(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config("sweep axis must be non-empty".into()));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(
            "sweep axis values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Sweep the physical (v_me, v_i) plane.
///
/// Cells run concurrently; the result is assembled in cell-index order with
/// per-cell seeds derived from the master seed, so the grid is identical for
/// any thread count. Cells that fail statistically are flagged, not fatal.
pub fn sweep_grid(
    v_me_values: &[f64],
    v_i_values: &[f64],
    params: &DeviceParams,
    sim: &SimConfig,
    opts: &SweepOptions,
) -> Result<LifetimeGrid> {
    check_axes(v_me_values)?;
    check_axes(v_i_values)?;
    params.validate()?;
    for &v in v_me_values {
        if v.abs() > opts.window.v_me_max * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "v_me = {v} outside the operating window (|v| <= {})",
                opts.window.v_me_max
            )));
        }
    }
    for &v in v_i_values {
        if v.abs() > opts.window.v_i_max * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "v_i = {v} outside the operating window (|v| <= {})",
                opts.window.v_i_max
            )));
        }
    }

    let n2 = v_i_values.len();
    let cells: Result<Vec<GridCell>> = (0..v_me_values.len() * n2)
        .into_par_iter()
        .map(|idx| {
            let bias = BiasPoint::new(v_me_values[idx / n2], v_i_values[idx % n2]);
            let seed = derive_seed(opts.master_seed, STREAM_GRID_CELL, idx as u64);
            estimate_cell(bias, params, sim, opts, seed)
        })
        .collect();

    Ok(LifetimeGrid {
        axis_kind: AxisKind::MeI,
        axis1: v_me_values.to_vec(),
        axis2: v_i_values.to_vec(),
        cells: cells?,
        master_seed: opts.master_seed,
        min_dwells: opts.min_dwells,
    })
}

/// Sweep a rectangle of transformed drives (v1, v2); each node is mapped
/// back to physical biases before simulation. Nodes that land outside the
/// operating window are flagged and skipped.
pub fn transformed_sweep(
    v1_values: &[f64],
    v2_values: &[f64],
    angles: &BasisAngles,
    params: &DeviceParams,
    sim: &SimConfig,
    opts: &SweepOptions,
) -> Result<LifetimeGrid> {
    check_axes(v1_values)?;
    check_axes(v2_values)?;
    params.validate()?;

    let n2 = v2_values.len();
    let cells: Result<Vec<GridCell>> = (0..v1_values.len() * n2)
        .into_par_iter()
        .map(|idx| {
            let (v1, v2) = (v1_values[idx / n2], v2_values[idx % n2]);
            let bias = angles.inverse_transform(v1, v2)?;
            if !opts.window.contains(bias) {
                return Ok(GridCell {
                    tau_p: None,
                    tau_ap: None,
                    flags: CellFlags { out_of_window: true, ..Default::default() },
                });
            }
            let seed = derive_seed(opts.master_seed, STREAM_GRID_CELL, idx as u64);
            estimate_cell(bias, params, sim, opts, seed)
        })
        .collect();

    Ok(LifetimeGrid {
        axis_kind: AxisKind::V1V2,
        axis1: v1_values.to_vec(),
        axis2: v2_values.to_vec(),
        cells: cells?,
        master_seed: opts.master_seed,
        min_dwells: opts.min_dwells,
    })
}

/// Build a grid from closed-form lifetime surfaces (no simulation). Used to
/// verify sensitivity analysis against analytic oracles.
pub fn synthetic_grid(
    kind: AxisKind,
    axis1: &[f64],
    axis2: &[f64],
    tau_p: impl Fn(f64, f64) -> f64,
    tau_ap: impl Fn(f64, f64) -> f64,
    count: usize,
) -> LifetimeGrid {
    let mut cells = Vec::with_capacity(axis1.len() * axis2.len());
    for &a in axis1 {
        for &b in axis2 {
            let make = |state: StateLabel, mean: f64| LifetimeEstimate {
                state,
                mean,
                stderr: mean / (count as f64).sqrt(),
                count,
                ks_statistic: 0.0,
            };
            cells.push(GridCell {
                tau_p: Some(make(StateLabel::P, tau_p(a, b))),
                tau_ap: Some(make(StateLabel::Ap, tau_ap(a, b))),
                flags: CellFlags::default(),
            });
        }
    }
    LifetimeGrid {
        axis_kind: kind,
        axis1: axis1.to_vec(),
        axis2: axis2.to_vec(),
        cells,
        master_seed: 0,
        min_dwells: count.min(u32::MAX as usize) as u32,
    }
}

/// Uniformly spaced symmetric axis of `n` nodes over [-half_width, half_width].
pub fn symmetric_axis(half_width: f64, n: u32) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64)
        .collect()
}

/// Probe result of the operating-window search.
#[derive(Debug, Clone, Copy)]
pub struct WindowProbe {
    pub window: OperatingWindow,
    /// Lifetime bounds the window was required to respect [s].
    pub lifetime_floor: f64,
    pub lifetime_ceiling: f64,
}

/// Find the largest symmetric (v_me, v_i) window around zero bias in which
/// both mean lifetimes stay within [floor, ceiling].
///
/// Each axis is probed independently at positive bias (the device is
/// statistically symmetric under sign reversal) with a doubling search
/// followed by bisection.
pub fn find_operating_window(
    params: &DeviceParams,
    sim: &SimConfig,
    theta_on: f64,
    lifetime_floor: f64,
    lifetime_ceiling: f64,
    probe_dwells: u32,
    max_steps_per_probe: u64,
    master_seed: u64,
) -> Result<WindowProbe> {
    params.validate()?;
    if !(lifetime_floor > 0.0 && lifetime_ceiling > lifetime_floor) {
        return Err(Error::InvalidArgument(
            "window search needs 0 < floor < ceiling".into(),
        ));
    }
    let opts = SweepOptions {
        min_dwells: probe_dwells,
        max_steps_per_cell: max_steps_per_probe,
        theta_on,
        window: OperatingWindow { v_me_max: f64::INFINITY, v_i_max: f64::INFINITY },
        master_seed,
    };
    let mut probe_idx = 0u64;
    let mut ok = |bias: BiasPoint| -> Result<bool> {
        let seed = derive_seed(master_seed, STREAM_WINDOW_PROBE, probe_idx);
        probe_idx += 1;
        let cell = estimate_cell(bias, params, sim, &opts, seed)?;
        Ok(match (cell.tau_p, cell.tau_ap) {
            (Some(p), Some(ap)) if !cell.flags.insufficient => {
                let lo = p.mean.min(ap.mean);
                let hi = p.mean.max(ap.mean);
                lo >= lifetime_floor && hi <= lifetime_ceiling
            }
            // Too few switches within budget: lifetimes out of range.
            _ => false,
        })
    };

    let zero_ok = ok(BiasPoint::ZERO)?;
    if !zero_ok {
        return Err(Error::Domain(format!(
            "zero-bias lifetimes already violate [{lifetime_floor:.3e}, {lifetime_ceiling:.3e}] s"
        )));
    }

    let mut limits = [0.0f64; 2];
    for (axis, limit) in limits.iter_mut().enumerate() {
        let bias_at = |v: f64| {
            if axis == 0 {
                BiasPoint::new(v, 0.0)
            } else {
                BiasPoint::new(0.0, v)
            }
        };
        let mut lo = 0.0f64;
        let mut hi = 1e-3;
        // Doubling search for the first failing voltage (cap at 2 V).
        while hi < 2.0 && ok(bias_at(hi))? {
            lo = hi;
            hi *= 2.0;
        }
        if hi >= 2.0 {
            *limit = lo;
            continue;
        }
        for _ in 0..5 {
            let mid = 0.5 * (lo + hi);
            if ok(bias_at(mid))? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        *limit = lo;
    }

    Ok(WindowProbe {
        window: OperatingWindow { v_me_max: limits[0], v_i_max: limits[1] },
        lifetime_floor,
        lifetime_ceiling,
    })
}
