//! Configuration: one structured file with `[device]`, `[sim]`, `[sweep]` and
//! `[analysis]` sections. User files override the shipped defaults key by
//! key; unknown keys are a hard error.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::SimConfig;
use crate::params::DeviceParams;
use crate::vec3::Vec3;

const DEFAULT_TOML: &str = include_str!("../config/default.toml");

/// `[sim]` section; see `SimConfig` for field meanings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    pub initial_m: Vec3,
    pub record_stride: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_after_transitions: Option<u32>,
}

impl SimSection {
    /// Build an integrator config; the early-stop detector shares the
    /// analysis threshold.
    pub fn to_sim_config(&self, theta_on: f64) -> SimConfig {
        SimConfig {
            dt: self.dt,
            t_max: self.t_max,
            seed: self.seed,
            initial_m: self.initial_m,
            record_stride: self.record_stride,
            stop_after_transitions: self.stop_after_transitions,
            stop_theta_on: theta_on,
        }
    }
}

/// `[sweep]` section: bias-plane grid layout and per-cell budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Half-width of the operating window along v_me [V].
    pub v_me_max: f64,
    /// Half-width of the operating window along v_i [V].
    pub v_i_max: f64,
    /// Nodes per axis of the default grid.
    pub grid_points: u32,
    /// Required completed dwells per state per cell.
    pub min_dwells: u32,
    /// Integration-step budget per cell (keeps sweeps deterministic).
    pub max_steps_per_cell: u64,
    pub master_seed: u64,
}

/// `[analysis]` section: telegraph detection and reporting thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub theta_on: f64,
    /// Ratios above this are flagged as "dominant" in reports.
    pub ratio_threshold: f64,
    /// Planar fits below this R^2 are rejected.
    pub min_r_squared: f64,
    /// Operating-window lifetime bounds [s].
    pub lifetime_floor: f64,
    pub lifetime_ceiling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub device: DeviceParams,
    pub sim: SimSection,
    pub sweep: SweepSection,
    pub analysis: AnalysisSection,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.sim.to_sim_config(self.analysis.theta_on).validate()?;
        if !(self.sweep.v_me_max > 0.0 && self.sweep.v_i_max > 0.0) {
            return Err(Error::Config("sweep window half-widths must be > 0".into()));
        }
        if self.sweep.grid_points < 2 {
            return Err(Error::Config("grid_points must be >= 2".into()));
        }
        if self.sweep.min_dwells == 0 {
            return Err(Error::Config("min_dwells must be >= 1".into()));
        }
        if !(self.analysis.theta_on > 0.0 && self.analysis.theta_on < 1.0) {
            return Err(Error::Config(format!(
                "theta_on must be in (0, 1), got {}",
                self.analysis.theta_on
            )));
        }
        if !(self.analysis.min_r_squared > 0.0 && self.analysis.min_r_squared <= 1.0) {
            return Err(Error::Config("min_r_squared must be in (0, 1]".into()));
        }
        if !(self.analysis.lifetime_floor > 0.0
            && self.analysis.lifetime_ceiling > self.analysis.lifetime_floor)
        {
            return Err(Error::Config(
                "lifetime bounds must satisfy 0 < floor < ceiling".into(),
            ));
        }
        Ok(())
    }

    /// Full resolved configuration as TOML (all defaults materialized).
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// The shipped defaults.
pub fn default_config() -> Config {
    let cfg: Config =
        toml::from_str(DEFAULT_TOML).expect("embedded default config is valid");
    cfg
}

pub fn default_device_params() -> DeviceParams {
    default_config().device
}

pub fn default_sim_config() -> SimConfig {
    let cfg = default_config();
    cfg.sim.to_sim_config(cfg.analysis.theta_on)
}

/// Parse a user configuration, overriding defaults key by key.
pub fn parse_config(user_toml: &str) -> Result<Config> {
    let mut base: toml::Value =
        toml::from_str(DEFAULT_TOML).expect("embedded default config is valid");
    let user: toml::Value = toml::from_str(user_toml)
        .map_err(|e| Error::Config(format!("malformed config: {e}")))?;
    merge_value(&mut base, user);
    let cfg: Config = base
        .try_into()
        .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Load a config file, or the defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        None => Ok(default_config()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                Error::Config(format!("cannot read config file {}: {e}", p.display()))
            })?;
            parse_config(&text)
        }
    }
}

fn merge_value(base: &mut toml::Value, user: toml::Value) {
    match (base, user) {
        (toml::Value::Table(b), toml::Value::Table(u)) => {
            for (k, v) in u {
                match b.get_mut(&k) {
                    Some(slot) => merge_value(slot, v),
                    None => {
                        // Unknown section/key: keep it so deserialization
                        // reports the offending name.
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
