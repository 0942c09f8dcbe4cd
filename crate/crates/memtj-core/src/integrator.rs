//! Fixed-step stochastic Heun integration of the macrospin equation.
//!
//! Trajectories are deterministic functions of (seed, config, bias, params):
//! each run owns a counter-based RNG seeded explicitly, so results do not
//! depend on scheduling or on how many other runs execute concurrently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::magnet::{llg_rhs, thermal_field_sample};
use crate::params::{BiasPoint, DeviceParams};
use crate::telegraph::{DwellRecord, RunAccumulator, SchmittDetector};
use crate::vec3::Vec3;

/// Predictor displacements beyond this squared norm indicate the step size is
/// far outside the stability region (rotation per step of order a radian).
const BLOWUP_NORM_SQ: f64 = 4.0;

/// Integration run settings. Field names double as `[sim]` config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integrator time step [s].
    pub dt: f64,
    /// Maximum simulated time per trajectory [s].
    pub t_max: f64,
    /// RNG seed for this trajectory.
    pub seed: u64,
    /// Initial unit magnetization.
    pub initial_m: Vec3,
    /// Store every k-th sample.
    pub record_stride: u32,
    /// Stop early once this many telegraph transitions have been observed.
    pub stop_after_transitions: Option<u32>,
    /// Threshold used by the early-stop transition detector.
    pub stop_theta_on: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max >= self.dt) {
            return Err(Error::Config(format!(
                "t_max ({}) must be at least dt ({})",
                self.t_max, self.dt
            )));
        }
        if (self.initial_m.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "initial_m must be a unit vector, |m| = {}",
                self.initial_m.norm()
            )));
        }
        if self.record_stride < 1 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        if let Some(n) = self.stop_after_transitions {
            if n == 0 {
                return Err(Error::Config("stop_after_transitions must be >= 1".into()));
            }
        }
        if !(self.stop_theta_on > 0.0 && self.stop_theta_on < 1.0) {
            return Err(Error::Config(format!(
                "stop_theta_on must be in (0, 1), got {}",
                self.stop_theta_on
            )));
        }
        Ok(())
    }

    /// Spacing of stored samples [s].
    pub fn dt_effective(&self) -> f64 {
        self.dt * self.record_stride as f64
    }
}

/// Recorded time series of the unit magnetization.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Spacing of stored samples [s].
    pub dt_effective: f64,
    /// (time, m) pairs, uniformly spaced, starting at t = 0.
    pub samples: Vec<(f64, Vec3)>,
    pub bias: BiasPoint,
    pub seed: u64,
}

/// One Heun (predictor-corrector) step. A single thermal-field sample is
/// drawn and used in both stages; the corrector result is renormalized to
/// unit length. Non-finite or runaway intermediates are rejected.
pub fn heun_step(
    m: Vec3,
    bias: BiasPoint,
    dt: f64,
    rng: &mut ChaCha8Rng,
    params: &DeviceParams,
) -> Result<Vec3> {
    let h_th = thermal_field_sample(rng, params, dt)?;
    let k1 = llg_rhs(m, bias, h_th, params);
    let m_pred = m + k1 * dt;
    if !(m_pred.norm_sq() <= BLOWUP_NORM_SQ) {
        return Err(step_blowup(m_pred));
    }
    let k2 = llg_rhs(m_pred, bias, h_th, params);
    let m_next = m + (k1 + k2) * (0.5 * dt);
    if !m_next.is_finite() || !(m_next.norm_sq() <= BLOWUP_NORM_SQ) {
        return Err(step_blowup(m_next));
    }
    Ok(m_next.normalized())
}

fn step_blowup(m: Vec3) -> Error {
    Error::Numerical {
        step: 0,
        reason: format!(
            "integration step left the stability region (|m| = {:.3e}); reduce dt",
            m.norm()
        ),
    }
}

fn attach_step(err: Error, step: u64) -> Error {
    match err {
        Error::Numerical { reason, .. } => Error::Numerical { step, reason },
        other => other,
    }
}

/// Integrate one seeded trajectory, recording every `record_stride`-th sample.
pub fn run_trajectory(
    config: &SimConfig,
    bias: BiasPoint,
    params: &DeviceParams,
) -> Result<Trajectory> {
    config.validate()?;
    if !bias.is_finite() {
        return Err(Error::InvalidArgument("bias voltages must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_steps = (config.t_max / config.dt).floor() as u64;
    let stride = config.record_stride as u64;
    let dt_eff = config.dt_effective();

    let mut detector = config
        .stop_after_transitions
        .map(|_| SchmittDetector::new(config.stop_theta_on));
    let stop_target = config.stop_after_transitions.unwrap_or(0) as u64;

    let mut m = config.initial_m;
    let mut samples = Vec::with_capacity((n_steps / stride + 2) as usize);
    samples.push((0.0, m));
    let mut transitions = 0u64;
    if let Some(det) = detector.as_mut() {
        det.update(m.z);
    }

    for step in 1..=n_steps {
        m = heun_step(m, bias, config.dt, &mut rng, params).map_err(|e| attach_step(e, step))?;
        if step % stride == 0 {
            let t = step as f64 * config.dt;
            samples.push((t, m));
            if let Some(det) = detector.as_mut() {
                if det.update(m.z) {
                    transitions += 1;
                    if transitions >= stop_target {
                        break;
                    }
                }
            }
        }
    }

    Ok(Trajectory { dt_effective: dt_eff, samples, bias, seed: config.seed })
}

/// Why a telegraph run terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Requested dwell statistics were collected.
    TargetReached,
    /// The step budget ran out first.
    BudgetExhausted,
    /// t_max was reached first.
    TimeLimit,
}

/// Outcome of a streaming dwell-statistics run (no samples are stored).
#[derive(Debug, Clone)]
pub struct TelegraphRun {
    pub dwells: Vec<DwellRecord>,
    pub transitions: u64,
    pub steps_run: u64,
    pub stop_reason: StopReason,
    pub dt_effective: f64,
}

/// Integrate until at least `min_dwells_per_state` completed dwells exist per
/// state, or `max_steps` / `t_max` is exhausted. Samples are streamed through
/// the telegraph detector instead of being stored, so memory stays constant.
pub fn run_telegraph(
    config: &SimConfig,
    bias: BiasPoint,
    params: &DeviceParams,
    theta_on: f64,
    min_dwells_per_state: u32,
    max_steps: u64,
) -> Result<TelegraphRun> {
    config.validate()?;
    if !(theta_on > 0.0 && theta_on < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "theta_on must be in (0, 1), got {theta_on}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_steps = ((config.t_max / config.dt).floor() as u64).min(max_steps);
    let stride = config.record_stride as u64;
    let dt_eff = config.dt_effective();

    let mut detector = SchmittDetector::new(theta_on);
    let mut runs = RunAccumulator::new();
    let mut m = config.initial_m;
    detector.update(m.z);
    runs.push(detector.state());

    // Alternating runs: 2n+2 of them guarantee n completed dwells per state
    // after the truncated first and last runs are dropped.
    let target_runs = 2 * min_dwells_per_state as u64 + 2;
    let mut transitions = 0u64;
    let mut steps_run = 0u64;
    let mut stop_reason = StopReason::TimeLimit;

    for step in 1..=n_steps {
        m = heun_step(m, bias, config.dt, &mut rng, params).map_err(|e| attach_step(e, step))?;
        steps_run = step;
        if step % stride == 0 {
            let changed = detector.update(m.z);
            runs.push(detector.state());
            if changed {
                transitions += 1;
                if runs.runs_started() >= target_runs {
                    stop_reason = StopReason::TargetReached;
                    break;
                }
            }
        }
    }
    if stop_reason != StopReason::TargetReached && steps_run >= max_steps {
        stop_reason = StopReason::BudgetExhausted;
    }

    Ok(TelegraphRun {
        dwells: runs.into_dwells(dt_eff),
        transitions,
        steps_run,
        stop_reason,
        dt_effective: dt_eff,
    })
}

/// Simulate small-angle precession about the easy axis at T = 0 and compare
/// the zero-crossing frequency of m_x against the analytic triaxial value
/// f = (gamma'/2pi) * Ms * sqrt((nx-nz)(ny-nz)). Returns the relative error.
pub fn precession_frequency_check(params: &DeviceParams, dt: f64) -> Result<f64> {
    let mut cold = params.clone();
    cold.temperature = 0.0;

    let ms = cold.saturation_magnetization;
    let n = cold.demag_factors;
    let gamma_prime =
        crate::constants::GAMMA / (1.0 + cold.damping_alpha * cold.damping_alpha);
    let f_analytic =
        gamma_prime / (2.0 * std::f64::consts::PI) * ms * ((n.nx - n.nz) * (n.ny - n.nz)).sqrt();

    // Small tilt along the in-plane hard axis keeps the orbit in the linear
    // regime of the triaxial well.
    let amp = 2e-4;
    let mut m = Vec3::new(amp, 0.0, (1.0 - amp * amp).sqrt());
    let periods = 40.0;
    let n_steps = (periods / (f_analytic * dt)).round() as u64;

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut crossings: Vec<f64> = Vec::new();
    let mut prev = m.x;
    for step in 1..=n_steps {
        m = heun_step(m, BiasPoint::ZERO, dt, &mut rng, &cold)
            .map_err(|e| attach_step(e, step))?;
        if prev.signum() != m.x.signum() && prev != 0.0 {
            // linear interpolation of the crossing instant
            let frac = prev / (prev - m.x);
            crossings.push((step as f64 - 1.0 + frac) * dt);
        }
        prev = m.x;
    }
    if crossings.len() < 4 {
        return Err(Error::Numerical {
            step: n_steps,
            reason: "too few zero crossings to estimate the precession frequency".into(),
        });
    }
    let span = crossings.last().unwrap() - crossings.first().unwrap();
    let f_sim = (crossings.len() as f64 - 1.0) / (2.0 * span);
    Ok((f_sim - f_analytic).abs() / f_analytic)
}

/// Deterministic per-stream seed derivation (SplitMix64 chain over the
/// master seed, a stream id, and an index within the stream).
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    fn splitmix(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut s = master;
    let a = splitmix(&mut s);
    let mut s2 = a ^ stream;
    let b = splitmix(&mut s2);
    let mut s3 = b ^ index;
    splitmix(&mut s3)
}
