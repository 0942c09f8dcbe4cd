//! Telegraph-state detection and dwell-time statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::stats;

/// Telegraph state of one sample.
///
/// `Transit` only appears before the first threshold crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    P,
    Ap,
    Transit,
}

impl std::fmt::Display for StateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateLabel::P => write!(f, "P"),
            StateLabel::Ap => write!(f, "AP"),
            StateLabel::Transit => write!(f, "transit"),
        }
    }
}

impl std::str::FromStr for StateLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" => Ok(StateLabel::P),
            "AP" => Ok(StateLabel::Ap),
            "transit" => Ok(StateLabel::Transit),
            other => Err(Error::Config(format!("unknown state label '{other}'"))),
        }
    }
}

/// Hysteretic two-threshold state detector: the label switches to P only at
/// m_z >= +theta_on and to AP only at m_z <= -theta_on; sub-threshold
/// excursions keep the previous label.
#[derive(Debug, Clone)]
pub struct SchmittDetector {
    theta_on: f64,
    state: StateLabel,
}

impl SchmittDetector {
    pub fn new(theta_on: f64) -> Self {
        SchmittDetector { theta_on, state: StateLabel::Transit }
    }

    /// Feed one m_z sample; returns true when the label changed.
    pub fn update(&mut self, mz: f64) -> bool {
        let next = if mz >= self.theta_on {
            StateLabel::P
        } else if mz <= -self.theta_on {
            StateLabel::Ap
        } else {
            self.state
        };
        let changed = next != self.state;
        self.state = next;
        changed
    }

    pub fn state(&self) -> StateLabel {
        self.state
    }
}

/// One completed residence in a telegraph state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellRecord {
    pub state: StateLabel,
    /// Residence duration [s].
    pub duration: f64,
    /// Time of the first sample of the run [s].
    pub start_time: f64,
}

/// Run-length accumulator shared by the batch and streaming dwell paths.
#[derive(Debug, Clone, Default)]
pub struct RunAccumulator {
    completed: Vec<(StateLabel, u64, u64)>, // (state, start index, length)
    current: Option<(StateLabel, u64, u64)>,
    index: u64,
    runs_started: u64,
}

impl RunAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feed the label of the next sample.
    pub fn push(&mut self, label: StateLabel) {
        let idx = self.index;
        self.index += 1;
        if label == StateLabel::Transit {
            return;
        }
        match self.current {
            Some((state, _, ref mut len)) if state == label => *len += 1,
            ref mut slot => {
                if let Some(done) = slot.take() {
                    self.completed.push(done);
                }
                *slot = Some((label, idx, 1));
                self.runs_started += 1;
            }
        }
    }

    /// Number of non-transit runs begun so far (including the ongoing one).
    pub fn runs_started(&self) -> u64 {
        self.runs_started
    }

    /// Close the accumulator and return the untruncated dwells: the first and
    /// last runs are discarded, and fewer than three runs yield nothing.
    pub fn into_dwells(mut self, dt_effective: f64) -> Vec<DwellRecord> {
        if let Some(cur) = self.current.take() {
            self.completed.push(cur);
        }
        if self.completed.len() < 3 {
            return Vec::new();
        }
        self.completed[1..self.completed.len() - 1]
            .iter()
            .map(|&(state, start, len)| DwellRecord {
                state,
                duration: len as f64 * dt_effective,
                start_time: start as f64 * dt_effective,
            })
            .collect()
    }
}

/// Label every stored sample of a trajectory with the hysteretic detector.
///
/// A result that never leaves `Transit` means no threshold crossing occurred;
/// callers should surface that as a warning rather than an error.
pub fn detect_states(trajectory: &Trajectory, theta_on: f64) -> Result<Vec<StateLabel>> {
    if !(theta_on > 0.0 && theta_on < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "theta_on must be in (0, 1), got {theta_on}"
        )));
    }
    let mut det = SchmittDetector::new(theta_on);
    Ok(trajectory
        .samples
        .iter()
        .map(|&(_, m)| {
            det.update(m.z);
            det.state()
        })
        .collect())
}

/// Collapse a label sequence into completed dwell records.
pub fn dwell_times(labels: &[StateLabel], dt_effective: f64) -> Vec<DwellRecord> {
    let mut acc = RunAccumulator::new();
    for &l in labels {
        acc.push(l);
    }
    acc.into_dwells(dt_effective)
}

/// Mean dwell time of one state with uncertainty and a goodness-of-fit
/// diagnostic against the exponential law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeEstimate {
    pub state: StateLabel,
    /// Mean dwell time [s].
    pub mean: f64,
    /// Standard error under the exponential model: mean / sqrt(count).
    pub stderr: f64,
    pub count: usize,
    /// One-sample KS statistic against Exp(mean); NaN below two samples.
    pub ks_statistic: f64,
}

impl LifetimeEstimate {
    fn from_durations(state: StateLabel, durations: &[f64]) -> Option<Self> {
        if durations.is_empty() {
            return None;
        }
        let mean = durations.iter().sum::<f64>() / durations.len() as f64;
        let ks = if durations.len() >= 2 {
            stats::ks_statistic_exponential(durations, mean)
        } else {
            f64::NAN
        };
        Some(LifetimeEstimate {
            state,
            mean,
            stderr: mean / (durations.len() as f64).sqrt(),
            count: durations.len(),
            ks_statistic: ks,
        })
    }

    /// Asymptotic p-value of the KS diagnostic (meaningful for count >= 50).
    pub fn ks_p_value(&self) -> f64 {
        stats::ks_p_value(self.ks_statistic, self.count as f64)
    }
}

/// Per-state dwell durations split out of a dwell sequence.
pub fn dwell_durations(dwells: &[DwellRecord], state: StateLabel) -> Vec<f64> {
    dwells
        .iter()
        .filter(|d| d.state == state)
        .map(|d| d.duration)
        .collect()
}

/// Estimate the lifetime of a single state; None when no dwells exist.
pub fn estimate_state(dwells: &[DwellRecord], state: StateLabel) -> Option<LifetimeEstimate> {
    LifetimeEstimate::from_durations(state, &dwell_durations(dwells, state))
}

/// Estimate both lifetimes; errors name the state that lacks samples.
pub fn estimate_lifetimes(
    dwells: &[DwellRecord],
) -> Result<(LifetimeEstimate, LifetimeEstimate)> {
    let p = estimate_state(dwells, StateLabel::P)
        .ok_or_else(|| Error::InsufficientData("no completed P dwells".into()))?;
    let ap = estimate_state(dwells, StateLabel::Ap)
        .ok_or_else(|| Error::InsufficientData("no completed AP dwells".into()))?;
    Ok((p, ap))
}

/// Duty-fraction firing rate tau_ap / (tau_p + tau_ap) in [0, 1].
pub fn firing_rate(tau_p: f64, tau_ap: f64) -> Result<f64> {
    if !(tau_p >= 0.0) || !(tau_ap >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lifetimes must be non-negative, got tau_p = {tau_p}, tau_ap = {tau_ap}"
        )));
    }
    if tau_p == 0.0 && tau_ap == 0.0 {
        return Err(Error::InvalidArgument(
            "firing rate undefined when both lifetimes are zero".into(),
        ));
    }
    Ok(tau_ap / (tau_p + tau_ap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::BiasPoint;
    use crate::vec3::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn traj_from_mz(mz: &[f64], dt_eff: f64) -> Trajectory {
        Trajectory {
            dt_effective: dt_eff,
            samples: mz
                .iter()
                .enumerate()
                .map(|(i, &z)| {
                    let x = (1.0 - z * z).max(0.0).sqrt();
                    (i as f64 * dt_eff, Vec3::new(x, 0.0, z))
                })
                .collect(),
            bias: BiasPoint::ZERO,
            seed: 0,
        }
    }

    #[test]
    fn constant_high_signal_is_all_p() {
        let traj = traj_from_mz(&[0.9; 50], 1e-9);
        let labels = detect_states(&traj, 0.7).unwrap();
        assert!(labels.iter().all(|&l| l == StateLabel::P));
    }

    #[test]
    fn square_wave_transitions_at_edges() {
        let mut mz = Vec::new();
        for _ in 0..4 {
            mz.extend_from_slice(&[0.9; 10]);
            mz.extend_from_slice(&[-0.9; 10]);
        }
        let traj = traj_from_mz(&mz, 1e-9);
        let labels = detect_states(&traj, 0.7).unwrap();
        for (i, &l) in labels.iter().enumerate() {
            let expected = if (i / 10) % 2 == 0 { StateLabel::P } else { StateLabel::Ap };
            assert_eq!(l, expected, "sample {i}");
        }
    }

    #[test]
    fn subthreshold_dip_keeps_label() {
        let mut mz = vec![0.9; 10];
        mz.extend_from_slice(&[-0.5; 5]); // dips below zero but not past -0.7
        mz.extend_from_slice(&[0.9; 10]);
        let traj = traj_from_mz(&mz, 1e-9);
        let labels = detect_states(&traj, 0.7).unwrap();
        assert!(labels.iter().all(|&l| l == StateLabel::P));
    }

    #[test]
    fn no_crossing_stays_transit() {
        let traj = traj_from_mz(&[0.1; 20], 1e-9);
        let labels = detect_states(&traj, 0.7).unwrap();
        assert!(labels.iter().all(|&l| l == StateLabel::Transit));
    }

    #[test]
    fn theta_out_of_range_is_rejected() {
        let traj = traj_from_mz(&[0.9; 5], 1e-9);
        assert!(detect_states(&traj, 0.0).is_err());
        assert!(detect_states(&traj, 1.0).is_err());
    }

    #[test]
    fn middle_run_survives_truncation() {
        let mut labels = vec![StateLabel::P; 100];
        labels.extend(vec![StateLabel::Ap; 50]);
        labels.extend(vec![StateLabel::P; 30]);
        let dwells = dwell_times(&labels, 1e-9);
        assert_eq!(dwells.len(), 1);
        assert_eq!(dwells[0].state, StateLabel::Ap);
        assert!((dwells[0].duration - 50e-9).abs() < 1e-18);
        assert!((dwells[0].start_time - 100e-9).abs() < 1e-18);
    }

    #[test]
    fn five_runs_give_three_dwells() {
        let mut labels = Vec::new();
        for (i, len) in [7usize, 3, 9, 4, 6].iter().enumerate() {
            let s = if i % 2 == 0 { StateLabel::P } else { StateLabel::Ap };
            labels.extend(vec![s; *len]);
        }
        let dwells = dwell_times(&labels, 1.0);
        assert_eq!(dwells.len(), 3);
        assert_eq!(dwells[0].duration, 3.0);
        assert_eq!(dwells[1].duration, 9.0);
        assert_eq!(dwells[2].duration, 4.0);
        assert!(dwells.windows(2).all(|w| w[0].state != w[1].state));
    }

    #[test]
    fn single_run_yields_no_dwells() {
        let labels = vec![StateLabel::P; 40];
        assert!(dwell_times(&labels, 1.0).is_empty());
    }

    #[test]
    fn hysteresis_is_idempotent_on_clean_signal() {
        // Labeling a signal that is already a clean telegraph reproduces the
        // same run structure.
        let mut mz = Vec::new();
        for (i, len) in [12usize, 8, 20, 5, 9].iter().enumerate() {
            let v = if i % 2 == 0 { 0.9 } else { -0.9 };
            mz.extend(std::iter::repeat(v).take(*len));
        }
        let traj = traj_from_mz(&mz, 1.0);
        let labels = detect_states(&traj, 0.7).unwrap();
        let relabeled = dwell_times(&labels, 1.0);
        let direct: Vec<StateLabel> = mz
            .iter()
            .map(|&v| if v > 0.0 { StateLabel::P } else { StateLabel::Ap })
            .collect();
        let expected = dwell_times(&direct, 1.0);
        assert_eq!(relabeled, expected);
    }

    #[test]
    fn lifetime_arithmetic() {
        let dwells: Vec<DwellRecord> = [2e-6, 4e-6, 6e-6]
            .iter()
            .enumerate()
            .map(|(i, &d)| DwellRecord {
                state: StateLabel::P,
                duration: d,
                start_time: i as f64,
            })
            .collect();
        let est = estimate_state(&dwells, StateLabel::P).unwrap();
        assert!((est.mean - 4e-6).abs() < 1e-18);
        assert_eq!(est.count, 3);
        assert!((est.stderr - 4e-6 / 3f64.sqrt()).abs() < 1e-18);
    }

    #[test]
    fn estimate_names_missing_state() {
        let dwells = vec![DwellRecord {
            state: StateLabel::P,
            duration: 1e-9,
            start_time: 0.0,
        }];
        let err = estimate_lifetimes(&dwells).unwrap_err();
        assert!(err.to_string().contains("AP"));
    }

    #[test]
    fn exponential_samples_recover_mean_and_pass_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mean = 10e-9;
        let n = 10_000;
        let dwells: Vec<DwellRecord> = (0..n)
            .map(|i| DwellRecord {
                state: if i % 2 == 0 { StateLabel::P } else { StateLabel::Ap },
                duration: -mean * (1.0 - rng.random::<f64>()).ln(),
                start_time: i as f64,
            })
            .collect();
        let (p, ap) = estimate_lifetimes(&dwells).unwrap();
        for est in [p, ap] {
            assert!((est.mean - mean).abs() < 3.0 * est.stderr);
            assert!(est.ks_p_value() > 0.01);
        }
    }

    #[test]
    fn firing_rate_formula() {
        assert_eq!(firing_rate(1e-6, 1e-6).unwrap(), 0.5);
        assert_eq!(firing_rate(1e-6, 0.0).unwrap(), 0.0);
        assert!((firing_rate(1e-6, 3e-6).unwrap() - 0.75).abs() < 1e-15);
        assert!(firing_rate(0.0, 0.0).is_err());
        assert!(firing_rate(-1.0, 1.0).is_err());
    }

    #[test]
    fn firing_rate_is_monotone_on_grid() {
        let taus: Vec<f64> = (1..=20).map(|i| i as f64 * 1e-9).collect();
        for &tp in &taus {
            let rates: Vec<f64> = taus.iter().map(|&ta| firing_rate(tp, ta).unwrap()).collect();
            assert!(rates.windows(2).all(|w| w[1] > w[0]), "not increasing in tau_ap");
        }
        for &ta in &taus {
            let rates: Vec<f64> = taus.iter().map(|&tp| firing_rate(tp, ta).unwrap()).collect();
            assert!(rates.windows(2).all(|w| w[1] < w[0]), "not decreasing in tau_p");
        }
    }
}
