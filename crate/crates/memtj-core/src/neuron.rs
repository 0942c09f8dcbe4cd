//! Fast behavioral neuron: a two-state Markov telegraph whose dwell rates
//! come from a bilinear lookup table over the transformed drive plane.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::characterization::BasisAngles;
use crate::error::{Error, Result};
use crate::integrator::{derive_seed, run_telegraph, SimConfig};
use crate::params::{BiasPoint, DeviceParams};
use crate::stats::ks_two_sample;
use crate::sweep::{AxisKind, LifetimeGrid};
use crate::telegraph::{dwell_durations, StateLabel};

/// Interpolable lifetime lookup over a (v1, v2) rectangle.
///
/// Interpolation is bilinear on the log lifetimes (positive by construction,
/// linear where the bias dependence is exponential); node queries reproduce
/// the node values exactly. Queries outside the domain are errors, never
/// extrapolations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronLut {
    axis1: Vec<f64>,
    axis2: Vec<f64>,
    log_tau_p: Vec<f64>,
    log_tau_ap: Vec<f64>,
}

impl NeuronLut {
    /// Domain rectangle ((v1_min, v1_max), (v2_min, v2_max)).
    pub fn domain(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.axis1[0], *self.axis1.last().unwrap()),
            (self.axis2[0], *self.axis2.last().unwrap()),
        )
    }

    pub fn contains(&self, v1: f64, v2: f64) -> bool {
        let ((a_lo, a_hi), (b_lo, b_hi)) = self.domain();
        v1 >= a_lo && v1 <= a_hi && v2 >= b_lo && v2 <= b_hi
    }

    /// Interpolated (tau_p, tau_ap) at a drive point [s].
    pub fn query(&self, v1: f64, v2: f64) -> Result<(f64, f64)> {
        if !self.contains(v1, v2) {
            let ((a_lo, a_hi), (b_lo, b_hi)) = self.domain();
            return Err(Error::Domain(format!(
                "drive ({v1}, {v2}) outside the table domain \
                 [{a_lo}, {a_hi}] x [{b_lo}, {b_hi}]"
            )));
        }
        let (i, u) = bracket(&self.axis1, v1);
        let (j, w) = bracket(&self.axis2, v2);
        let n2 = self.axis2.len();
        let at = |t: &[f64], a: usize, b: usize| t[a * n2 + b];
        let lerp2 = |t: &[f64]| {
            let f00 = at(t, i, j);
            let f10 = at(t, i + 1, j);
            let f01 = at(t, i, j + 1);
            let f11 = at(t, i + 1, j + 1);
            (1.0 - u) * ((1.0 - w) * f00 + w * f01) + u * ((1.0 - w) * f10 + w * f11)
        };
        Ok((lerp2(&self.log_tau_p).exp(), lerp2(&self.log_tau_ap).exp()))
    }

    /// Smallest lifetime value stored in the table [s].
    pub fn min_lifetime(&self) -> f64 {
        self.log_tau_p
            .iter()
            .chain(&self.log_tau_ap)
            .fold(f64::INFINITY, |m, &x| m.min(x))
            .exp()
    }
}

/// Cell index and interpolation weight along one axis.
fn bracket(axis: &[f64], v: f64) -> (usize, f64) {
    let n = axis.len();
    let mut i = axis.partition_point(|&x| x <= v);
    // v == axis[0] gives i = 1; v == last gives i = n: clamp to a valid cell.
    i = i.clamp(1, n - 1);
    let lo = axis[i - 1];
    let hi = axis[i];
    ((i - 1), ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// Build the lookup table from a transformed-drive lifetime grid.
pub fn build_lut(grid: &LifetimeGrid) -> Result<NeuronLut> {
    if grid.axis_kind != AxisKind::V1V2 {
        return Err(Error::InvalidArgument(
            "the neuron table is built over transformed (v1, v2) drives".into(),
        ));
    }
    grid.validate()?;
    if grid.n1() < 2 || grid.n2() < 2 {
        return Err(Error::InvalidArgument(
            "the neuron table needs at least 2 nodes per axis".into(),
        ));
    }
    let invalid: Vec<String> = grid
        .cells
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_valid())
        .map(|(idx, _)| {
            let (i1, i2) = (idx / grid.n2(), idx % grid.n2());
            format!("({}, {})", grid.axis1[i1], grid.axis2[i2])
        })
        .collect();
    if !invalid.is_empty() {
        return Err(Error::InsufficientData(format!(
            "grid has {} failed cells in the requested domain: {}",
            invalid.len(),
            invalid.join(", ")
        )));
    }
    Ok(NeuronLut {
        axis1: grid.axis1.clone(),
        axis2: grid.axis2.clone(),
        log_tau_p: grid.cells.iter().map(|c| c.tau_p.unwrap().mean.ln()).collect(),
        log_tau_ap: grid.cells.iter().map(|c| c.tau_ap.unwrap().mean.ln()).collect(),
    })
}

/// One piece of a piecewise-constant drive schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSegment {
    /// Segment start [s]; the first segment must start at 0.
    pub t_start: f64,
    pub v1: f64,
    pub v2: f64,
}

/// Emitted spike train; spikes are the AP-entry instants.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    pub spike_times: Vec<f64>,
    /// State changes as (time, new state), starting with (0, P), when
    /// waveform recording was requested.
    pub state_changes: Option<Vec<(f64, StateLabel)>>,
    pub duration: f64,
}

/// Maximum allowed dt relative to the smallest lifetime along the drive.
const MAX_DT_FRACTION: f64 = 1.0 / 20.0;

/// Simulate the two-state Markov telegraph along a drive schedule.
///
/// Each step escapes the current state with probability
/// 1 - exp(-dt / tau_state(v1, v2)); a P -> AP transition is a spike. The
/// chain starts in P at t = 0 and is reproducible from the seed alone.
pub fn generate_spike_train(
    lut: &NeuronLut,
    drive: &[DriveSegment],
    duration: f64,
    seed: u64,
    dt_markov: f64,
    record_waveform: bool,
) -> Result<SpikeTrain> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "duration must be positive and finite, got {duration}"
        )));
    }
    if !(dt_markov > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt_markov must be > 0, got {dt_markov}"
        )));
    }
    if drive.is_empty() {
        return Err(Error::InvalidArgument("drive schedule is empty".into()));
    }
    if drive[0].t_start != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "the first drive segment must start at t = 0, got {}",
            drive[0].t_start
        )));
    }
    if drive.windows(2).any(|w| !(w[1].t_start > w[0].t_start)) {
        return Err(Error::InvalidArgument(
            "drive segment start times must be strictly increasing".into(),
        ));
    }

    // Per-segment rates; domain violations report the offending segment.
    let mut seg_probs = Vec::with_capacity(drive.len());
    let mut min_tau = f64::INFINITY;
    for seg in drive {
        let (tau_p, tau_ap) = lut.query(seg.v1, seg.v2).map_err(|e| {
            Error::Domain(format!("at t = {} s: {e}", seg.t_start))
        })?;
        min_tau = min_tau.min(tau_p).min(tau_ap);
        seg_probs.push((
            1.0 - (-dt_markov / tau_p).exp(),
            1.0 - (-dt_markov / tau_ap).exp(),
        ));
    }
    if dt_markov > min_tau * MAX_DT_FRACTION {
        return Err(Error::InvalidArgument(format!(
            "dt_markov = {dt_markov:.3e} s too coarse: must be at most \
             min lifetime / 20 = {:.3e} s over this drive",
            min_tau * MAX_DT_FRACTION
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_steps = (duration / dt_markov).floor() as u64;
    let mut state = StateLabel::P;
    let mut seg_idx = 0usize;
    let mut spikes = Vec::new();
    let mut waveform = record_waveform.then(|| vec![(0.0, StateLabel::P)]);

    for k in 0..n_steps {
        let t = k as f64 * dt_markov;
        while seg_idx + 1 < drive.len() && t >= drive[seg_idx + 1].t_start {
            seg_idx += 1;
        }
        let (p_escape_p, p_escape_ap) = seg_probs[seg_idx];
        let p_escape = match state {
            StateLabel::P => p_escape_p,
            StateLabel::Ap => p_escape_ap,
            StateLabel::Transit => unreachable!(),
        };
        if rng.random::<f64>() < p_escape {
            let t_switch = (k + 1) as f64 * dt_markov;
            state = if state == StateLabel::P { StateLabel::Ap } else { StateLabel::P };
            if state == StateLabel::Ap {
                spikes.push(t_switch);
            }
            if let Some(w) = waveform.as_mut() {
                w.push((t_switch, state));
            }
        }
    }

    Ok(SpikeTrain { spike_times: spikes, state_changes: waveform, duration })
}

/// Completed Markov dwell samples per state at constant rates, truncated
/// like the telegraph pipeline (first and last runs discarded).
pub fn markov_dwell_samples(
    tau_p: f64,
    tau_ap: f64,
    dt: f64,
    seed: u64,
    n_per_state: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_p = 1.0 - (-dt / tau_p).exp();
    let p_ap = 1.0 - (-dt / tau_ap).exp();
    let mut dwell_p = Vec::with_capacity(n_per_state);
    let mut dwell_ap = Vec::with_capacity(n_per_state);
    let mut state = StateLabel::P;
    let mut run_len = 0u64;
    let mut first_run_dropped = false;
    while dwell_p.len() < n_per_state || dwell_ap.len() < n_per_state {
        run_len += 1;
        let p = if state == StateLabel::P { p_p } else { p_ap };
        if rng.random::<f64>() < p {
            if first_run_dropped {
                let dur = run_len as f64 * dt;
                match state {
                    StateLabel::P => dwell_p.push(dur),
                    StateLabel::Ap => dwell_ap.push(dur),
                    StateLabel::Transit => unreachable!(),
                }
            } else {
                first_run_dropped = true;
            }
            state = if state == StateLabel::P { StateLabel::Ap } else { StateLabel::P };
            run_len = 0;
        }
    }
    (dwell_p, dwell_ap)
}

/// Side-by-side comparison of the behavioral neuron against the full
/// magnetization simulation at one bias point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub bias: BiasPoint,
    pub v1: f64,
    pub v2: f64,
    pub tau_p_llg: f64,
    pub tau_p_markov: f64,
    /// markov / llg mean ratio.
    pub ratio_p: f64,
    /// Two-sample KS p-value between the dwell samples.
    pub ks_p_value_p: f64,
    pub tau_ap_llg: f64,
    pub tau_ap_markov: f64,
    pub ratio_ap: f64,
    pub ks_p_value_ap: f64,
    pub samples_per_side: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub points: Vec<ValidationPoint>,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:>11} {:>11} | {:>11} {:>11} {:>7} {:>8} | {:>11} {:>11} {:>7} {:>8}",
            "v_me", "v_i", "tauP_llg", "tauP_mk", "ratio", "ks_p", "tauAP_llg", "tauAP_mk",
            "ratio", "ks_p"
        )?;
        for p in &self.points {
            writeln!(
                f,
                "{:>11.4e} {:>11.4e} | {:>11.4e} {:>11.4e} {:>7.3} {:>8.4} | {:>11.4e} {:>11.4e} {:>7.3} {:>8.4}",
                p.bias.v_me,
                p.bias.v_i,
                p.tau_p_llg,
                p.tau_p_markov,
                p.ratio_p,
                p.ks_p_value_p,
                p.tau_ap_llg,
                p.tau_ap_markov,
                p.ratio_ap,
                p.ks_p_value_ap
            )?;
        }
        Ok(())
    }
}

/// Compare Markov and full-simulation dwell statistics at the given bias
/// points. Disagreements appear in the report; nothing fails here.
#[allow(clippy::too_many_arguments)]
pub fn validate_against_llg(
    bias_points: &[BiasPoint],
    params: &DeviceParams,
    sim: &SimConfig,
    lut: &NeuronLut,
    angles: &BasisAngles,
    theta_on: f64,
    n_per_state: u32,
    max_steps: u64,
    master_seed: u64,
) -> Result<ValidationReport> {
    let mut points = Vec::with_capacity(bias_points.len());
    for (idx, &bias) in bias_points.iter().enumerate() {
        let (v1, v2) = angles.transform(bias);
        let (tau_p_lut, tau_ap_lut) = lut.query(v1, v2)?;

        let mut cfg = sim.clone();
        cfg.seed = derive_seed(master_seed, 3, idx as u64);
        cfg.stop_after_transitions = None;
        let run = run_telegraph(&cfg, bias, params, theta_on, n_per_state, max_steps)?;
        let llg_p = dwell_durations(&run.dwells, StateLabel::P);
        let llg_ap = dwell_durations(&run.dwells, StateLabel::Ap);
        if llg_p.len() < 2 || llg_ap.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "too few dwells at ({}, {}) within the step budget",
                bias.v_me, bias.v_i
            )));
        }

        let dt = tau_p_lut.min(tau_ap_lut) / 50.0;
        let (mk_p, mk_ap) = markov_dwell_samples(
            tau_p_lut,
            tau_ap_lut,
            dt,
            derive_seed(master_seed, 4, idx as u64),
            llg_p.len().max(llg_ap.len()),
        );

        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let (tau_p_llg, tau_ap_llg) = (mean(&llg_p), mean(&llg_ap));
        let (tau_p_mk, tau_ap_mk) = (mean(&mk_p), mean(&mk_ap));
        let (_, ks_p) = ks_two_sample(&llg_p, &mk_p);
        let (_, ks_ap) = ks_two_sample(&llg_ap, &mk_ap);
        points.push(ValidationPoint {
            bias,
            v1,
            v2,
            tau_p_llg,
            tau_p_markov: tau_p_mk,
            ratio_p: tau_p_mk / tau_p_llg,
            ks_p_value_p: ks_p,
            tau_ap_llg,
            tau_ap_markov: tau_ap_mk,
            ratio_ap: tau_ap_mk / tau_ap_llg,
            ks_p_value_ap: ks_ap,
            samples_per_side: llg_p.len().min(llg_ap.len()),
        });
    }
    Ok(ValidationReport { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::synthetic_grid;

    fn flat_lut(tau_p: f64, tau_ap: f64) -> NeuronLut {
        let axis = [-0.05, 0.0, 0.05];
        build_lut(&synthetic_grid(
            AxisKind::V1V2,
            &axis,
            &axis,
            |_, _| tau_p,
            |_, _| tau_ap,
            1000,
        ))
        .unwrap()
    }

    #[test]
    fn lut_reproduces_node_values_exactly() {
        let axis1 = [-0.02, 0.01, 0.05];
        let axis2 = [-0.04, 0.0, 0.03];
        let f_p = |a: f64, b: f64| 1e-8 * (3.0 * a - 2.0 * b).exp();
        let f_ap = |a: f64, b: f64| 2e-8 * (-4.0 * a + 1.0 * b).exp();
        let lut = build_lut(&synthetic_grid(AxisKind::V1V2, &axis1, &axis2, f_p, f_ap, 500))
            .unwrap();
        for &a in &axis1 {
            for &b in &axis2 {
                let (tp, tap) = lut.query(a, b).unwrap();
                assert!((tp - f_p(a, b)).abs() <= 1e-15 * tp);
                assert!((tap - f_ap(a, b)).abs() <= 1e-15 * tap);
            }
        }
    }

    #[test]
    fn bilinear_reproduces_affine_log_surfaces() {
        let axis = [-0.03, -0.01, 0.02, 0.04];
        let f_p = |a: f64, b: f64| 1e-8 * (5.0 * a + 2.0 * b).exp();
        let f_ap = |a: f64, b: f64| 1e-8 * (-7.0 * a + 3.0 * b).exp();
        let lut =
            build_lut(&synthetic_grid(AxisKind::V1V2, &axis, &axis, f_p, f_ap, 500)).unwrap();
        let (tp, tap) = lut.query(0.005, -0.02).unwrap();
        assert!((tp - f_p(0.005, -0.02)).abs() < 1e-12 * tp);
        assert!((tap - f_ap(0.005, -0.02)).abs() < 1e-12 * tap);
    }

    #[test]
    fn queries_outside_domain_are_domain_errors() {
        let lut = flat_lut(1e-8, 1e-8);
        let err = lut.query(0.06, 0.0).unwrap_err();
        assert_eq!(err.exit_code(), 5);
        assert!(lut.query(0.0, -0.0501).is_err());
    }

    #[test]
    fn lut_requires_transformed_axes_and_valid_cells() {
        let axis = [-0.01, 0.0, 0.01];
        let err = build_lut(&synthetic_grid(
            AxisKind::MeI,
            &axis,
            &axis,
            |_, _| 1e-8,
            |_, _| 1e-8,
            100,
        ))
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);

        let mut grid =
            synthetic_grid(AxisKind::V1V2, &axis, &axis, |_, _| 1e-8, |_, _| 1e-8, 100);
        grid.cells[4].tau_p = None;
        let err = build_lut(&grid).unwrap_err();
        assert!(err.to_string().contains("failed cells"));
    }

    #[test]
    fn spike_trains_are_reproducible() {
        let lut = flat_lut(10e-9, 10e-9);
        let drive = [DriveSegment { t_start: 0.0, v1: 0.0, v2: 0.0 }];
        let a = generate_spike_train(&lut, &drive, 20e-6, 5, 0.2e-9, false).unwrap();
        let b = generate_spike_train(&lut, &drive, 20e-6, 5, 0.2e-9, false).unwrap();
        assert_eq!(a, b);
        let c = generate_spike_train(&lut, &drive, 20e-6, 6, 0.2e-9, false).unwrap();
        assert_ne!(a.spike_times, c.spike_times);
    }

    #[test]
    fn constant_symmetric_drive_has_half_duty() {
        let lut = flat_lut(10e-9, 10e-9);
        let drive = [DriveSegment { t_start: 0.0, v1: 0.0, v2: 0.0 }];
        let train = generate_spike_train(&lut, &drive, 400e-6, 11, 0.3e-9, true).unwrap();
        assert!(train.spike_times.len() > 10_000, "n = {}", train.spike_times.len());
        // AP duty fraction from the waveform
        let w = train.state_changes.unwrap();
        let mut t_ap = 0.0;
        for pair in w.windows(2) {
            if pair[0].1 == StateLabel::Ap {
                t_ap += pair[1].0 - pair[0].0;
            }
        }
        if w.last().unwrap().1 == StateLabel::Ap {
            t_ap += train.duration - w.last().unwrap().0;
        }
        let duty = t_ap / train.duration;
        assert!((duty - 0.5).abs() < 0.02, "AP duty {duty}");
    }

    #[test]
    fn interspike_intervals_follow_the_two_dwell_sum() {
        // With tau_p = tau_ap = tau, the interval between consecutive spikes
        // is the sum of two independent Exp(tau) dwells (Erlang-2):
        // F(t) = 1 - e^{-t/tau} (1 + t/tau).
        let tau = 10e-9;
        let lut = flat_lut(tau, tau);
        let drive = [DriveSegment { t_start: 0.0, v1: 0.0, v2: 0.0 }];
        let train = generate_spike_train(&lut, &drive, 100e-6, 23, tau / 50.0, false).unwrap();
        let isi: Vec<f64> = train
            .spike_times
            .windows(2)
            .map(|w| w[1] - w[0])
            .take(2000)
            .collect();
        assert!(isi.len() >= 1500);
        let cdf = |t: f64| 1.0 - (-t / tau).exp() * (1.0 + t / tau);
        let (_, p) = crate::stats::ks_test_cdf(&isi, cdf);
        assert!(p > 0.01, "KS p = {p}");
    }

    #[test]
    fn step_drive_dwell_means_follow_the_table() {
        let axis = [-0.05, 0.0, 0.05];
        let f_p = |a: f64, _: f64| 8e-9 * (20.0 * a).exp();
        let f_ap = |_: f64, b: f64| 8e-9 * (-20.0 * b).exp();
        let lut =
            build_lut(&synthetic_grid(AxisKind::V1V2, &axis, &axis, f_p, f_ap, 500)).unwrap();
        let seg_len = 120e-6;
        let drive = [
            DriveSegment { t_start: 0.0, v1: -0.04, v2: 0.02 },
            DriveSegment { t_start: seg_len, v1: 0.03, v2: -0.03 },
        ];
        let train =
            generate_spike_train(&lut, &drive, 2.0 * seg_len, 31, 4e-11, true).unwrap();
        let w = train.state_changes.unwrap();

        for (seg, lo, hi) in [(&drive[0], 0.0, seg_len), (&drive[1], seg_len, 2.0 * seg_len)] {
            let (tau_p_ref, tau_ap_ref) = lut.query(seg.v1, seg.v2).unwrap();
            // collect completed dwells fully inside the segment
            let mut dw_p = Vec::new();
            let mut dw_ap = Vec::new();
            for pair in w.windows(2) {
                let (t0, s) = pair[0];
                let t1 = pair[1].0;
                if t0 >= lo && t1 <= hi {
                    match s {
                        StateLabel::P => dw_p.push(t1 - t0),
                        StateLabel::Ap => dw_ap.push(t1 - t0),
                        StateLabel::Transit => {}
                    }
                }
            }
            assert!(dw_p.len() > 1000 && dw_ap.len() > 1000);
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
            let mp = mean(&dw_p);
            let map = mean(&dw_ap);
            assert!((mp - tau_p_ref).abs() < 0.05 * tau_p_ref, "{mp} vs {tau_p_ref}");
            assert!((map - tau_ap_ref).abs() < 0.05 * tau_ap_ref, "{map} vs {tau_ap_ref}");
        }
    }

    #[test]
    fn coarse_markov_step_is_rejected() {
        let lut = flat_lut(10e-9, 10e-9);
        let drive = [DriveSegment { t_start: 0.0, v1: 0.0, v2: 0.0 }];
        let err = generate_spike_train(&lut, &drive, 1e-6, 1, 1e-9, false).unwrap_err();
        assert!(err.to_string().contains("too coarse"));
    }

    #[test]
    fn drive_outside_domain_reports_time() {
        let lut = flat_lut(10e-9, 10e-9);
        let drive = [
            DriveSegment { t_start: 0.0, v1: 0.0, v2: 0.0 },
            DriveSegment { t_start: 5e-7, v1: 0.2, v2: 0.0 },
        ];
        let err = generate_spike_train(&lut, &drive, 1e-6, 1, 0.2e-9, false).unwrap_err();
        assert_eq!(err.exit_code(), 5);
        assert!(err.to_string().contains("5e-7") || err.to_string().contains("0.0000005"));
    }

    #[test]
    fn markov_self_validation_is_consistent() {
        // Two independent Markov samples of the same process should pass the
        // two-sample KS at typical p.
        let (a_p, _) = markov_dwell_samples(10e-9, 12e-9, 0.2e-9, 1, 500);
        let (b_p, _) = markov_dwell_samples(10e-9, 12e-9, 0.2e-9, 2, 500);
        let (_, p) = ks_two_sample(&a_p, &b_p);
        assert!(p > 0.01);
    }

    #[test]
    fn halving_dt_markov_preserves_statistics() {
        let (a_p, a_ap) = markov_dwell_samples(10e-9, 15e-9, 0.4e-9, 7, 4000);
        let (b_p, b_ap) = markov_dwell_samples(10e-9, 15e-9, 0.2e-9, 8, 4000);
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        for (a, b, tau) in [(&a_p, &b_p, 10e-9), (&a_ap, &b_ap, 15e-9)] {
            let (ma, mb) = (mean(a), mean(b));
            let sigma = tau / (a.len() as f64).sqrt() * 2.0f64.sqrt();
            assert!((ma - mb).abs() < 4.0 * sigma, "{ma} vs {mb}");
        }
    }
}
