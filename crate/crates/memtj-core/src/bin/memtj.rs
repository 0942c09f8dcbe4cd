use memtj_core::config::default_config;
use memtj_core::integrator::run_telegraph;
use memtj_core::params::{BiasPoint, DeviceParams};
use memtj_core::stats::{ks_p_value, ks_statistic_exponential};
use memtj_core::telegraph::{dwell_durations, StateLabel};
use std::time::Instant;

fn device_c2() -> DeviceParams {
    let base = default_config().device;
    let mut p = base.clone();
    p.demag_factors = [0.921, 0.041, 0.038].into();
    p.volume = 4.39474e-24;
    p.me_coefficient = 8.8e-11;
    p.damping_alpha = 0.2;
    p.resistance_p = 75.0;
    p.tmr_ratio = 4.0;
    p.spin_polarization = 1.0;
    p
}

fn run(p: &DeviceParams, bias: BiasPoint, theta: f64, n: u32, seed: u64) -> Vec<(StateLabel, Vec<f64>)> {
    let cfg = default_config();
    let mut sim = cfg.sim.to_sim_config(theta);
    sim.t_max = 1.0;
    sim.seed = seed;
    sim.record_stride = 500;
    let run = run_telegraph(&sim, bias, p, theta, n, 20_000_000_000).unwrap();
    [StateLabel::P, StateLabel::Ap]
        .into_iter()
        .map(|s| (s, dwell_durations(&run.dwells, s)))
        .collect()
}

fn ks_line(p: &DeviceParams, bias: BiasPoint, theta: f64, n: u32, label: &str) {
    let t0 = Instant::now();
    for (state, d) in run(p, bias, theta, n, 7) {
        if d.len() < 10 {
            println!("{label} {state:?}: too few");
            continue;
        }
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let ks = ks_statistic_exponential(&d, mean);
        println!(
            "{label} {state:?}: tau={mean:.3e} n={} D={ks:.4} p={:.4} [{:.1}s]",
            d.len(),
            ks_p_value(ks, d.len() as f64),
            t0.elapsed().as_secs_f64()
        );
    }
}

fn slope_scan(p: &DeviceParams, theta: f64, vs: &[f64], is_me: bool, n: u32, label: &str) {
    let mut lp = Vec::new();
    let mut lap = Vec::new();
    for (k, &v) in vs.iter().enumerate() {
        let bias = if is_me { BiasPoint::new(v, 0.0) } else { BiasPoint::new(0.0, v) };
        let out = run(p, bias, theta, n, 300 + k as u64);
        let mean = |d: &Vec<f64>| d.iter().sum::<f64>() / d.len() as f64;
        println!("  {label} v={v:+.3}: tau_p={:.3e} tau_ap={:.3e}", mean(&out[0].1), mean(&out[1].1));
        lp.push(mean(&out[0].1).ln());
        lap.push(mean(&out[1].1).ln());
    }
    let fit = |ys: &Vec<f64>| {
        let nn = vs.len() as f64;
        let mx = vs.iter().sum::<f64>() / nn;
        let my = ys.iter().sum::<f64>() / nn;
        let sxy: f64 = vs.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = vs.iter().map(|a| (a - mx) * (a - mx)).sum();
        sxy / sxx
    };
    println!("{label}: s_p={:+.2}/V s_ap={:+.2}/V", fit(&lp), fit(&lap));
}

fn main() {
    let p = device_c2();
    for theta in [0.4, 0.5, 0.6] {
        ks_line(&p, BiasPoint::ZERO, theta, 600, &format!("th={theta} (0,0)"));
        ks_line(&p, BiasPoint::new(0.12, 0.0), theta, 600, &format!("th={theta} (+me120mV)"));
        ks_line(&p, BiasPoint::new(0.0, 0.08), theta, 600, &format!("th={theta} (+vi80mV)"));
    }
    let vi: Vec<f64> = [-0.08, -0.04, 0.04, 0.08].to_vec();
    slope_scan(&p, 0.5, &vi, false, 800, "v_i scan");
    let vme: Vec<f64> = [-0.12, -0.06, 0.06, 0.12].to_vec();
    slope_scan(&p, 0.5, &vme, true, 800, "v_me scan");
}
