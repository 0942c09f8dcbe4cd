//! Field and torque terms of the macrospin equation of motion.
//!
//! All functions are pure; the thermal field additionally takes an explicit
//! RNG, so everything is safe to call concurrently as long as each thread
//! owns its generator.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::constants::{GAMMA, MU_0, Q_E};
use crate::error::{Error, Result};
use crate::params::{zeeman_scale, BiasPoint, DeviceParams};
use crate::vec3::Vec3;

/// Shape-anisotropy field of the ellipsoid free layer [A/m]:
/// -Ms * (nx*mx, ny*my, nz*mz).
pub fn shape_anisotropy_field(m: Vec3, params: &DeviceParams) -> Vec3 {
    let ms = params.saturation_magnetization;
    let n = params.demag_factors;
    Vec3::new(-ms * n.nx * m.x, -ms * n.ny * m.y, -ms * n.nz * m.z)
}

/// Voltage-induced magnetoelectric field [A/m], along +z and linear in v_me.
pub fn me_field(v_me: f64, params: &DeviceParams) -> Vec3 {
    Vec3::new(
        0.0,
        0.0,
        params.me_coefficient * v_me / (MU_0 * params.me_thickness),
    )
}

/// Standard deviation of each thermal-field component for a step of `dt` [A/m].
pub fn thermal_field_sigma(params: &DeviceParams, dt: f64) -> f64 {
    let num = 2.0 * params.damping_alpha * params.thermal_energy();
    let den = GAMMA * MU_0 * params.saturation_magnetization * params.volume * dt;
    (num / den).sqrt()
}

/// Draw one thermal-field sample [A/m]; components are independent zero-mean
/// Gaussians. One sample is drawn per integration step and held constant
/// through both predictor and corrector stages.
pub fn thermal_field_sample<R: Rng + ?Sized>(
    rng: &mut R,
    params: &DeviceParams,
    dt: f64,
) -> Result<Vec3> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "thermal_field_sample requires dt > 0, got {dt}"
        )));
    }
    if params.temperature == 0.0 {
        return Ok(Vec3::ZERO);
    }
    let sigma = thermal_field_sigma(params, dt);
    let gx: f64 = rng.sample(StandardNormal);
    let gy: f64 = rng.sample(StandardNormal);
    let gz: f64 = rng.sample(StandardNormal);
    Ok(Vec3::new(sigma * gx, sigma * gy, sigma * gz))
}

/// Angle-dependent MTJ resistance [ohm].
///
/// Conductance interpolates as G(theta) = G_P cos^2(theta/2) + G_AP
/// sin^2(theta/2) with cos(theta) = m · polarizer_axis, so the endpoints are
/// exactly R_P and R_AP while the instantaneous value stays smooth during a
/// reversal.
pub fn mtj_resistance(m: Vec3, params: &DeviceParams) -> f64 {
    let cos_theta = m.dot(params.polarizer_axis);
    let g_p = 1.0 / params.resistance_p;
    let g_ap = 1.0 / params.resistance_ap();
    // cos^2(t/2) = (1+cos t)/2, sin^2(t/2) = (1-cos t)/2
    let g = 0.5 * (g_p * (1.0 + cos_theta) + g_ap * (1.0 - cos_theta));
    1.0 / g
}

/// Spin current vector [A] injected by the MTJ bias.
///
/// The sign convention makes positive `v_i` exert torque toward the
/// antiparallel state: I_s = -eta * v_i / R(m) * polarizer_axis.
pub fn spin_current(m: Vec3, v_i: f64, params: &DeviceParams) -> Vec3 {
    let magnitude = -params.spin_polarization * v_i / mtj_resistance(m, params);
    params.polarizer_axis * magnitude
}

/// Explicit time derivative of the unit magnetization [1/s].
///
/// The Gilbert form is solved for dm/dt, giving
///   dm/dt = -gamma' [ m x H + alpha m x (m x H) ]
///         + 1/((1+alpha^2) q N_s) [ m x (I_s x m) + alpha m x I_s ]
/// with gamma' = gamma / (1 + alpha^2). The result is orthogonal to m.
pub fn llg_rhs(m: Vec3, bias: BiasPoint, h_thermal: Vec3, params: &DeviceParams) -> Vec3 {
    let h = shape_anisotropy_field(m, params) + me_field(bias.v_me, params) + h_thermal;
    let alpha = params.damping_alpha;
    let gamma_prime = GAMMA / (1.0 + alpha * alpha);

    let m_x_h = m.cross(h);
    let m_x_m_x_h = m.cross(m_x_h);
    let mut dmdt = (m_x_h + m_x_m_x_h * alpha) * (-gamma_prime);

    if bias.v_i != 0.0 {
        let i_s = spin_current(m, bias.v_i, params);
        let scale = 1.0 / ((1.0 + alpha * alpha) * Q_E * params.spin_count());
        let m_x_is = m.cross(i_s);
        // m x (I_s x m) = I_s - (m·I_s) m for |m| = 1
        let transverse = i_s - m * m.dot(i_s);
        dmdt += (transverse + m_x_is * alpha) * scale;
    }
    dmdt
}

/// Energy of the magnetization state [J]: shape anisotropy plus the Zeeman
/// term of the magnetoelectric field. Spin torque and thermal noise are not
/// conservative and do not enter.
pub fn energy(m: Vec3, v_me: f64, params: &DeviceParams) -> f64 {
    let ms = params.saturation_magnetization;
    let n = params.demag_factors;
    let demag = 0.5
        * MU_0
        * ms
        * ms
        * params.volume
        * (n.nx * m.x * m.x + n.ny * m.y * m.y + n.nz * m.z * m.z);
    let zeeman = -zeeman_scale(params) * me_field(v_me, params).dot(m);
    demag + zeeman
}

/// In-plane escape barrier of the unbiased double well, in units of k_B*T:
/// (mu_0/2) Ms^2 V (ny - nz) / (k_B T).
pub fn barrier_height(params: &DeviceParams) -> f64 {
    let ms = params.saturation_magnetization;
    let n = params.demag_factors;
    0.5 * MU_0 * ms * ms * params.volume * (n.ny - n.nz) / params.thermal_energy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_device_params;
    use crate::params::DemagFactors;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params_ms1e6() -> DeviceParams {
        let mut p = default_device_params();
        p.saturation_magnetization = 1e6;
        p
    }

    #[test]
    fn anisotropy_field_along_easy_axis() {
        let mut p = params_ms1e6();
        p.demag_factors = [0.90, 0.08, 0.02].into();
        let h = shape_anisotropy_field(Vec3::Z, &p);
        assert_eq!(h.x, 0.0);
        assert_eq!(h.y, 0.0);
        assert!((h.z - (-2e4)).abs() < 1e-6);
    }

    #[test]
    fn anisotropy_field_along_hard_axis() {
        let mut p = params_ms1e6();
        p.demag_factors = [0.90, 0.08, 0.02].into();
        let h = shape_anisotropy_field(Vec3::new(1.0, 0.0, 0.0), &p);
        assert!((h.x - (-9e5)).abs() < 1e-6);
        assert_eq!(h.y, 0.0);
        assert_eq!(h.z, 0.0);
    }

    #[test]
    fn anisotropy_field_is_odd() {
        let p = default_device_params();
        let m = Vec3::new(0.48, -0.6, 0.64);
        let h1 = shape_anisotropy_field(m, &p);
        let h2 = shape_anisotropy_field(-m, &p);
        assert_eq!(h1, -h2);
    }

    #[test]
    fn me_field_zero_at_zero_bias() {
        let p = default_device_params();
        assert_eq!(me_field(0.0, &p), Vec3::ZERO);
    }

    #[test]
    fn me_field_is_linear() {
        let p = default_device_params();
        for v in [-0.3, -0.01, 0.02, 0.15] {
            let h1 = me_field(v, &p);
            let h2 = me_field(2.0 * v, &p);
            assert!((h2.z - 2.0 * h1.z).abs() <= 1e-12 * h2.z.abs());
        }
    }

    #[test]
    fn me_field_direct_evaluation() {
        // H_z = alpha_me * v / (mu_0 * t_me) with alpha_me/mu_0 = 1e-2,
        // t_me = 10 nm, v = 0.1 V gives 1e-2 * 0.1 / 1e-8 = 1e5 A/m.
        let mut p = default_device_params();
        p.me_coefficient = 1.2566e-8;
        p.me_thickness = 1e-8;
        let expected = 1.2566e-8 * 0.1 / (MU_0 * 1e-8);
        assert!((expected - 1e5).abs() < 1e5 * 3e-4);
        let h = me_field(0.1, &p);
        assert_eq!(h.x, 0.0);
        assert_eq!(h.y, 0.0);
        assert!((h.z - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn thermal_field_zero_at_zero_temperature() {
        let mut p = default_device_params();
        p.temperature = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = thermal_field_sample(&mut rng, &p, 1e-13).unwrap();
        assert_eq!(h, Vec3::ZERO);
    }

    #[test]
    fn thermal_field_rejects_nonpositive_dt() {
        let p = default_device_params();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(thermal_field_sample(&mut rng, &p, 0.0).is_err());
        assert!(thermal_field_sample(&mut rng, &p, -1e-13).is_err());
    }

    #[test]
    fn thermal_field_variance_matches_formula() {
        let p = default_device_params();
        let dt = 1e-13;
        let sigma2 = thermal_field_sigma(&p, dt).powi(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000usize;
        let mut sums = [0.0f64; 3];
        let mut sumsq = [0.0f64; 3];
        for _ in 0..n {
            let h = thermal_field_sample(&mut rng, &p, dt).unwrap();
            for (k, v) in [h.x, h.y, h.z].into_iter().enumerate() {
                sums[k] += v;
                sumsq[k] += v * v;
            }
        }
        for k in 0..3 {
            let mean = sums[k] / n as f64;
            let var = sumsq[k] / n as f64 - mean * mean;
            assert!(
                (var - sigma2).abs() < 0.01 * sigma2,
                "component {k}: var {var} vs sigma^2 {sigma2}"
            );
        }
    }

    #[test]
    fn thermal_field_components_are_normal() {
        // Kolmogorov-Smirnov against N(0, sigma) using the A&S erf expansion.
        fn normal_cdf(x: f64, sigma: f64) -> f64 {
            let z = x / (sigma * std::f64::consts::SQRT_2);
            // Abramowitz & Stegun 7.1.26, |err| < 1.5e-7
            let t = 1.0 / (1.0 + 0.3275911 * z.abs());
            let poly = t
                * (0.254829592
                    + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
            let erf_abs = 1.0 - poly * (-z * z).exp();
            let erf = if z >= 0.0 { erf_abs } else { -erf_abs };
            0.5 * (1.0 + erf)
        }
        let p = default_device_params();
        let dt = 1e-13;
        let sigma = thermal_field_sigma(&p, dt);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000usize;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| thermal_field_sample(&mut rng, &p, dt).unwrap().x)
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = normal_cdf(x, sigma);
            d = d.max((f - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        let p_value = crate::stats::ks_p_value(d, n as f64);
        assert!(p_value > 0.01, "KS D = {d}, p = {p_value}");
    }

    #[test]
    fn thermal_variance_halves_when_volume_doubles() {
        let p1 = default_device_params();
        let mut p2 = p1.clone();
        p2.volume *= 2.0;
        let v1 = thermal_field_sigma(&p1, 1e-13).powi(2);
        let v2 = thermal_field_sigma(&p2, 1e-13).powi(2);
        assert!((v2 - 0.5 * v1).abs() < 1e-12 * v1);
    }

    #[test]
    fn resistance_endpoints_are_exact() {
        let p = default_device_params();
        assert_eq!(mtj_resistance(Vec3::Z, &p), p.resistance_p);
        assert_eq!(mtj_resistance(-Vec3::Z, &p), p.resistance_ap());
    }

    #[test]
    fn resistance_at_quadrature() {
        let mut p = default_device_params();
        p.resistance_p = 1e4;
        p.tmr_ratio = 1.0;
        let r = mtj_resistance(Vec3::new(1.0, 0.0, 0.0), &p);
        let expected = 1.0 / (0.5 * 1e-4 + 0.5 * 0.5e-4);
        assert!((r - expected).abs() < 1e-9 * expected);
        assert!((r - 40000.0 / 3.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn resistance_bounded_and_monotone(z1 in -1.0f64..1.0, z2 in -1.0f64..1.0) {
            let p = default_device_params();
            let m = |mz: f64| {
                let s = (1.0 - mz * mz).sqrt();
                Vec3::new(s, 0.0, mz)
            };
            let (lo, hi) = if z1 < z2 { (z1, z2) } else { (z2, z1) };
            let r_lo = mtj_resistance(m(lo), &p);
            let r_hi = mtj_resistance(m(hi), &p);
            // Larger m·z means closer to P, hence lower resistance.
            prop_assert!(r_hi <= r_lo + 1e-9);
            for r in [r_lo, r_hi] {
                prop_assert!(r >= p.resistance_p - 1e-9);
                prop_assert!(r <= p.resistance_ap() + 1e-9);
            }
        }

        #[test]
        fn llg_rhs_orthogonal_to_m(
            seed in 0u64..10_000,
            v_me in -0.2f64..0.2,
            v_i in -0.2f64..0.2,
        ) {
            let p = default_device_params();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_unit(&mut rng);
            let h_th = thermal_field_sample(&mut rng, &p, 1e-13).unwrap();
            let d = llg_rhs(m, BiasPoint::new(v_me, v_i), h_th, &p);
            prop_assert!(d.dot(m).abs() <= 1e-12 * d.norm().max(1.0));
        }
    }

    fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
        loop {
            let v = Vec3::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            );
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                return v.normalized();
            }
        }
    }

    #[test]
    fn spin_current_zero_at_zero_bias() {
        let p = default_device_params();
        assert_eq!(spin_current(Vec3::Z, 0.0, &p), Vec3::ZERO);
    }

    #[test]
    fn spin_current_larger_in_p_state() {
        let p = default_device_params();
        let v_i = 0.05;
        let i_p = spin_current(Vec3::Z, v_i, &p).norm();
        let i_ap = spin_current(-Vec3::Z, v_i, &p).norm();
        assert!(i_p > i_ap);
    }

    #[test]
    fn spin_current_direct_evaluation() {
        let mut p = default_device_params();
        p.spin_polarization = 0.5;
        p.resistance_p = 1e4;
        let i = spin_current(Vec3::Z, 0.1, &p);
        assert_eq!(i.x, 0.0);
        assert_eq!(i.y, 0.0);
        assert!((i.z - (-5e-6)).abs() < 1e-15);
    }

    #[test]
    fn rhs_zero_at_aligned_equilibrium() {
        let p = default_device_params();
        let d = llg_rhs(Vec3::Z, BiasPoint::ZERO, Vec3::ZERO, &p);
        assert_eq!(d, Vec3::ZERO);
    }

    #[test]
    fn rhs_reduces_to_pure_precession_without_damping() {
        // -gamma (m x H): m = x, H = 1e4 z => dm/dt = gamma * 1e4 along +y.
        let mut p = default_device_params();
        p.damping_alpha = 1e-30; // validation requires > 0; effectively zero
        p.temperature = 300.0;
        // Cancel the anisotropy field by hand: use the thermal slot to pass
        // the desired total field H = (0,0,1e4) A/m.
        let m = Vec3::new(1.0, 0.0, 0.0);
        let h_anis = shape_anisotropy_field(m, &p);
        let h_extra = Vec3::new(0.0, 0.0, 1e4) - h_anis;
        let d = llg_rhs(m, BiasPoint::ZERO, h_extra, &p);
        let expected = GAMMA * 1e4;
        assert!((expected - 2.2128e9).abs() < 1e-3 * expected);
        assert!(d.x.abs() < 1e-6 * expected);
        assert!((d.y - expected).abs() < 1e-9 * expected);
        assert!(d.z.abs() < 1e-6 * expected);
    }

    #[test]
    fn barrier_zero_for_degenerate_well() {
        let mut p = default_device_params();
        p.demag_factors = DemagFactors { nx: 0.9, ny: 0.05, nz: 0.05 };
        assert_eq!(barrier_height(&p), 0.0);
    }

    #[test]
    fn barrier_direct_evaluation() {
        let mut p = default_device_params();
        p.saturation_magnetization = 1e6;
        p.demag_factors = [0.90, 0.08, 0.02].into();
        p.volume = 2.196e-25;
        p.temperature = 300.0;
        let expected = 0.5 * MU_0 * 1e12 * 2.196e-25 * 0.06 / (K_B_TEST * 300.0);
        let d = barrier_height(&p);
        assert!((d - expected).abs() < 1e-12 * expected);
        assert!((d - 2.0).abs() < 0.01, "barrier {d} not ~2 kBT");
    }

    const K_B_TEST: f64 = 1.380_649e-23;

    #[test]
    fn barrier_linear_in_volume() {
        let p1 = default_device_params();
        let mut p2 = p1.clone();
        p2.volume *= 2.0;
        let b1 = barrier_height(&p1);
        let b2 = barrier_height(&p2);
        assert!((b2 - 2.0 * b1).abs() < 1e-12 * b2);
    }

    #[test]
    fn default_barrier_is_two_kbt() {
        let d = barrier_height(&default_device_params());
        assert!((d - 2.0).abs() < 0.1, "shipped default barrier = {d}");
    }

    #[test]
    fn anisotropy_and_me_fields_superpose() {
        let p = default_device_params();
        let m1 = Vec3::new(0.6, 0.0, 0.8);
        let m2 = Vec3::new(-0.2, 0.96, 0.2);
        let a = 0.7;
        let b = -1.3;
        let combo = shape_anisotropy_field(m1 * a + m2 * b, &p);
        let sum = shape_anisotropy_field(m1, &p) * a + shape_anisotropy_field(m2, &p) * b;
        assert!((combo - sum).norm() < 1e-9 * sum.norm().max(1.0));
    }
}
