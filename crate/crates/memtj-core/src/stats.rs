//! Small statistics toolbox: Kolmogorov-Smirnov tests, rank correlation,
//! and a weighted planar least-squares fit.

/// Survival function of the Kolmogorov distribution,
/// Q(lambda) = 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value for a KS statistic `d` at effective sample size `n_eff`
/// (use n for one-sample tests, n1*n2/(n1+n2) for two-sample tests).
pub fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sqrt_n = n_eff.sqrt();
    // Stephens' small-sample correction.
    kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

/// One-sample KS statistic of `samples` against the exponential distribution
/// with the given mean.
pub fn ks_statistic_exponential(samples: &[f64], mean: f64) -> f64 {
    if samples.is_empty() || !(mean > 0.0) {
        return f64::NAN;
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = 1.0 - (-x / mean).exp();
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// One-sample KS test against an arbitrary CDF; returns (D, p).
pub fn ks_test_cdf<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    (d, ks_p_value(d, n))
}

/// Two-sample KS test; returns (D, p).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert!(!a.is_empty() && !b.is_empty(), "empty sample in two-sample KS");
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (na, nb) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = xs[i].min(ys[j]);
        while i < na && xs[i] <= x {
            i += 1;
        }
        while j < nb && ys[j] <= x {
            j += 1;
        }
        let fa = i as f64 / na as f64;
        let fb = j as f64 / nb as f64;
        d = d.max((fa - fb).abs());
    }
    let n_eff = (na as f64 * nb as f64) / (na as f64 + nb as f64);
    (d, ks_p_value(d, n_eff))
}

/// Spearman rank correlation of paired observations.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        // average rank for ties
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for k in 0..x.len() {
        let dx = x[k] - mx;
        let dy = y[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}

/// Result of fitting z = c + gx*x + gy*y by inverse-variance weighted least
/// squares.
#[derive(Debug, Clone, Copy)]
pub struct PlaneFit {
    pub intercept: f64,
    pub grad_x: f64,
    pub grad_y: f64,
    /// Standard errors of the gradient components.
    pub sigma_grad_x: f64,
    pub sigma_grad_y: f64,
    /// Weighted coefficient of determination.
    pub r_squared: f64,
}

/// Weighted planar fit over observations (x, y, z, weight).
///
/// Parameter covariance is taken as (X^T W X)^-1, i.e. the weights are
/// trusted as inverse variances rather than rescaled by the residuals.
pub fn fit_plane(points: &[(f64, f64, f64, f64)]) -> Option<PlaneFit> {
    if points.len() < 3 {
        return None;
    }
    // Normal equations for [c, gx, gy].
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for &(x, y, z, w) in points {
        let row = [1.0, x, y];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += w * row[i] * row[j];
            }
            b[i] += w * row[i] * z;
        }
    }
    let inv = invert3(&a)?;
    let sol = [
        inv[0][0] * b[0] + inv[0][1] * b[1] + inv[0][2] * b[2],
        inv[1][0] * b[0] + inv[1][1] * b[1] + inv[1][2] * b[2],
        inv[2][0] * b[0] + inv[2][1] * b[1] + inv[2][2] * b[2],
    ];
    let mut ss_res = 0.0;
    let mut sw = 0.0;
    let mut swz = 0.0;
    for &(x, y, z, w) in points {
        let pred = sol[0] + sol[1] * x + sol[2] * y;
        ss_res += w * (z - pred).powi(2);
        sw += w;
        swz += w * z;
    }
    let zbar = swz / sw;
    let mut ss_tot = 0.0;
    for &(_, _, z, w) in points {
        ss_tot += w * (z - zbar).powi(2);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(PlaneFit {
        intercept: sol[0],
        grad_x: sol[1],
        grad_y: sol[2],
        sigma_grad_x: inv[1][1].max(0.0).sqrt(),
        sigma_grad_y: inv[2][2].max(0.0).sqrt(),
        r_squared,
    })
}

fn invert3(a: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut inv = [[0.0f64; 3]; 3];
    inv[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * inv_det;
    inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv_det;
    inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv_det;
    inv[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * inv_det;
    inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv_det;
    inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv_det;
    inv[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * inv_det;
    inv[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv_det;
    inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv_det;
    Some(inv)
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kolmogorov_q_known_values() {
        // Q(0.5) ~ 0.9639, Q(1.0) ~ 0.2700, Q(1.5) ~ 0.0222
        assert!((kolmogorov_q(1.0) - 0.27) < 0.001);
        assert!(kolmogorov_q(0.5) > 0.95);
        assert!(kolmogorov_q(1.5) < 0.03);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_true_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mean = 10e-9;
        let xs: Vec<f64> = (0..5000)
            .map(|_| -mean * (1.0 - rng.random::<f64>()).ln())
            .collect();
        let d = ks_statistic_exponential(&xs, mean);
        assert!(ks_p_value(d, xs.len() as f64) > 0.01);
    }

    #[test]
    fn ks_rejects_wrong_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let d = ks_statistic_exponential(&xs, 0.5);
        assert!(ks_p_value(d, xs.len() as f64) < 1e-4);
    }

    #[test]
    fn two_sample_ks_on_identical_populations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..800).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..900).map(|_| rng.random::<f64>()).collect();
        let (_, p) = ks_two_sample(&a, &b);
        assert!(p > 0.01);
    }

    #[test]
    fn spearman_detects_monotone_relation() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        assert!((spearman_rho(&x, &y) - 1.0).abs() < 1e-12);
        let y_dec: Vec<f64> = x.iter().map(|v| -v * v).collect();
        assert!((spearman_rho(&x, &y_dec) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn plane_fit_recovers_exact_plane() {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                let x = i as f64 * 0.1 - 0.2;
                let y = j as f64 * 0.05 - 0.1;
                pts.push((x, y, 1.5 - 3.0 * x + 7.0 * y, 1.0));
            }
        }
        let fit = fit_plane(&pts).unwrap();
        assert!((fit.intercept - 1.5).abs() < 1e-10);
        assert!((fit.grad_x + 3.0).abs() < 1e-10);
        assert!((fit.grad_y - 7.0).abs() < 1e-10);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }
}
