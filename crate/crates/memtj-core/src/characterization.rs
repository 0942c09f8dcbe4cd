//! Sensitivity analysis of the lifetime maps: finite-difference k-factors,
//! independence ratios, linear lifetime prediction, planar log-lifetime fits
//! and the drive-basis transformation that decouples the two lifetimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::BiasPoint;
use crate::stats::{fit_plane, PlaneFit};
use crate::sweep::{AxisKind, LifetimeGrid};
use crate::telegraph::LifetimeEstimate;

/// A quantity with a propagated one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueWithError {
    pub value: f64,
    pub sigma: f64,
}

/// Partial derivatives of the two mean lifetimes with respect to the two
/// bias voltages [s/V], from central differences at one interior grid node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KFactors {
    pub k_ap_me: ValueWithError,
    pub k_ap_i: ValueWithError,
    pub k_p_me: ValueWithError,
    pub k_p_i: ValueWithError,
}

/// One dominance ratio; `infinite` flags an exactly-zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioValue {
    pub value: f64,
    pub infinite: bool,
}

impl RatioValue {
    fn new(num: f64, den: f64) -> Self {
        if den == 0.0 {
            RatioValue { value: f64::INFINITY, infinite: true }
        } else {
            RatioValue { value: (num / den).abs(), infinite: false }
        }
    }
}

/// The four dominance ratios of the independence conditions.
///
/// `ap_me_over_ap_i` and `p_i_over_p_me` say each lifetime is steered by its
/// own knob; `ap_me_over_p_me` and `p_i_over_ap_i` say each knob steers only
/// its own lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceRatios {
    pub ap_me_over_ap_i: RatioValue,
    pub p_i_over_p_me: RatioValue,
    pub ap_me_over_p_me: RatioValue,
    pub p_i_over_ap_i: RatioValue,
}

impl IndependenceRatios {
    pub fn as_array(&self) -> [RatioValue; 4] {
        [
            self.ap_me_over_ap_i,
            self.p_i_over_p_me,
            self.ap_me_over_p_me,
            self.p_i_over_ap_i,
        ]
    }

    pub fn all_above(&self, threshold: f64) -> bool {
        self.as_array().iter().all(|r| r.value > threshold)
    }
}

fn node_index(axis: &[f64], value: f64) -> Option<usize> {
    let span = axis.last()? - axis.first()?;
    let tol = span.abs().max(1.0) * 1e-9;
    axis.iter().position(|&v| (v - value).abs() <= tol)
}

fn valid_estimates(grid: &LifetimeGrid, i1: usize, i2: usize) -> Result<(LifetimeEstimate, LifetimeEstimate)> {
    let cell = grid.cell(i1, i2);
    match (cell.tau_p, cell.tau_ap) {
        (Some(p), Some(ap)) => Ok((p, ap)),
        _ => Err(Error::InsufficientData(format!(
            "grid cell ({}, {}) has no lifetime estimates",
            grid.axis1[i1], grid.axis2[i2]
        ))),
    }
}

/// Central-difference k-factors at an interior node of a physical-bias grid.
pub fn k_factors(grid: &LifetimeGrid, at: BiasPoint) -> Result<KFactors> {
    if grid.axis_kind != AxisKind::MeI {
        return Err(Error::InvalidArgument(
            "k-factors are defined on a physical (v_me, v_i) grid".into(),
        ));
    }
    grid.validate()?;
    let i1 = node_index(&grid.axis1, at.v_me).ok_or_else(|| {
        Error::InvalidArgument(format!("v_me = {} is not a grid node", at.v_me))
    })?;
    let i2 = node_index(&grid.axis2, at.v_i).ok_or_else(|| {
        Error::InvalidArgument(format!("v_i = {} is not a grid node", at.v_i))
    })?;
    if i1 == 0 || i1 + 1 == grid.n1() || i2 == 0 || i2 + 1 == grid.n2() {
        return Err(Error::InvalidArgument(format!(
            "({}, {}) is a boundary node; central differences need interior nodes",
            at.v_me, at.v_i
        )));
    }

    let central = |lo: LifetimeEstimate, hi: LifetimeEstimate, dv: f64| ValueWithError {
        value: (hi.mean - lo.mean) / dv,
        sigma: (hi.stderr.powi(2) + lo.stderr.powi(2)).sqrt() / dv.abs(),
    };

    let dv_me = grid.axis1[i1 + 1] - grid.axis1[i1 - 1];
    let (p_me_lo, ap_me_lo) = valid_estimates(grid, i1 - 1, i2)?;
    let (p_me_hi, ap_me_hi) = valid_estimates(grid, i1 + 1, i2)?;

    let dv_i = grid.axis2[i2 + 1] - grid.axis2[i2 - 1];
    let (p_i_lo, ap_i_lo) = valid_estimates(grid, i1, i2 - 1)?;
    let (p_i_hi, ap_i_hi) = valid_estimates(grid, i1, i2 + 1)?;

    Ok(KFactors {
        k_ap_me: central(ap_me_lo, ap_me_hi, dv_me),
        k_ap_i: central(ap_i_lo, ap_i_hi, dv_i),
        k_p_me: central(p_me_lo, p_me_hi, dv_me),
        k_p_i: central(p_i_lo, p_i_hi, dv_i),
    })
}

/// Dominance ratios |k_ap_me/k_ap_i|, |k_p_i/k_p_me|, |k_ap_me/k_p_me|,
/// |k_p_i/k_ap_i|; zero denominators flag the ratio as infinite.
pub fn independence_ratios(k: &KFactors) -> IndependenceRatios {
    IndependenceRatios {
        ap_me_over_ap_i: RatioValue::new(k.k_ap_me.value, k.k_ap_i.value),
        p_i_over_p_me: RatioValue::new(k.k_p_i.value, k.k_p_me.value),
        ap_me_over_p_me: RatioValue::new(k.k_ap_me.value, k.k_p_me.value),
        p_i_over_ap_i: RatioValue::new(k.k_p_i.value, k.k_ap_i.value),
    }
}

/// First-order lifetime changes for a small bias displacement:
/// delta_tau = k_me * dv_me + k_i * dv_i per state. Returns (dtau_ap, dtau_p).
pub fn predict_delta_tau(k: &KFactors, dv_me: f64, dv_i: f64) -> (ValueWithError, ValueWithError) {
    let combine = |k_me: ValueWithError, k_i: ValueWithError| ValueWithError {
        value: k_me.value * dv_me + k_i.value * dv_i,
        sigma: ((k_me.sigma * dv_me).powi(2) + (k_i.sigma * dv_i).powi(2)).sqrt(),
    };
    (combine(k.k_ap_me, k.k_ap_i), combine(k.k_p_me, k.k_p_i))
}

/// Weighted planar fit of one log-lifetime over the grid axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLifetimePlane {
    pub intercept: f64,
    /// d(ln tau)/d(axis1) [1/V] and its uncertainty.
    pub grad_1: f64,
    pub sigma_1: f64,
    /// d(ln tau)/d(axis2) [1/V] and its uncertainty.
    pub grad_2: f64,
    pub sigma_2: f64,
    pub r_squared: f64,
}

impl From<PlaneFit> for LogLifetimePlane {
    fn from(f: PlaneFit) -> Self {
        LogLifetimePlane {
            intercept: f.intercept,
            grad_1: f.grad_x,
            sigma_1: f.sigma_grad_x,
            grad_2: f.grad_y,
            sigma_2: f.sigma_grad_y,
            r_squared: f.r_squared,
        }
    }
}

impl LogLifetimePlane {
    /// Angle of the fitted gradient in the (axis1, axis2) plane, folded into
    /// (-pi/2, pi/2].
    pub fn gradient_angle(&self) -> f64 {
        fold_direction(self.grad_2.atan2(self.grad_1))
    }

    /// One-sigma uncertainty of the gradient angle (delta method).
    pub fn gradient_angle_sigma(&self) -> f64 {
        let g2 = self.grad_1.powi(2) + self.grad_2.powi(2);
        if g2 == 0.0 {
            return f64::INFINITY;
        }
        ((self.grad_2 * self.sigma_1).powi(2) + (self.grad_1 * self.sigma_2).powi(2)).sqrt() / g2
    }
}

/// Fold a direction angle into (-pi/2, pi/2] (directions are sign-free).
pub fn fold_direction(theta: f64) -> f64 {
    let mut t = theta;
    while t <= -std::f64::consts::FRAC_PI_2 {
        t += std::f64::consts::PI;
    }
    while t > std::f64::consts::FRAC_PI_2 {
        t -= std::f64::consts::PI;
    }
    t
}

/// Fit both log-lifetime planes over the valid cells of a grid. Weights are
/// inverse variances of ln(tau), i.e. the dwell counts.
pub fn fit_log_lifetime_planes(grid: &LifetimeGrid) -> Result<(LogLifetimePlane, LogLifetimePlane)> {
    grid.validate()?;
    let mut pts_p = Vec::new();
    let mut pts_ap = Vec::new();
    for i1 in 0..grid.n1() {
        for i2 in 0..grid.n2() {
            let cell = grid.cell(i1, i2);
            if !cell.is_valid() {
                continue;
            }
            let (x, y) = grid.node(i1, i2);
            let p = cell.tau_p.unwrap();
            let ap = cell.tau_ap.unwrap();
            pts_p.push((x, y, p.mean.ln(), p.count as f64));
            pts_ap.push((x, y, ap.mean.ln(), ap.count as f64));
        }
    }
    if pts_p.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} valid grid cells; need at least 4 for a planar fit",
            pts_p.len()
        )));
    }
    let fp = fit_plane(&pts_p)
        .ok_or_else(|| Error::Degenerate("singular design matrix in planar fit".into()))?;
    let fap = fit_plane(&pts_ap)
        .ok_or_else(|| Error::Degenerate("singular design matrix in planar fit".into()))?;
    Ok((fp.into(), fap.into()))
}

/// The basis directions of the drive transformation.
///
/// `alpha` and `beta` are the angles whose unit vectors form the rows of the
/// transformation matrix:
///   (v1)   (cos alpha  sin alpha) (v_me)
///   (v2) = (cos beta   sin beta ) (v_i )
/// Calibration picks `alpha` along the fitted gradient of ln(tau_ap) and
/// `beta` along the gradient of ln(tau_p); with straight log-lifetime
/// contours this makes v1 the sole driver of tau_ap and v2 of tau_p, so the
/// contour lines (which run at 90 degrees to these directions) become
/// axis-aligned in the transformed plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisAngles {
    /// Row-1 direction [rad]; the gradient direction of ln(tau_ap).
    pub alpha: f64,
    /// Row-2 direction [rad]; the gradient direction of ln(tau_p).
    pub beta: f64,
}

/// Minimum |alpha - beta| separation (mod pi) for an invertible matrix.
const MIN_ANGLE_SEPARATION: f64 = 1e-3;

impl BasisAngles {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let angles = BasisAngles { alpha, beta };
        angles.validate()?;
        Ok(angles)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::Degenerate("basis angles must be finite".into()));
        }
        if self.determinant().abs() < MIN_ANGLE_SEPARATION {
            return Err(Error::Degenerate(format!(
                "basis directions are (anti)parallel: alpha = {} rad, beta = {} rad",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Row-major transformation matrix [[cos a, sin a], [cos b, sin b]].
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [
            [self.alpha.cos(), self.alpha.sin()],
            [self.beta.cos(), self.beta.sin()],
        ]
    }

    pub fn determinant(&self) -> f64 {
        // cos(a) sin(b) - sin(a) cos(b)
        (self.beta - self.alpha).sin()
    }

    /// Inverse of the transformation matrix.
    pub fn inverse_matrix(&self) -> Result<[[f64; 2]; 2]> {
        self.validate()?;
        let det = self.determinant();
        Ok([
            [self.beta.sin() / det, -self.alpha.sin() / det],
            [-self.beta.cos() / det, self.alpha.cos() / det],
        ])
    }

    /// Map physical biases to transformed drives.
    pub fn transform(&self, bias: BiasPoint) -> (f64, f64) {
        let m = self.matrix();
        (
            m[0][0] * bias.v_me + m[0][1] * bias.v_i,
            m[1][0] * bias.v_me + m[1][1] * bias.v_i,
        )
    }

    /// Map transformed drives back to physical biases.
    pub fn inverse_transform(&self, v1: f64, v2: f64) -> Result<BiasPoint> {
        let inv = self.inverse_matrix()?;
        Ok(BiasPoint::new(
            inv[0][0] * v1 + inv[0][1] * v2,
            inv[1][0] * v1 + inv[1][1] * v2,
        ))
    }
}

/// Full calibration result: planar fits, basis angles, and the contour-line
/// directions (basis direction rotated by 90 degrees) as seen in the maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub angles: BasisAngles,
    /// Direction of tau_ap contour lines [rad], in (pi/2-folded form + pi/2).
    pub contour_angle_ap: f64,
    /// Direction of tau_p contour lines [rad].
    pub contour_angle_p: f64,
    pub fit_ap: LogLifetimePlane,
    pub fit_p: LogLifetimePlane,
}

/// Fit the contour-line structure of a physical-bias grid.
///
/// Log lifetimes are fitted as affine functions of (v_me, v_i) by weighted
/// least squares; the contour direction of each lifetime runs orthogonal to
/// its fitted gradient. Fits with R^2 below `min_r_squared` are rejected
/// (the straight-contour premise does not hold), as are grids whose two
/// gradients are (anti)parallel.
pub fn fit_contour_angles(grid: &LifetimeGrid, min_r_squared: f64) -> Result<CalibrationFit> {
    if grid.axis_kind != AxisKind::MeI {
        return Err(Error::InvalidArgument(
            "contour calibration runs on a physical (v_me, v_i) grid".into(),
        ));
    }
    if grid.n1() < 6 || grid.n2() < 6 {
        return Err(Error::InvalidArgument(format!(
            "contour calibration needs at least 4x4 interior nodes, got {}x{} total",
            grid.n1(),
            grid.n2()
        )));
    }
    let invalid = grid.cells.iter().filter(|c| !c.is_valid()).count();
    if invalid > 0 {
        return Err(Error::InsufficientData(format!(
            "{invalid} grid cells have no valid lifetime estimates"
        )));
    }
    let (fit_p, fit_ap) = fit_log_lifetime_planes(grid)?;
    for (name, fit) in [("tau_p", &fit_p), ("tau_ap", &fit_ap)] {
        if fit.r_squared < min_r_squared {
            return Err(Error::Degenerate(format!(
                "planar fit of ln({name}) has R^2 = {:.4} < {min_r_squared}; \
                 contour slopes are not constant over this window",
                fit.r_squared
            )));
        }
    }
    let angles = BasisAngles::new(fit_ap.gradient_angle(), fit_p.gradient_angle())?;
    Ok(CalibrationFit {
        angles,
        contour_angle_ap: angles.alpha + std::f64::consts::FRAC_PI_2,
        contour_angle_p: angles.beta + std::f64::consts::FRAC_PI_2,
        fit_ap,
        fit_p,
    })
}

/// Own-vs-cross sensitivity of each lifetime from a planar fit of a grid.
///
/// For a physical grid this returns
/// (|d ln tau_ap / d v_i| / |d ln tau_ap / d v_me|,
///  |d ln tau_p / d v_me| / |d ln tau_p / d v_i|);
/// for a transformed grid, v1 takes the role of tau_ap's own knob and v2 of
/// tau_p's.
pub fn cross_sensitivities(
    fit_ap: &LogLifetimePlane,
    fit_p: &LogLifetimePlane,
) -> (f64, f64) {
    (
        (fit_ap.grad_2 / fit_ap.grad_1).abs(),
        (fit_p.grad_1 / fit_p.grad_2).abs(),
    )
}
