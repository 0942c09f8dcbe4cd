//! Device parameters and bias point.

use serde::{Deserialize, Serialize};

use crate::constants::{K_B, MU_0, MU_B};
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Demagnetization (shape) factors of the free-layer ellipsoid.
///
/// Convention: z is the in-plane long (easy) axis, x the film normal
/// (hardest), so `nz < ny < nx` and the factors sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct DemagFactors {
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl From<[f64; 3]> for DemagFactors {
    fn from(a: [f64; 3]) -> Self {
        DemagFactors { nx: a[0], ny: a[1], nz: a[2] }
    }
}

impl From<DemagFactors> for [f64; 3] {
    fn from(n: DemagFactors) -> Self {
        [n.nx, n.ny, n.nz]
    }
}

/// Physical constants and geometry of one device.
///
/// Field names double as the configuration keys in the `[device]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Saturation magnetization of the free layer [A/m].
    pub saturation_magnetization: f64,
    /// Gilbert damping ratio (dimensionless).
    pub damping_alpha: f64,
    /// Free-layer volume [m^3].
    pub volume: f64,
    /// Shape factors (nx, ny, nz), summing to one.
    pub demag_factors: DemagFactors,
    /// Absolute temperature [K].
    pub temperature: f64,
    /// Magnetoelectric coupling coefficient [s/m].
    pub me_coefficient: f64,
    /// Magnetoelectric oxide thickness [m].
    pub me_thickness: f64,
    /// Parallel-state resistance [ohm].
    pub resistance_p: f64,
    /// Tunnel magnetoresistance ratio; R_AP = R_P * (1 + tmr_ratio).
    pub tmr_ratio: f64,
    /// Spin polarization efficiency in (0, 1].
    pub spin_polarization: f64,
    /// Pinned-layer axis (unit vector); the P state is m along +axis.
    pub polarizer_axis: Vec3,
}

impl DeviceParams {
    /// Number of spins in the free layer, Ms*V/mu_B.
    pub fn spin_count(&self) -> f64 {
        self.saturation_magnetization * self.volume / MU_B
    }

    /// Antiparallel-state resistance [ohm].
    pub fn resistance_ap(&self) -> f64 {
        self.resistance_p * (1.0 + self.tmr_ratio)
    }

    /// Thermal energy k_B*T [J].
    pub fn thermal_energy(&self) -> f64 {
        K_B * self.temperature
    }

    /// Validate the physical-range and geometry invariants.
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if !(self.saturation_magnetization > 0.0) {
            return err(format!(
                "saturation_magnetization must be > 0, got {}",
                self.saturation_magnetization
            ));
        }
        if !(self.volume > 0.0) {
            return err(format!("volume must be > 0, got {}", self.volume));
        }
        if !(self.temperature > 0.0) {
            return err(format!("temperature must be > 0, got {}", self.temperature));
        }
        if !(self.me_thickness > 0.0) {
            return err(format!("me_thickness must be > 0, got {}", self.me_thickness));
        }
        if !(self.resistance_p > 0.0) {
            return err(format!("resistance_p must be > 0, got {}", self.resistance_p));
        }
        if !(self.spin_polarization > 0.0 && self.spin_polarization <= 1.0) {
            return err(format!(
                "spin_polarization must be in (0, 1], got {}",
                self.spin_polarization
            ));
        }
        if !(self.damping_alpha > 0.0 && self.damping_alpha < 1.0) {
            return err(format!(
                "damping_alpha must be in (0, 1), got {}",
                self.damping_alpha
            ));
        }
        if !(self.tmr_ratio > 0.0) {
            return err(format!("tmr_ratio must be > 0, got {}", self.tmr_ratio));
        }
        let n = self.demag_factors;
        let sum = n.nx + n.ny + n.nz;
        if (sum - 1.0).abs() > 1e-9 {
            return err(format!("demag_factors must sum to 1, got {sum}"));
        }
        for (name, v) in [("nx", n.nx), ("ny", n.ny), ("nz", n.nz)] {
            if !(0.0..=1.0).contains(&v) {
                return err(format!("demag factor {name} must be in [0, 1], got {v}"));
            }
        }
        if !(n.nz < n.ny && n.ny < n.nx) {
            return err(format!(
                "demag_factors must satisfy nz < ny < nx (z easy axis), got [{}, {}, {}]",
                n.nx, n.ny, n.nz
            ));
        }
        if (self.polarizer_axis.norm() - 1.0).abs() > 1e-9 {
            return err(format!(
                "polarizer_axis must be a unit vector, |axis| = {}",
                self.polarizer_axis.norm()
            ));
        }
        Ok(())
    }
}

/// One operating point of the two bias terminals.
///
/// Positive `v_me` produces a field along +z (stabilizes P); positive `v_i`
/// drives a spin current that favors the AP state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPoint {
    /// Voltage across the magnetoelectric oxide [V].
    pub v_me: f64,
    /// Voltage across the MTJ stack [V].
    pub v_i: f64,
}

impl BiasPoint {
    pub const ZERO: BiasPoint = BiasPoint { v_me: 0.0, v_i: 0.0 };

    pub fn new(v_me: f64, v_i: f64) -> Self {
        BiasPoint { v_me, v_i }
    }

    pub fn is_finite(&self) -> bool {
        self.v_me.is_finite() && self.v_i.is_finite()
    }
}

/// Relative permeability-free Zeeman scale: mu_0 * Ms * V [J·m/A].
pub(crate) fn zeeman_scale(params: &DeviceParams) -> f64 {
    MU_0 * params.saturation_magnetization * params.volume
}
