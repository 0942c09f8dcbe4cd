//! Physical constants in SI units.

/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380_649e-23;

/// Vacuum permeability [T·m/A].
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Bohr magneton [J/T].
pub const MU_B: f64 = 9.274_010_078_3e-24;

/// Elementary charge [C].
pub const Q_E: f64 = 1.602_176_634e-19;

/// Electron gyromagnetic ratio expressed against fields in A/m [m/(A·s)].
///
/// Equals gamma_e * mu_0 with gamma_e = 1.76085963023e11 rad/(s·T), so that
/// the precession rate is `GAMMA * H` for H in A/m.
pub const GAMMA: f64 = 1.760_859_630_23e11 * MU_0;
