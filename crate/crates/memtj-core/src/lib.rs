//! Stochastic macrospin simulator and characterization toolkit for
//! magnetoelectric MTJ telegraph neurons.
//!
//! The crate integrates the stochastic magnetization dynamics of a
//! superparamagnetic free layer driven by two bias voltages (one across a
//! magnetoelectric oxide, one across the MTJ stack), extracts telegraph
//! dwell-time statistics, maps the two lifetimes over the bias plane,
//! quantifies how each knob steers each lifetime, derives the change of
//! drive basis that makes the two controls independent, and provides a fast
//! calibrated two-state Markov neuron for spike-train generation.

pub mod config;
pub mod constants;
pub mod error;
pub mod integrator;
pub mod magnet;
pub mod params;
pub mod stats;
pub mod telegraph;
pub mod vec3;

pub use error::{Error, Result};
pub use params::{BiasPoint, DeviceParams};
pub use vec3::Vec3;
