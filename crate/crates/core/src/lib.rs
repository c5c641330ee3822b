//! Simulator and design-analysis library for flux-pumped three-wave-mixing
//! parametric amplifiers built from SNAIL arrays embedded in a microstrip
//! resonator.
//!
//! The chain runs: SNAIL potential and Taylor coefficients ([`snail`]) ->
//! distributed-mode solution and Hamiltonian coefficients ([`mode`]) ->
//! pumped effective Kerr model, gain, thresholds and stability ([`pump`])
//! -> measurable amplifier figures ([`metrics`]), all checkable against a
//! brute-force time-domain integrator ([`oracle`]) and orchestrated into
//! figure-ready data files by [`sweep`].

pub mod constants;
pub mod error;
pub mod metrics;
pub mod mode;
pub mod oracle;
pub mod pump;
pub mod snail;
pub mod sweep;

pub use error::{Error, Result};
pub use metrics::{OperatingPoint, SaturationCurve, SaturationPoint};
pub use mode::{CircuitSpec, KappaSpec, ModeParams};
pub use pump::{EffectiveModel, HbState, StabilityRegion};
pub use snail::{SnailSpec, TaylorCoeffs};
pub use sweep::{DeviceConfig, KerrFreePoint, SweepOutcome};
