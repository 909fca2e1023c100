//! BLDC motor simulation and cascaded position-controller tuning.
//!
//! A θ-varying discrete state-space motor model is driven either by six-step
//! (trapezoidal) commutation or by field-oriented control, each wrapped in a
//! position PID → speed PI cascade. The position PID gains are tuned with
//! NSGA-II against two objectives: integrated absolute position error and
//! total harmonic distortion of the electromagnetic torque.

pub mod control;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod motor;
pub mod nsga2;
pub mod power_stage;

pub use error::{Error, Result};
