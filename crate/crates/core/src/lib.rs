//! Functional and cycle-level simulator for spiking mixture-of-experts and
//! spiking multi-head attention accelerators in 2D and face-to-face 3D
//! integration.
//!
//! The functional path is bit exact (8-bit weights, 16-bit saturating
//! integration, integer LIF neurons). Timing comes from closed-form systolic
//! array models, and memory cost from per-design calibration constants
//! weighted by the access trace.

pub mod dataflow;
pub mod error;
pub mod mem;
pub mod mha;
pub mod moe;
pub mod report;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::{Potential, Real};

/// LIF neurons with 32-bit potentials.
pub type Lif = tensor::LifParams<i32>;
/// Weights with an `f64` scale.
pub type Weights = tensor::QuantWeightMatrix<f64>;
/// `f64` memory calibration.
pub type Calibration = mem::MemCalibration<f64>;
/// `f32` memory calibration.
pub type CalibrationF32 = mem::MemCalibration<f32>;
/// `f64` memory report.
pub type MemReportF64 = mem::MemReport<f64>;
