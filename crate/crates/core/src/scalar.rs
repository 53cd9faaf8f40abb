//! Numeric traits the simulator is generic over.
//!
//! Two families appear: real scalars (quantization scales, calibration
//! constants, energy proxies) and signed integer potentials for the LIF
//! membrane accumulator. The spiking datapath itself is fixed-width
//! (8-bit weights, 16-bit integration) and is not parameterized.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, PrimInt, Signed, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used for scales, calibration constants and derived metrics.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
    /// Converts a literal. Every `f64` is representable (possibly rounded) in `f32`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn hundred() -> Self {
        Self::lit(100.0)
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
}

/// Signed integer type holding membrane potentials.
///
/// Must be at least as wide as the 16-bit integration path.
pub trait Potential: PrimInt + Signed + From<i16> + Debug + Default + Send + Sync + 'static {}

impl<T> Potential for T where T: PrimInt + Signed + From<i16> + Debug + Default + Send + Sync + 'static {}
