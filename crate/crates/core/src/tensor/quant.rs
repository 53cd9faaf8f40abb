use rand::Rng;

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Signed 8-bit weight matrix with a positive real scale.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantWeightMatrix<F = f64> {
    values: Matrix<i8>,
    scale: F,
}

impl<F: Real> QuantWeightMatrix<F> {
    pub fn new(values: Matrix<i8>, scale: F) -> Result<Self> {
        if !(scale.is_finite() && scale > F::zero()) {
            return Err(Error::Config(format!("weight scale must be finite and > 0, got {scale}")));
        }
        Ok(Self { values, scale })
    }

    /// Unit-scale matrix from raw integer weights.
    pub fn from_ints(values: Matrix<i8>) -> Self {
        Self { values, scale: F::one() }
    }

    /// Uniform integers over the full signed 8-bit range, drawn row-major.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_ints(Matrix::from_fn(rows, cols, |_, _| rng.gen::<i8>()))
    }

    pub fn values(&self) -> &Matrix<i8> {
        &self.values
    }

    pub fn scale(&self) -> F {
        self.scale
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i8 {
        self.values[(r, c)]
    }

    pub fn dequantize(&self) -> Matrix<F> {
        self.values.map(|&q| F::lit(q as f64) * self.scale)
    }
}

/// Symmetric 8-bit quantization: `scale = max|w| / 127`, entries rounded and
/// clamped to `[-127, 127]`. An all-zero matrix gets scale 1.
pub fn quantize_weights<F: Real>(w: &Matrix<F>) -> Result<QuantWeightMatrix<F>> {
    if let Some(bad) = w.as_slice().iter().find(|v| !v.is_finite()) {
        return Err(Error::Config(format!("cannot quantize non-finite weight {bad}")));
    }
    let max_abs = w.as_slice().iter().fold(F::zero(), |m, v| m.max(v.abs()));
    if max_abs == F::zero() {
        return Ok(QuantWeightMatrix::from_ints(Matrix::zeros(w.rows(), w.cols())));
    }
    let limit = F::lit(127.0);
    let scale = max_abs / limit;
    let values = w.map(|&v| {
        let q = (v / scale).round().max(-limit).min(limit);
        q.to_i8().expect("clamped to i8 range")
    });
    QuantWeightMatrix::new(values, scale)
}
