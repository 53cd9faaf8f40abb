use super::{Matrix, QuantWeightMatrix, SpikeTensor};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Quantized synaptic integration `X` over `(N, T, D_out)`, 16-bit signed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrationTensor {
    tokens: usize,
    steps: usize,
    features: usize,
    data: Vec<i16>,
    saturations: u64,
}

impl IntegrationTensor {
    pub fn zeros(tokens: usize, steps: usize, features: usize) -> Self {
        Self {
            tokens,
            steps,
            features,
            data: vec![0; tokens * steps * features],
            saturations: 0,
        }
    }

    pub fn from_fn(tokens: usize, steps: usize, features: usize, mut f: impl FnMut(usize, usize, usize) -> i16) -> Self {
        let mut out = Self::zeros(tokens, steps, features);
        for n in 0..tokens {
            for t in 0..steps {
                for d in 0..features {
                    out.data[(n * steps + t) * features + d] = f(n, t, d);
                }
            }
        }
        out
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.tokens, self.steps, self.features)
    }

    #[inline]
    pub fn get(&self, n: usize, t: usize, d: usize) -> i16 {
        self.data[(n * self.steps + t) * self.features + d]
    }

    pub fn row(&self, n: usize, t: usize) -> &[i16] {
        let start = (n * self.steps + t) * self.features;
        &self.data[start..start + self.features]
    }

    /// Number of entries clamped to the 16-bit range while building this tensor.
    pub fn saturations(&self) -> u64 {
        self.saturations
    }

    /// Writes a `N x D` step matrix, adding `saturations` to the running count.
    pub fn set_step(&mut self, t: usize, step: &Matrix<i16>, saturations: u64) -> Result<()> {
        if step.shape() != (self.tokens, self.features) || t >= self.steps {
            return Err(Error::shape(
                "IntegrationTensor::set_step",
                format!("step {t} of shape {:?} into {:?}", step.shape(), self.dims()),
            ));
        }
        for n in 0..self.tokens {
            let start = (n * self.steps + t) * self.features;
            self.data[start..start + self.features].copy_from_slice(step.row(n));
        }
        self.saturations += saturations;
        Ok(())
    }

    /// Step `t` as a `N x D` matrix.
    pub fn step(&self, t: usize) -> Matrix<i16> {
        Matrix::from_fn(self.tokens, self.features, |n, d| self.get(n, t, d))
    }
}

/// Clamps a wide accumulator to 16 bits, reporting whether it was clipped.
#[inline]
pub fn saturate_i16(v: i64) -> (i16, bool) {
    if v > i16::MAX as i64 {
        (i16::MAX, true)
    } else if v < i16::MIN as i64 {
        (i16::MIN, true)
    } else {
        (v as i16, false)
    }
}

/// Result of one timestep of spike-weight integration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatmulOutput {
    pub values: Matrix<i16>,
    /// Entries whose exact sum fell outside the 16-bit range.
    pub saturations: u64,
    /// Accumulate operations issued: one per (input spike, output feature).
    pub accumulations: u64,
}

/// `out[n, j] = sum_d s[n, t, d] * w[d, j]`, computed exactly and then
/// saturated to 16 bits.
pub fn spike_matmul<F: Real>(s: &SpikeTensor, t: usize, w: &QuantWeightMatrix<F>) -> Result<MatmulOutput> {
    if w.rows() != s.features() {
        return Err(Error::shape(
            "spike_matmul",
            format!("spikes have {} features, weights have {} rows", s.features(), w.rows()),
        ));
    }
    if t >= s.steps() {
        return Err(Error::shape(
            "spike_matmul",
            format!("timestep {t} out of range for T={}", s.steps()),
        ));
    }
    let d_out = w.cols();
    let mut values = Matrix::zeros(s.tokens(), d_out);
    let mut acc = vec![0i32; d_out];
    let mut saturations = 0;
    let mut accumulations = 0;
    for n in 0..s.tokens() {
        acc.fill(0);
        for (d, _) in s.row(n, t).iter().enumerate().filter(|(_, &b)| b) {
            for (a, &wv) in acc.iter_mut().zip(w.values().row(d)) {
                *a += wv as i32;
            }
            accumulations += d_out as u64;
        }
        for (j, &a) in acc.iter().enumerate() {
            let (v, clipped) = saturate_i16(a as i64);
            values[(n, j)] = v;
            saturations += clipped as u64;
        }
    }
    Ok(MatmulOutput {
        values,
        saturations,
        accumulations,
    })
}

/// Runs [`spike_matmul`] over every timestep.
pub fn synaptic_integration<F: Real>(s: &SpikeTensor, w: &QuantWeightMatrix<F>) -> Result<IntegrationTensor> {
    let mut x = IntegrationTensor::zeros(s.tokens(), s.steps(), w.cols());
    for t in 0..s.steps() {
        let out = spike_matmul(s, t, w)?;
        x.set_step(t, &out.values, out.saturations)?;
    }
    Ok(x)
}
