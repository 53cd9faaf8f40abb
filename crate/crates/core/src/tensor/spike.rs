use std::fmt;
use std::ops::Range;
use std::path::Path;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Axis order of a serialized spike stream.
///
/// The in-memory layout is always token-major `(N, T, D)`; step-major
/// `(T, N, D)` files are transposed on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    #[default]
    Ntd,
    Tnd,
}

/// Binary activation tensor over `(token, timestep, feature)`.
///
/// Timesteps and features are always at least one; the token axis may be
/// empty (an expert that receives no tokens).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpikeTensor {
    tokens: usize,
    steps: usize,
    features: usize,
    bits: Vec<bool>,
}

impl fmt::Debug for SpikeTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpikeTensor")
            .field("dims", &self.dims())
            .field("ones", &self.count_ones())
            .finish()
    }
}

fn check_dims(op: &'static str, steps: usize, features: usize) -> Result<()> {
    if steps == 0 || features == 0 {
        return Err(Error::shape(
            op,
            format!("timesteps and features must be >= 1, got T={steps} D={features}"),
        ));
    }
    Ok(())
}

impl SpikeTensor {
    pub fn zeros(tokens: usize, steps: usize, features: usize) -> Result<Self> {
        check_dims("SpikeTensor::zeros", steps, features)?;
        Ok(Self {
            tokens,
            steps,
            features,
            bits: vec![false; tokens * steps * features],
        })
    }

    pub fn from_bits(tokens: usize, steps: usize, features: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims("SpikeTensor::from_bits", steps, features)?;
        if bits.len() != tokens * steps * features {
            return Err(Error::shape(
                "SpikeTensor::from_bits",
                format!("{} bits for dims ({tokens}, {steps}, {features})", bits.len()),
            ));
        }
        Ok(Self {
            tokens,
            steps,
            features,
            bits,
        })
    }

    pub fn from_fn(tokens: usize, steps: usize, features: usize, mut f: impl FnMut(usize, usize, usize) -> bool) -> Result<Self> {
        let mut out = Self::zeros(tokens, steps, features)?;
        for n in 0..tokens {
            for t in 0..steps {
                for d in 0..features {
                    out.set(n, t, d, f(n, t, d));
                }
            }
        }
        Ok(out)
    }

    /// Bernoulli(`p`) spikes drawn in storage order.
    pub fn random<R: Rng + ?Sized>(tokens: usize, steps: usize, features: usize, p: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("spike probability {p} outside [0, 1]")));
        }
        check_dims("SpikeTensor::random", steps, features)?;
        let bits = (0..tokens * steps * features).map(|_| rng.gen_bool(p)).collect();
        Ok(Self {
            tokens,
            steps,
            features,
            bits,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.tokens, self.steps, self.features)
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn is_empty(&self) -> bool {
        self.tokens == 0
    }

    #[inline]
    fn index(&self, n: usize, t: usize, d: usize) -> usize {
        debug_assert!(n < self.tokens && t < self.steps && d < self.features);
        (n * self.steps + t) * self.features + d
    }

    #[inline]
    pub fn get(&self, n: usize, t: usize, d: usize) -> bool {
        self.bits[self.index(n, t, d)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, t: usize, d: usize, v: bool) {
        let i = self.index(n, t, d);
        self.bits[i] = v;
    }

    /// Feature vector of token `n` at step `t`.
    #[inline]
    pub fn row(&self, n: usize, t: usize) -> &[bool] {
        let start = self.index(n, t, 0);
        &self.bits[start..start + self.features]
    }

    #[inline]
    pub fn row_mut(&mut self, n: usize, t: usize) -> &mut [bool] {
        let start = self.index(n, t, 0);
        let d = self.features;
        &mut self.bits[start..start + d]
    }

    /// All `(T, D)` bits of one token.
    pub fn token(&self, n: usize) -> &[bool] {
        let len = self.steps * self.features;
        &self.bits[n * len..(n + 1) * len]
    }

    pub fn as_bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    /// Ones at a single timestep across all tokens.
    pub fn count_ones_at(&self, t: usize) -> u64 {
        (0..self.tokens)
            .map(|n| self.row(n, t).iter().filter(|&&b| b).count() as u64)
            .sum()
    }

    /// Tokens listed in `ids`, in the given order.
    pub fn select_tokens(&self, ids: &[usize]) -> Result<Self> {
        let len = self.steps * self.features;
        let mut bits = Vec::with_capacity(ids.len() * len);
        for &n in ids {
            if n >= self.tokens {
                return Err(Error::shape(
                    "select_tokens",
                    format!("token {n} out of range for {} tokens", self.tokens),
                ));
            }
            bits.extend_from_slice(self.token(n));
        }
        Ok(Self {
            tokens: ids.len(),
            steps: self.steps,
            features: self.features,
            bits,
        })
    }

    /// Contiguous feature slice `[range.start, range.end)`.
    pub fn feature_slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.features {
            return Err(Error::shape(
                "feature_slice",
                format!("range {range:?} invalid for {} features", self.features),
            ));
        }
        let width = range.end - range.start;
        let mut bits = Vec::with_capacity(self.tokens * self.steps * width);
        for n in 0..self.tokens {
            for t in 0..self.steps {
                bits.extend_from_slice(&self.row(n, t)[range.clone()]);
            }
        }
        Ok(Self {
            tokens: self.tokens,
            steps: self.steps,
            features: width,
            bits,
        })
    }

    /// Concatenates tensors along the feature axis, in slice order.
    pub fn concat_features(parts: &[SpikeTensor]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::shape("concat_features", "no parts"))?;
        let (tokens, steps) = (first.tokens, first.steps);
        if let Some(bad) = parts.iter().find(|p| p.tokens != tokens || p.steps != steps) {
            return Err(Error::shape(
                "concat_features",
                format!("part dims {:?} disagree with ({tokens}, {steps}, _)", bad.dims()),
            ));
        }
        let features = parts.iter().map(|p| p.features).sum();
        let mut bits = Vec::with_capacity(tokens * steps * features);
        for n in 0..tokens {
            for t in 0..steps {
                for p in parts {
                    bits.extend_from_slice(p.row(n, t));
                }
            }
        }
        Ok(Self {
            tokens,
            steps,
            features,
            bits,
        })
    }

    /// Overwrites step `t` with a single-step tensor of matching width.
    pub fn set_step(&mut self, t: usize, slice: &SpikeTensor) -> Result<()> {
        if slice.steps != 1 || slice.tokens != self.tokens || slice.features != self.features {
            return Err(Error::shape(
                "set_step",
                format!("slice dims {:?} vs tensor {:?}", slice.dims(), self.dims()),
            ));
        }
        for n in 0..self.tokens {
            self.row_mut(n, t).copy_from_slice(slice.row(n, 0));
        }
        Ok(())
    }

    /// Packed stream: `N, T, D` as little-endian u32 followed by the bits in
    /// token-major, then timestep, then feature order, LSB-first within each byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.bits.len().div_ceil(8));
        for dim in [self.tokens, self.steps, self.features] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        out.extend(
            self.bits
                .chunks(8)
                .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i))),
        );
        out
    }

    /// Decodes a packed stream. With [`Layout::Tnd`] the header is read as
    /// `T, N, D` and the payload as step-major, then normalized.
    pub fn from_bytes(bytes: &[u8], layout: Layout) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::Decode(format!("{} bytes is shorter than the header", bytes.len())));
        }
        let dim = |i: usize| u32::from_le_bytes(bytes[i * 4..i * 4 + 4].try_into().unwrap()) as usize;
        let (a, b, features) = (dim(0), dim(1), dim(2));
        let (tokens, steps) = match layout {
            Layout::Ntd => (a, b),
            Layout::Tnd => (b, a),
        };
        check_dims("SpikeTensor::from_bytes", steps, features).map_err(|e| Error::Decode(e.to_string()))?;
        let count = tokens * steps * features;
        let payload = &bytes[12..];
        if payload.len() != count.div_ceil(8) {
            return Err(Error::Decode(format!(
                "payload of {} bytes, expected {} for {count} bits",
                payload.len(),
                count.div_ceil(8)
            )));
        }
        let raw = |i: usize| (payload[i / 8] >> (i % 8)) & 1 == 1;
        let mut out = Self::zeros(tokens, steps, features)?;
        for n in 0..tokens {
            for t in 0..steps {
                for d in 0..features {
                    let i = match layout {
                        Layout::Ntd => (n * steps + t) * features + d,
                        Layout::Tnd => (t * tokens + n) * features + d,
                    };
                    out.set(n, t, d, raw(i));
                }
            }
        }
        Ok(out)
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(path: impl AsRef<Path>, layout: Layout) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, layout)
    }

    /// SHA-256 of the packed stream, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}
