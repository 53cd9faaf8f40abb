//! Spiking multi-head attention: `A = Q K^T` over binary heads, `X = A V`,
//! then LIF. No softmax, scaling or masking is applied.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{lif_run, saturate_i16, IntegrationTensor, LifParams, Matrix, SpikeTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MhaConfig {
    pub heads: usize,
    pub head_dim: usize,
    pub tokens: usize,
    pub steps: usize,
    pub lif: LifParams,
}

impl MhaConfig {
    /// Splits `features` over `heads`; fails when they do not divide.
    pub fn new(tokens: usize, steps: usize, features: usize, heads: usize, lif: LifParams) -> Result<Self> {
        if heads == 0 || features == 0 {
            return Err(Error::Config(format!("need H >= 1 and D >= 1, got H={heads} D={features}")));
        }
        if !features.is_multiple_of(heads) {
            return Err(Error::Config(format!("D={features} is not divisible by H={heads}")));
        }
        let cfg = Self {
            heads,
            head_dim: features / heads,
            tokens,
            steps,
            lif,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn features(&self) -> usize {
        self.heads * self.head_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 || self.head_dim == 0 || self.steps == 0 {
            return Err(Error::Config(format!(
                "need H, d, T >= 1, got H={} d={} T={}",
                self.heads, self.head_dim, self.steps
            )));
        }
        self.lif.validate()
    }
}

/// Per-head inputs after feature partitioning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadInputs {
    pub q: SpikeTensor,
    pub k: SpikeTensor,
    pub v: SpikeTensor,
}

/// Coincidence counts `A[t][i, j] = |q_i(t) AND k_j(t)|`, each in `[0, d]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionMap {
    head_dim: usize,
    maps: Vec<Matrix<u32>>,
}

impl AttentionMap {
    pub fn head_dim(&self) -> usize {
        self.head_dim
    }

    pub fn steps(&self) -> usize {
        self.maps.len()
    }

    pub fn tokens(&self) -> usize {
        self.maps.first().map_or(0, Matrix::rows)
    }

    pub fn at(&self, t: usize) -> &Matrix<u32> {
        &self.maps[t]
    }

    /// Builds a map directly from per-step matrices; entries must lie in `[0, d]`.
    pub fn from_steps(head_dim: usize, maps: Vec<Matrix<u32>>) -> Result<Self> {
        let n = maps.first().map_or(0, Matrix::rows);
        for (t, m) in maps.iter().enumerate() {
            if m.shape() != (n, n) {
                return Err(Error::shape(
                    "AttentionMap",
                    format!("step {t} is {:?}, expected {n}x{n}", m.shape()),
                ));
            }
            if let Some(v) = m.as_slice().iter().find(|&&v| v as usize > head_dim) {
                return Err(Error::shape("AttentionMap", format!("entry {v} exceeds d={head_dim}")));
            }
        }
        Ok(Self { head_dim, maps })
    }
}

fn check_qkv(q: &SpikeTensor, k: &SpikeTensor, v: &SpikeTensor, cfg: &MhaConfig) -> Result<()> {
    let want = (cfg.tokens, cfg.steps, cfg.features());
    for (name, t) in [("q", q), ("k", k), ("v", v)] {
        if t.dims() != want {
            return Err(Error::shape(
                "mha",
                format!("{name} is {:?}, config expects {want:?}", t.dims()),
            ));
        }
    }
    Ok(())
}

/// Head `h` receives features `[h*d, (h+1)*d)`.
pub fn partition_heads(q: &SpikeTensor, k: &SpikeTensor, v: &SpikeTensor, cfg: &MhaConfig) -> Result<Vec<HeadInputs>> {
    cfg.validate()?;
    check_qkv(q, k, v, cfg)?;
    let d = cfg.head_dim;
    (0..cfg.heads)
        .map(|h| {
            let r = h * d..(h + 1) * d;
            Ok(HeadInputs {
                q: q.feature_slice(r.clone())?,
                k: k.feature_slice(r.clone())?,
                v: v.feature_slice(r)?,
            })
        })
        .collect()
}

pub fn spiking_attention_map(q_h: &SpikeTensor, k_h: &SpikeTensor) -> Result<AttentionMap> {
    if q_h.dims() != k_h.dims() {
        return Err(Error::shape(
            "spiking_attention_map",
            format!("q {:?} vs k {:?}", q_h.dims(), k_h.dims()),
        ));
    }
    let (n, steps, d) = q_h.dims();
    let maps = (0..steps)
        .map(|t| {
            Matrix::from_fn(n, n, |i, j| {
                q_h.row(i, t).iter().zip(k_h.row(j, t)).filter(|(&a, &b)| a && b).count() as u32
            })
        })
        .collect();
    Ok(AttentionMap { head_dim: d, maps })
}

/// `X[t] = A[t] V[t]`, saturated to 16 bits.
pub fn attention_weighted_integration(a: &AttentionMap, v_h: &SpikeTensor) -> Result<IntegrationTensor> {
    let (n, steps, d) = v_h.dims();
    if a.steps() != steps || (steps > 0 && a.tokens() != n) {
        return Err(Error::shape(
            "attention_weighted_integration",
            format!(
                "map is {} steps of {}x{}, values are {:?}",
                a.steps(),
                a.tokens(),
                a.tokens(),
                v_h.dims()
            ),
        ));
    }
    let mut x = IntegrationTensor::zeros(n, steps, d);
    let mut acc = vec![0i64; d];
    for t in 0..steps {
        let at = a.at(t);
        let mut step = Matrix::zeros(n, d);
        let mut saturations = 0;
        for i in 0..n {
            acc.fill(0);
            for (j, &w) in at.row(i).iter().enumerate().filter(|(_, &w)| w != 0) {
                for (c, _) in v_h.row(j, t).iter().enumerate().filter(|(_, &b)| b) {
                    acc[c] += w as i64;
                }
            }
            for (c, &s) in acc.iter().enumerate() {
                let (val, clipped) = saturate_i16(s);
                step[(i, c)] = val;
                saturations += clipped as u64;
            }
        }
        x.set_step(t, &step, saturations)?;
    }
    Ok(x)
}

pub fn spiking_attention_head(q_h: &SpikeTensor, k_h: &SpikeTensor, v_h: &SpikeTensor, lif: &LifParams) -> Result<SpikeTensor> {
    let a = spiking_attention_map(q_h, k_h)?;
    lif_run(&attention_weighted_integration(&a, v_h)?, lif)
}

/// All heads in parallel, concatenated in head order.
pub fn mha_forward(q: &SpikeTensor, k: &SpikeTensor, v: &SpikeTensor, cfg: &MhaConfig) -> Result<SpikeTensor> {
    let heads = partition_heads(q, k, v, cfg)?;
    let outs = heads
        .par_iter()
        .map(|h| spiking_attention_head(&h.q, &h.k, &h.v, &cfg.lif))
        .collect::<Result<Vec<_>>>()?;
    SpikeTensor::concat_features(&outs)
}
