use serde::{Deserialize, Serialize};

use super::{MemCalibration, MemLevel};
use crate::scalar::Real;

/// Sizes that determine buffer residency for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WorkloadShape {
    Moe {
        tokens: usize,
        steps: usize,
        d_in: usize,
        d_out: usize,
        experts: usize,
        /// `false` for a plain dense layer without a router.
        routed: bool,
        array_rows: usize,
        array_cols: usize,
    },
    Mha {
        tokens: usize,
        steps: usize,
        heads: usize,
        head_dim: usize,
        array_rows: usize,
        array_cols: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityEntry {
    pub level: MemLevel,
    pub holds: String,
    pub required_bits: u64,
    pub capacity_bits: u64,
    pub fits: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub fits: bool,
    pub entries: Vec<CapacityEntry>,
}

impl CapacityReport {
    pub fn overflows(&self) -> impl Iterator<Item = &CapacityEntry> {
        self.entries.iter().filter(|e| !e.fits)
    }
}

fn requirements(shape: &WorkloadShape) -> Vec<(MemLevel, String, u64)> {
    let u = |v: usize| v as u64;
    match *shape {
        WorkloadShape::Moe {
            tokens,
            steps,
            d_in,
            d_out,
            experts,
            routed,
            array_rows,
            array_cols,
        } => {
            let (n, t, di, dout, e) = (u(tokens), u(steps), u(d_in), u(d_out), u(experts));
            let expert_bits = di * dout * 8;
            let router_bits = if routed { di * e * 8 } else { 0 };
            let even = e.div_ceil(2);
            let odd = e / 2;
            let tile_cols = u(array_cols).min(n * t);
            let tile_rows = u(array_rows).min(dout);
            vec![
                (MemLevel::ActGlb, "layer input and output spikes".into(), n * t * (di + dout)),
                (
                    MemLevel::WeightGlb0,
                    "even-numbered expert weights and router weights".into(),
                    even * expert_bits + router_bits,
                ),
                (MemLevel::WeightGlb1, "odd-numbered expert weights".into(), odd * expert_bits),
                (MemLevel::ActLb, "spikes of one column tile".into(), tile_cols * di),
                (MemLevel::WeightLb, "one preloaded expert weight matrix".into(), expert_bits),
                (MemLevel::ActBuffer, "one spike wavefront".into(), tile_cols),
                (MemLevel::WeightBuffer, "one weight wavefront".into(), tile_rows * 8),
            ]
        }
        WorkloadShape::Mha {
            tokens,
            steps,
            heads,
            head_dim,
            array_rows,
            array_cols,
        } => {
            let (n, t, d) = (u(tokens), u(steps), u(head_dim));
            let rows = u(array_rows).min(n);
            let cols = u(array_cols).min(n);
            vec![
                (MemLevel::ActGlb, "Q, K, V and output spikes".into(), 4 * n * t * d * u(heads)),
                (
                    MemLevel::ActLb,
                    "one head's Q and K plus a 16-bit partial-X row block".into(),
                    2 * n * t * d + rows * d * 16,
                ),
                (MemLevel::WeightLb, "one head's V".into(), n * t * d),
                (MemLevel::ActBuffer, "query rows of one attention tile".into(), rows * d),
                (
                    MemLevel::WeightBuffer,
                    "key and value rows of one key block".into(),
                    2 * cols * d,
                ),
            ]
        }
    }
}

/// Compares each level's required residency against its capacity.
/// Overflow is a verdict in the report, never an error.
pub fn capacity_check<F: Real>(shape: &WorkloadShape, cal: &MemCalibration<F>) -> CapacityReport {
    let entries: Vec<CapacityEntry> = requirements(shape)
        .into_iter()
        .filter_map(|(level, holds, required_bits)| {
            let spec = cal.level(level)?;
            let capacity_bits = spec.capacity_bits();
            Some(CapacityEntry {
                level,
                holds,
                required_bits,
                capacity_bits,
                fits: required_bits <= capacity_bits,
            })
        })
        .collect();
    CapacityReport {
        fits: entries.iter().all(|e| e.fits),
        entries,
    }
}
