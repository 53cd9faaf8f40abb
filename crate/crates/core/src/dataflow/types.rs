use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mem::MemLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayRole {
    Expert,
    Routing,
    Attention,
}

impl fmt::Display for ArrayRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArrayRole::Expert => "expert",
            ArrayRole::Routing => "routing",
            ArrayRole::Attention => "attention",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    pub role: ArrayRole,
}

impl ArrayGeometry {
    pub fn new(rows: usize, cols: usize, role: ArrayRole) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!("{role} array must be at least 1x1, got {rows}x{cols}")));
        }
        Ok(Self { rows, cols, role })
    }

    /// 16 output-feature rows by 128 token-timestep columns.
    pub const fn expert() -> Self {
        Self {
            rows: 16,
            cols: 128,
            role: ArrayRole::Expert,
        }
    }

    /// 16 tokens by 8 experts.
    pub const fn routing() -> Self {
        Self {
            rows: 16,
            cols: 8,
            role: ArrayRole::Routing,
        }
    }

    pub const fn attention() -> Self {
        Self {
            rows: 16,
            cols: 16,
            role: ArrayRole::Attention,
        }
    }

    pub fn pe_count(&self) -> u64 {
        (self.rows * self.cols) as u64
    }

    pub(crate) fn require(&self, role: ArrayRole) -> Result<()> {
        if self.role != role {
            return Err(Error::Config(format!("expected a {role} array, got {}", self.role)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Single-pass streaming (expert and routing arrays).
    Stream,
    /// Attention map `A = Q K^T` computed into PE registers.
    AttentionMap,
    /// `X = A V` with `A` held in place.
    AttentionValue,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Stream => "stream",
            Phase::AttentionMap => "attention_map",
            Phase::AttentionValue => "attention_value",
        }
    }
}

/// One pass of operands through the array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub phase: Phase,
    /// Attention head (0 elsewhere).
    pub head: usize,
    /// Timestep for attention tiles (0 elsewhere).
    pub step: usize,
    /// Iteration-space rows mapped onto PE rows.
    pub rows: Range<usize>,
    /// Iteration-space columns mapped onto PE columns.
    pub cols: Range<usize>,
    /// Length of the streamed reduction.
    pub reduction: usize,
    /// Buffers the operands stream from.
    pub sources: Vec<MemLevel>,
    /// First tile of a weight-stationary row group: weights come up from the LB.
    pub loads_operands: bool,
    /// Attention value pass onto an existing partial X block.
    pub accumulate: bool,
    /// Output columns streamed by an attention value pass.
    pub stream_len: usize,
}

impl Tile {
    pub fn row_len(&self) -> usize {
        self.rows.len()
    }

    pub fn col_len(&self) -> usize {
        self.cols.len()
    }
}

/// Ordered tiles over an iteration space of `rows x cols` per group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSchedule {
    pub geometry: ArrayGeometry,
    /// Iteration-space extent covered by each group of tiles.
    pub space_rows: usize,
    pub space_cols: usize,
    /// Number of `(head, step)` groups; 1 for expert and routing schedules.
    pub groups: usize,
    pub tiles: Vec<Tile>,
}

impl TileSchedule {
    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn tiles_in(&self, phase: Phase) -> impl Iterator<Item = &Tile> {
        self.tiles.iter().filter(move |t| t.phase == phase)
    }
}

/// Chunks of `0..len` at most `size` long.
pub(crate) fn chunks(len: usize, size: usize) -> impl Iterator<Item = Range<usize>> {
    (0..len.div_ceil(size)).map(move |i| i * size..((i + 1) * size).min(len))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub total_cycles: u64,
    pub phase_cycles: BTreeMap<String, u64>,
    pub tile_count: u64,
    pub mac_ops: u64,
    pub pe_count: u64,
    pub utilization: f64,
    pub extraction_cycles: u64,
}

impl CycleStats {
    pub fn empty(pe_count: u64) -> Self {
        Self {
            total_cycles: 0,
            phase_cycles: BTreeMap::new(),
            tile_count: 0,
            mac_ops: 0,
            pe_count,
            utilization: 0.0,
            extraction_cycles: 0,
        }
    }

    pub(crate) fn add_phase(&mut self, phase: &str, cycles: u64) {
        *self.phase_cycles.entry(phase.to_string()).or_default() += cycles;
    }

    /// Recomputes `utilization = mac_ops / (total_cycles * pe_count)`.
    pub(crate) fn finish(mut self) -> Self {
        let denom = self.total_cycles as f64 * self.pe_count as f64;
        self.utilization = if denom > 0.0 { self.mac_ops as f64 / denom } else { 0.0 };
        self
    }
}
