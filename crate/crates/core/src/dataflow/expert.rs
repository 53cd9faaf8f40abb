//! Synaptic-integration-stationary expert array.
//!
//! Output features map to PE rows and token-timestep pairs to PE columns.
//! Weights enter from the row edge and are reused across every column tile
//! of their row group; spikes enter from the column edge and are re-streamed
//! for each row group. Each PE keeps its integration in place and the array
//! is drained through readout ports after each tile.

use super::types::{chunks, ArrayGeometry, ArrayRole, CycleStats, Phase, Tile, TileSchedule};
use crate::error::Result;
use crate::mem::{AccessEvent, Direction, MemLevel, Unit};

/// Spike statistics of the routed input; only affects operation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SparsityStats {
    pub active_spikes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpertTiming {
    /// Integrations read out per cycle. Defaults to one port per PE row.
    pub extract_ports: usize,
    /// Native word width of every SRAM the array touches.
    pub word_bits: u32,
}

impl ExpertTiming {
    pub fn for_geometry(g: &ArrayGeometry) -> Self {
        Self {
            extract_ports: g.rows,
            word_bits: 128,
        }
    }
}

/// Fill, skew and commit: `reduction + (rows - 1) + (cols - 1) + 1`.
pub fn systolic_cycles(reduction: usize, rows: usize, cols: usize) -> u64 {
    (reduction + rows + cols - 1) as u64
}

pub fn extraction_cycles(rows: usize, cols: usize, ports: usize) -> u64 {
    (rows * cols).div_ceil(ports.max(1)) as u64
}

/// Tiles `D_out` into row groups (outer) and `N_e * T` into column tiles (inner).
pub fn plan_expert_tiles(tokens: usize, steps: usize, d_in: usize, d_out: usize, g: &ArrayGeometry) -> Result<TileSchedule> {
    g.require(ArrayRole::Expert)?;
    let pairs = tokens * steps;
    let mut tiles = Vec::new();
    if pairs > 0 && d_out > 0 && d_in > 0 {
        for rows in chunks(d_out, g.rows) {
            for (i, cols) in chunks(pairs, g.cols).enumerate() {
                tiles.push(Tile {
                    phase: Phase::Stream,
                    head: 0,
                    step: 0,
                    rows: rows.clone(),
                    cols,
                    reduction: d_in,
                    sources: vec![MemLevel::WeightBuffer, MemLevel::ActBuffer],
                    loads_operands: i == 0,
                    accumulate: false,
                    stream_len: 0,
                });
            }
        }
    }
    Ok(TileSchedule {
        geometry: *g,
        space_rows: d_out,
        space_cols: pairs,
        groups: 1,
        tiles,
    })
}

fn push(events: &mut Vec<AccessEvent>, cycle: u64, level: MemLevel, dir: Direction, bits: u64, width: u32) {
    if bits > 0 {
        events.push(AccessEvent::burst(cycle, Unit::Core(0), level, dir, bits, width));
    }
}

/// Closed-form timing for an expert schedule plus its buffer-level trace.
///
/// Events are stamped relative to cycle 0 on `Unit::Core(0)`; callers shift
/// them onto the core that runs the expert.
pub fn simulate_expert_array(
    ts: &TileSchedule,
    sparsity: &SparsityStats,
    timing: &ExpertTiming,
) -> Result<(CycleStats, Vec<AccessEvent>)> {
    ts.geometry.require(ArrayRole::Expert)?;
    let mut stats = CycleStats::empty(ts.geometry.pe_count());
    let mut events = Vec::new();
    let w = timing.word_bits;
    let mut cycle = 0u64;
    for tile in &ts.tiles {
        let (r, c, k) = (tile.row_len(), tile.col_len(), tile.reduction as u64);
        let fill = systolic_cycles(tile.reduction, r, c);
        let extract = extraction_cycles(r, c, timing.extract_ports);
        let weight_bits = r as u64 * k * 8;
        let spike_bits = c as u64 * k;
        if tile.loads_operands {
            push(&mut events, cycle, MemLevel::WeightLb, Direction::Read, weight_bits, w);
            push(&mut events, cycle, MemLevel::WeightBuffer, Direction::Write, weight_bits, w);
        }
        push(&mut events, cycle, MemLevel::WeightBuffer, Direction::Read, weight_bits, w);
        push(&mut events, cycle, MemLevel::ActLb, Direction::Read, spike_bits, w);
        push(&mut events, cycle, MemLevel::ActBuffer, Direction::Write, spike_bits, w);
        push(&mut events, cycle, MemLevel::ActBuffer, Direction::Read, spike_bits, w);
        // 16-bit integrations drained into the integration local buffer
        push(
            &mut events,
            cycle + fill,
            MemLevel::ActLb,
            Direction::Write,
            (r * c * 16) as u64,
            w,
        );
        stats.add_phase("compute", fill);
        stats.add_phase("extract", extract);
        stats.extraction_cycles += extract;
        stats.tile_count += 1;
        cycle += fill + extract;
    }
    stats.total_cycles = cycle;
    if !ts.tiles.is_empty() {
        stats.mac_ops = sparsity.active_spikes * ts.space_rows as u64;
    }
    Ok((stats.finish(), events))
}
