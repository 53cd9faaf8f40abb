//! Two-phase reconfigurable attention array.
//!
//! For every `(head, timestep)` the `N x N` attention map is tiled over
//! query blocks (rows) and key blocks (columns). Each tile runs twice back
//! to back: first Q and K stream in and the coincidence counts settle in
//! PE registers, then V streams top to bottom against the resident map and
//! partial X leaves at the right edge. The map never moves through memory.

use super::expert::systolic_cycles;
use super::types::{chunks, ArrayGeometry, ArrayRole, CycleStats, Phase, Tile, TileSchedule};
use crate::error::Result;
use crate::mem::{AccessEvent, Direction, MemLevel, Unit};

pub fn plan_attention_tiles(
    tokens: usize,
    head_dim: usize,
    steps: usize,
    heads: usize,
    g: &ArrayGeometry,
) -> Result<TileSchedule> {
    g.require(ArrayRole::Attention)?;
    let mut tiles = Vec::new();
    if tokens > 0 && head_dim > 0 {
        for head in 0..heads {
            for step in 0..steps {
                let mut first = true;
                for rows in chunks(tokens, g.rows) {
                    for (kb, cols) in chunks(tokens, g.cols).enumerate() {
                        tiles.push(Tile {
                            phase: Phase::AttentionMap,
                            head,
                            step,
                            rows: rows.clone(),
                            cols: cols.clone(),
                            reduction: head_dim,
                            sources: vec![MemLevel::ActBuffer, MemLevel::WeightBuffer],
                            loads_operands: first,
                            accumulate: false,
                            stream_len: 0,
                        });
                        first = false;
                        tiles.push(Tile {
                            phase: Phase::AttentionValue,
                            head,
                            step,
                            rows: rows.clone(),
                            cols: cols.clone(),
                            reduction: cols.len(),
                            sources: vec![MemLevel::WeightBuffer],
                            loads_operands: false,
                            accumulate: kb > 0,
                            stream_len: head_dim,
                        });
                    }
                }
            }
        }
    }
    Ok(TileSchedule {
        geometry: *g,
        space_rows: tokens,
        space_cols: tokens,
        groups: heads * steps,
        tiles,
    })
}

pub fn map_pass_cycles(head_dim: usize, rows: usize, cols: usize) -> u64 {
    systolic_cycles(head_dim, rows, cols)
}

/// `d + (rows - 1) + 1`: V columns pass every resident row, then commit.
pub fn value_pass_cycles(head_dim: usize, rows: usize) -> u64 {
    (head_dim + rows) as u64
}

/// Timing and trace for an attention schedule with events on `Unit::Core(0)`.
pub fn simulate_attention_array(ts: &TileSchedule, word_bits: u32) -> Result<(CycleStats, Vec<AccessEvent>)> {
    ts.geometry.require(ArrayRole::Attention)?;
    let n = ts.space_rows as u64;
    let mut stats = CycleStats::empty(ts.geometry.pe_count());
    let mut events = Vec::new();
    let mut ev = |cycle, level, dir, bits: u64| {
        if bits > 0 {
            events.push(AccessEvent::burst(cycle, Unit::Core(0), level, dir, bits, word_bits));
        }
    };
    let mut cycle = 0;
    for tile in &ts.tiles {
        let (r, c) = (tile.row_len() as u64, tile.col_len() as u64);
        match tile.phase {
            Phase::AttentionMap => {
                let d = tile.reduction as u64;
                if tile.loads_operands {
                    // this step's Q, K and V move down from the LBs into the buffers
                    ev(cycle, MemLevel::ActLb, Direction::Read, 2 * n * d);
                    ev(cycle, MemLevel::WeightLb, Direction::Read, n * d);
                    ev(cycle, MemLevel::ActBuffer, Direction::Write, n * d);
                    ev(cycle, MemLevel::WeightBuffer, Direction::Write, 2 * n * d);
                }
                ev(cycle, MemLevel::ActBuffer, Direction::Read, r * d);
                ev(cycle, MemLevel::WeightBuffer, Direction::Read, c * d);
                let cy = map_pass_cycles(tile.reduction, tile.row_len(), tile.col_len());
                stats.add_phase(Phase::AttentionMap.name(), cy);
                stats.mac_ops += r * c * d;
                cycle += cy;
            }
            Phase::AttentionValue => {
                let d = tile.stream_len as u64;
                let cy = value_pass_cycles(tile.stream_len, tile.row_len());
                ev(cycle, MemLevel::WeightBuffer, Direction::Read, c * d);
                if tile.accumulate {
                    ev(cycle + cy - 1, MemLevel::ActLb, Direction::Read, r * d * 16);
                }
                ev(cycle + cy - 1, MemLevel::ActLb, Direction::Write, r * d * 16);
                stats.add_phase(Phase::AttentionValue.name(), cy);
                stats.mac_ops += r * c * d;
                cycle += cy;
            }
            Phase::Stream => unreachable!("attention schedules only hold attention phases"),
        }
        stats.tile_count += 1;
    }
    stats.total_cycles = cycle;
    Ok((stats.finish(), events))
}
