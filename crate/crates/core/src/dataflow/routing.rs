//! Expert routing score array: token chunks on rows, experts on columns,
//! reduction over every `(timestep, feature)` pair.

use super::expert::{extraction_cycles, systolic_cycles};
use super::types::{chunks, ArrayGeometry, ArrayRole, CycleStats, Phase, Tile, TileSchedule};
use crate::error::Result;
use crate::mem::{AccessEvent, Direction, MemLevel, Unit};

/// Expert chunks outer so each `W_r` slice is loaded once and reused over all token chunks.
pub fn plan_routing_tiles(tokens: usize, steps: usize, d_in: usize, experts: usize, g: &ArrayGeometry) -> Result<TileSchedule> {
    g.require(ArrayRole::Routing)?;
    let reduction = steps * d_in;
    let mut tiles = Vec::new();
    if tokens > 0 && experts > 0 && reduction > 0 {
        for cols in chunks(experts, g.cols) {
            for (i, rows) in chunks(tokens, g.rows).enumerate() {
                tiles.push(Tile {
                    phase: Phase::Stream,
                    head: 0,
                    step: 0,
                    rows,
                    cols: cols.clone(),
                    reduction,
                    sources: vec![MemLevel::ActGlb, MemLevel::WeightGlb0],
                    loads_operands: i == 0,
                    accumulate: false,
                    stream_len: 0,
                });
            }
        }
    }
    Ok(TileSchedule {
        geometry: *g,
        space_rows: tokens,
        space_cols: experts,
        groups: 1,
        tiles,
    })
}

/// Timing and trace of the score computation. Scores are extracted as
/// 16-bit words into the router staging buffer.
#[allow(clippy::too_many_arguments)]
pub fn simulate_routing_array(
    tokens: usize,
    steps: usize,
    d_in: usize,
    experts: usize,
    g: &ArrayGeometry,
    extract_ports: usize,
    word_bits: u32,
) -> Result<(CycleStats, Vec<AccessEvent>)> {
    let ts = plan_routing_tiles(tokens, steps, d_in, experts, g)?;
    let mut stats = CycleStats::empty(g.pe_count());
    let mut events = Vec::new();
    let mut cycle = 0;
    let mut ev = |cycle, level, dir, bits: u64| {
        if bits > 0 {
            events.push(AccessEvent::burst(cycle, Unit::Router, level, dir, bits, word_bits));
        }
    };
    for tile in &ts.tiles {
        let (r, c) = (tile.row_len(), tile.col_len());
        let fill = systolic_cycles(tile.reduction, r, c);
        let extract = extraction_cycles(r, c, extract_ports);
        if tile.loads_operands {
            ev(cycle, MemLevel::WeightGlb0, Direction::Read, (d_in * c * 8) as u64);
        }
        ev(cycle, MemLevel::ActGlb, Direction::Read, (r * tile.reduction) as u64);
        ev(cycle + fill, MemLevel::ActBuffer, Direction::Write, (r * c * 16) as u64);
        stats.add_phase("compute", fill);
        stats.add_phase("extract", extract);
        stats.extraction_cycles += extract;
        stats.tile_count += 1;
        stats.mac_ops += (r * c * tile.reduction) as u64;
        cycle += fill + extract;
    }
    stats.total_cycles = cycle;
    Ok((stats.finish(), events))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_tile_closed_form() {
        let g = ArrayGeometry::routing();
        let (s, ev) = simulate_routing_array(16, 4, 128, 4, &g, 16, 128).unwrap();
        assert_eq!(s.tile_count, 1);
        assert_eq!(s.total_cycles, 512 + 15 + 3 + 1 + 4);
        assert_eq!(ev.iter().filter(|e| e.level == MemLevel::WeightGlb0).count(), 1);
    }

    #[test]
    fn empty_and_ragged() {
        let g = ArrayGeometry::routing();
        let (s, ev) = simulate_routing_array(0, 4, 128, 4, &g, 16, 128).unwrap();
        assert_eq!(s.total_cycles, 0);
        assert!(ev.is_empty());
        assert_eq!(plan_routing_tiles(33, 1, 8, 8, &g).unwrap().len(), 3);
        // more experts than columns is still valid
        assert_eq!(plan_routing_tiles(16, 1, 8, 20, &g).unwrap().len(), 3);
    }
}
