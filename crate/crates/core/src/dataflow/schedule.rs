//! Multi-core scheduling and whole-layer timing.

use serde::{Deserialize, Serialize};

use super::attention::{plan_attention_tiles, simulate_attention_array};
use super::expert::{plan_expert_tiles, simulate_expert_array, ExpertTiming, SparsityStats};
use super::routing::simulate_routing_array;
use super::types::{ArrayGeometry, ArrayRole, CycleStats};
use crate::error::{Error, Result};
use crate::mem::{merge_traces, AccessEvent, Direction, MemLevel, Unit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelSchedule {
    pub stats: CycleStats,
    /// Workload indices per core, in execution order.
    pub assignment: Vec<Vec<usize>>,
    /// Core and start cycle of every workload.
    pub placements: Vec<(usize, u64)>,
    pub core_cycles: Vec<u64>,
}

/// Longest-processing-time-first placement of independent workloads onto
/// `cores`, after a serial `router_overhead`.
///
/// Ties go to the lower workload index and then the lower core id.
pub fn expert_parallel_schedule(per_unit: &[CycleStats], cores: usize, router_overhead: u64) -> Result<ParallelSchedule> {
    if cores == 0 {
        return Err(Error::Config("need at least one core".into()));
    }
    let mut order: Vec<usize> = (0..per_unit.len()).collect();
    order.sort_by(|&a, &b| per_unit[b].total_cycles.cmp(&per_unit[a].total_cycles).then(a.cmp(&b)));
    let mut core_cycles = vec![0u64; cores];
    let mut assignment = vec![Vec::new(); cores];
    let mut placements = vec![(0, 0); per_unit.len()];
    for w in order {
        let core = (0..cores).min_by_key(|&c| (core_cycles[c], c)).expect("cores >= 1");
        placements[w] = (core, router_overhead + core_cycles[core]);
        core_cycles[core] += per_unit[w].total_cycles;
        assignment[core].push(w);
    }
    let makespan = core_cycles.iter().copied().max().unwrap_or(0);
    let unit_pe = per_unit.iter().map(|s| s.pe_count).max().unwrap_or(0);
    let mut stats = CycleStats::empty(unit_pe * cores as u64);
    stats.total_cycles = router_overhead + makespan;
    stats.add_phase("route", router_overhead);
    stats.add_phase("parallel", makespan);
    for s in per_unit {
        stats.tile_count += s.tile_count;
        stats.mac_ops += s.mac_ops;
        stats.extraction_cycles += s.extraction_cycles;
    }
    Ok(ParallelSchedule {
        stats: stats.finish(),
        assignment,
        placements,
        core_cycles,
    })
}

/// Array sizes and scheduling knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareConfig {
    pub cores: usize,
    pub expert_array: ArrayGeometry,
    pub routing_array: ArrayGeometry,
    pub attention_array: ArrayGeometry,
    /// Readout ports per array; `None` means one per PE row.
    pub extract_ports: Option<usize>,
    /// Serial router (MoE) or dispatcher (MHA) cycles; `None` uses the
    /// built-in estimate.
    pub router_overhead_cycles: Option<u64>,
    pub word_bits: u32,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            cores: 4,
            expert_array: ArrayGeometry::expert(),
            routing_array: ArrayGeometry::routing(),
            attention_array: ArrayGeometry::attention(),
            extract_ports: None,
            router_overhead_cycles: None,
            word_bits: 128,
        }
    }
}

impl HardwareConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.cores == 0 {
            problems.push("hardware.cores must be >= 1".to_string());
        }
        for (g, role) in [
            (&self.expert_array, ArrayRole::Expert),
            (&self.routing_array, ArrayRole::Routing),
            (&self.attention_array, ArrayRole::Attention),
        ] {
            if g.role != role || g.rows == 0 || g.cols == 0 {
                problems.push(format!("{role} array must be a {role} array of at least 1x1"));
            }
        }
        if self.extract_ports == Some(0) {
            problems.push("hardware.extract_ports must be >= 1".to_string());
        }
        if self.word_bits == 0 {
            problems.push("word width must be >= 1 bit".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Workload(problems))
        }
    }

    fn ports(&self, g: &ArrayGeometry) -> usize {
        self.extract_ports.unwrap_or(g.rows)
    }
}

/// Timing of one workload unit (expert or head) on its core.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitTiming {
    pub id: usize,
    pub core: usize,
    pub start_cycle: u64,
    pub stats: CycleStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTiming {
    pub system: CycleStats,
    pub routing: Option<CycleStats>,
    pub units: Vec<UnitTiming>,
    #[serde(skip)]
    pub trace: Vec<AccessEvent>,
}

/// Sizes of an MoE (or dense, when `routed` is false) layer as seen by the timing model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoeWorkload {
    pub tokens: usize,
    pub steps: usize,
    pub d_in: usize,
    pub d_out: usize,
    /// Tokens routed to each expert.
    pub expert_tokens: Vec<usize>,
    /// Input spikes received by each expert.
    pub expert_spikes: Vec<u64>,
    pub routed: bool,
}

fn burst(cycle: u64, unit: Unit, level: MemLevel, dir: Direction, bits: u64, width: u32) -> Option<AccessEvent> {
    (bits > 0).then(|| AccessEvent::burst(cycle, unit, level, dir, bits, width))
}

/// Router, expert-parallel array execution and GLB traffic for one MoE layer.
pub fn moe_layer_timing(w: &MoeWorkload, hw: &HardwareConfig) -> Result<LayerTiming> {
    hw.validate()?;
    let experts = w.expert_tokens.len();
    if w.expert_spikes.len() != experts {
        return Err(Error::shape("moe_layer_timing", "spike and token counts per expert differ"));
    }
    let bits = hw.word_bits;
    let mut traces = Vec::new();

    let (routing, router_phase) = if w.routed {
        let (stats, events) = simulate_routing_array(
            w.tokens,
            w.steps,
            w.d_in,
            experts,
            &hw.routing_array,
            hw.ports(&hw.routing_array),
            bits,
        )?;
        let estimate = (w.steps * w.d_in + hw.routing_array.rows + experts) as u64;
        let overhead = hw.router_overhead_cycles.unwrap_or(estimate);
        // score computation cannot finish faster than the array does
        let phase = overhead.max(stats.total_cycles);
        traces.push(events);
        (Some(stats), phase)
    } else {
        (None, hw.router_overhead_cycles.unwrap_or(0))
    };

    let timing = ExpertTiming {
        extract_ports: hw.ports(&hw.expert_array),
        word_bits: bits,
    };
    let mut per_expert = Vec::with_capacity(experts);
    let mut local = Vec::with_capacity(experts);
    for e in 0..experts {
        let ts = plan_expert_tiles(w.expert_tokens[e], w.steps, w.d_in, w.d_out, &hw.expert_array)?;
        let (stats, events) = simulate_expert_array(
            &ts,
            &SparsityStats {
                active_spikes: w.expert_spikes[e],
            },
            &timing,
        )?;
        per_expert.push(stats);
        local.push(events);
    }
    let sched = expert_parallel_schedule(&per_expert, hw.cores, router_phase)?;

    let mut units = Vec::with_capacity(experts);
    for (e, events) in local.into_iter().enumerate() {
        let (core, start) = sched.placements[e];
        let stats = per_expert[e].clone();
        let unit = Unit::Core(core);
        let n_e = w.expert_tokens[e] as u64;
        if n_e > 0 {
            let glb = if e % 2 == 0 {
                MemLevel::WeightGlb0
            } else {
                MemLevel::WeightGlb1
            };
            let weight_bits = (w.d_in * w.d_out * 8) as u64;
            let in_bits = n_e * (w.steps * w.d_in) as u64;
            let out_bits = n_e * (w.steps * w.d_out) as u64;
            let end = start + stats.total_cycles - 1;
            let mut ev: Vec<AccessEvent> = [
                burst(start, unit, glb, Direction::Read, weight_bits, bits),
                burst(start, unit, MemLevel::WeightLb, Direction::Write, weight_bits, bits),
                burst(start, unit, MemLevel::ActGlb, Direction::Read, in_bits, bits),
                burst(start, unit, MemLevel::ActLb, Direction::Write, in_bits, bits),
                burst(end, unit, MemLevel::ActLb, Direction::Read, out_bits, bits),
                burst(end, unit, MemLevel::ActGlb, Direction::Write, out_bits, bits),
            ]
            .into_iter()
            .flatten()
            .collect();
            ev.extend(events.into_iter().map(|x| x.shifted(start, unit)));
            traces.push(ev);
        }
        units.push(UnitTiming {
            id: e,
            core,
            start_cycle: start,
            stats,
        });
    }

    Ok(LayerTiming {
        system: sched.stats,
        routing,
        units,
        trace: merge_traces(traces),
    })
}

/// Dispatcher, head-parallel attention execution and GLB traffic for one MHA layer.
pub fn mha_layer_timing(tokens: usize, steps: usize, heads: usize, head_dim: usize, hw: &HardwareConfig) -> Result<LayerTiming> {
    hw.validate()?;
    let bits = hw.word_bits;
    let head_bits = (tokens * steps * head_dim) as u64;
    let ts = plan_attention_tiles(tokens, head_dim, steps, 1, &hw.attention_array)?;
    let (head_stats, head_events) = simulate_attention_array(&ts, bits)?;
    let per_head = vec![head_stats; heads];
    // one dispatch cycle per head unless configured
    let dispatch = hw.router_overhead_cycles.unwrap_or(heads as u64);
    let sched = expert_parallel_schedule(&per_head, hw.cores, dispatch)?;

    let mut traces = Vec::new();
    let mut units = Vec::with_capacity(heads);
    for (h, stats) in per_head.into_iter().enumerate() {
        let (core, start) = sched.placements[h];
        let unit = Unit::Core(core);
        if head_bits > 0 {
            let end = start + stats.total_cycles.max(1) - 1;
            let mut ev: Vec<AccessEvent> = [
                burst(0, Unit::Dispatcher, MemLevel::ActGlb, Direction::Read, 3 * head_bits, bits),
                burst(start, unit, MemLevel::ActLb, Direction::Write, 2 * head_bits, bits),
                burst(start, unit, MemLevel::WeightLb, Direction::Write, head_bits, bits),
                burst(end, unit, MemLevel::ActGlb, Direction::Write, head_bits, bits),
            ]
            .into_iter()
            .flatten()
            .collect();
            ev.extend(head_events.iter().map(|x| x.shifted(start, unit)));
            traces.push(ev);
        }
        units.push(UnitTiming {
            id: h,
            core,
            start_cycle: start,
            stats,
        });
    }
    Ok(LayerTiming {
        system: sched.stats,
        routing: None,
        units,
        trace: merge_traces(traces),
    })
}
