//! Cycle-level timing of the expert, routing and attention arrays.
//!
//! Timing is dense: arrays stream every operand whether or not it is a
//! spike, so sparsity only changes operation counts. Nothing here touches
//! functional values.

mod attention;
mod expert;
mod routing;
mod schedule;
mod types;

pub use attention::{map_pass_cycles, plan_attention_tiles, simulate_attention_array, value_pass_cycles};
pub use expert::{extraction_cycles, plan_expert_tiles, simulate_expert_array, systolic_cycles, ExpertTiming, SparsityStats};
pub use routing::{plan_routing_tiles, simulate_routing_array};
pub use schedule::{
    expert_parallel_schedule, mha_layer_timing, moe_layer_timing, HardwareConfig, LayerTiming, MoeWorkload, ParallelSchedule,
    UnitTiming,
};
pub use types::{ArrayGeometry, ArrayRole, CycleStats, Phase, Tile, TileSchedule};
