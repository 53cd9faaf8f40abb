use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Direction, MemLevel};

/// Hardware block that issued a memory access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Router,
    Dispatcher,
    Core(usize),
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::Router => f.write_str("router"),
            Unit::Dispatcher => f.write_str("dispatcher"),
            Unit::Core(i) => write!(f, "core{i}"),
        }
    }
}

/// One burst access: `words` words of `width_bits` each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessEvent {
    pub cycle: u64,
    pub unit: Unit,
    pub level: MemLevel,
    pub direction: Direction,
    pub words: u64,
    pub width_bits: u32,
}

impl AccessEvent {
    /// Burst covering `payload_bits` at the level's native word width (at least one word).
    pub fn burst(cycle: u64, unit: Unit, level: MemLevel, direction: Direction, payload_bits: u64, width_bits: u32) -> Self {
        Self {
            cycle,
            unit,
            level,
            direction,
            words: payload_bits.div_ceil(width_bits as u64).max(1),
            width_bits,
        }
    }

    pub fn shifted(mut self, offset: u64, unit: Unit) -> Self {
        self.cycle += offset;
        self.unit = unit;
        self
    }
}

/// Stable merge of several traces ordered by `(cycle, unit)`.
pub fn merge_traces(traces: impl IntoIterator<Item = Vec<AccessEvent>>) -> Vec<AccessEvent> {
    let mut all: Vec<AccessEvent> = traces.into_iter().flatten().collect();
    all.sort_by_key(|e| (e.cycle, e.unit));
    all
}

/// CSV with header `cycle,unit,level,direction,words,width_bits`.
pub fn trace_to_csv(trace: &[AccessEvent]) -> String {
    let mut out = String::from("cycle,unit,level,direction,words,width_bits\n");
    for e in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.cycle, e.unit, e.level, e.direction, e.words, e.width_bits
        ));
    }
    out
}
