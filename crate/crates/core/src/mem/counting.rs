use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AccessEvent, Direction, MemCalibration, MemLevel};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub read_events: u64,
    pub write_events: u64,
    pub read_words: u64,
    pub write_words: u64,
}

impl LevelCounts {
    pub fn words(&self) -> u64 {
        self.read_words + self.write_words
    }

    pub fn events(&self) -> u64 {
        self.read_events + self.write_events
    }
}

/// Per-level tallies; every calibrated level appears, zero or not.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessCounts {
    pub levels: BTreeMap<MemLevel, LevelCounts>,
}

impl AccessCounts {
    pub fn get(&self, level: MemLevel) -> LevelCounts {
        self.levels.get(&level).copied().unwrap_or_default()
    }

    pub fn total_words(&self) -> u64 {
        self.levels.values().map(LevelCounts::words).sum()
    }

    pub fn total_events(&self) -> u64 {
        self.levels.values().map(LevelCounts::events).sum()
    }

    pub fn merge(&mut self, other: &AccessCounts) {
        for (&l, c) in &other.levels {
            let e = self.levels.entry(l).or_default();
            e.read_events += c.read_events;
            e.write_events += c.write_events;
            e.read_words += c.read_words;
            e.write_words += c.write_words;
        }
    }
}

/// Tallies a trace by `(level, direction)`. Events on levels the calibration
/// does not define are rejected.
pub fn count_accesses<F: Real>(trace: &[AccessEvent], cal: &MemCalibration<F>) -> Result<AccessCounts> {
    let mut counts = AccessCounts {
        levels: cal.levels.iter().map(|l| (l.id, LevelCounts::default())).collect(),
    };
    for (index, ev) in trace.iter().enumerate() {
        let c = counts.levels.get_mut(&ev.level).ok_or_else(|| Error::UnknownLevel {
            index,
            level: ev.level.to_string(),
            kind: cal.kind.to_string(),
        })?;
        match ev.direction {
            Direction::Read => {
                c.read_events += 1;
                c.read_words += ev.words;
            }
            Direction::Write => {
                c.write_events += 1;
                c.write_words += ev.words;
            }
        }
    }
    Ok(counts)
}
