use serde::{Deserialize, Serialize};

use super::{AcceleratorKind, AccessCounts, Aggregate, Design, MemCalibration, MemLevel};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct LevelReport<F = f64> {
    pub level: MemLevel,
    pub read_events: u64,
    pub write_events: u64,
    pub read_words: u64,
    pub write_words: u64,
    pub latency_ps: F,
    pub power_mw: F,
    /// Model-derived: power times latency.
    pub energy_per_access_fj: F,
    /// Model-derived: word accesses times per-access energy.
    pub energy_fj: F,
}

/// Trace-weighted memory figures next to the echoed calibration aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct MemReport<F = f64> {
    pub kind: AcceleratorKind,
    pub design: Design,
    pub levels: Vec<LevelReport<F>>,
    pub total_words: u64,
    pub trace_energy_fj: F,
    pub calibrated: Aggregate<F>,
}

pub fn mem_report<F: Real>(counts: &AccessCounts, cal: &MemCalibration<F>) -> MemReport<F> {
    let levels: Vec<LevelReport<F>> = cal
        .levels
        .iter()
        .map(|spec| {
            let c = counts.get(spec.id);
            let per = spec.energy_per_access_fj();
            LevelReport {
                level: spec.id,
                read_events: c.read_events,
                write_events: c.write_events,
                read_words: c.read_words,
                write_words: c.write_words,
                latency_ps: spec.latency_ps,
                power_mw: spec.power_mw,
                energy_per_access_fj: per,
                energy_fj: per * F::from_u64(c.words()).expect("count fits in float"),
            }
        })
        .collect();
    MemReport {
        kind: cal.kind,
        design: cal.design,
        total_words: levels.iter().map(|l| l.read_words + l.write_words).sum(),
        trace_energy_fj: levels.iter().fold(F::zero(), |acc, l| acc + l.energy_fj),
        levels,
        calibrated: cal.aggregate.clone(),
    }
}
