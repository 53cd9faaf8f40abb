use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AcceleratorKind, Design, MemLevel};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Capacity, width and calibrated access cost of one SRAM level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct MemLevelSpec<F = f64> {
    pub id: MemLevel,
    pub words: u64,
    pub width_bits: u32,
    pub latency_ps: F,
    pub power_mw: F,
}

impl<F: Real> MemLevelSpec<F> {
    pub fn capacity_bits(&self) -> u64 {
        self.words * self.width_bits as u64
    }

    /// `power x latency`; mW times ps is exactly fJ.
    pub fn energy_per_access_fj(&self) -> F {
        self.power_mw * self.latency_ps
    }
}

/// Whole-accelerator figures carried through from post-layout results.
/// Only the memory and area rows take part in comparisons; the rest are echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct Aggregate<F = f64> {
    pub memory_access_latency_ps: F,
    pub memory_access_power_mw: F,
    pub total_power_mw: F,
    pub area_mm2: F,
    pub effective_frequency_ghz: F,
    pub internal_power_mw: F,
    pub switching_power_mw: F,
    pub leakage_power_mw: F,
    pub cell_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct MemCalibration<F = f64> {
    pub kind: AcceleratorKind,
    pub design: Design,
    pub levels: Vec<MemLevelSpec<F>>,
    pub aggregate: Aggregate<F>,
}

/// Total routed wirelength in metres, reference metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct WirelengthReference<F = f64> {
    pub single_expert_m: F,
    pub four_expert_system_m: F,
}

const GLB_WORDS: u64 = 8 * 1024;
const LB_WORDS: u64 = 3 * 1024;
const BUFFER_WORDS: u64 = 96;
const SRAM_WIDTH: u32 = 128;

fn capacity(level: MemLevel) -> u64 {
    match level {
        MemLevel::ActGlb | MemLevel::WeightGlb0 | MemLevel::WeightGlb1 => GLB_WORDS,
        MemLevel::ActLb | MemLevel::WeightLb => LB_WORDS,
        MemLevel::ActBuffer | MemLevel::WeightBuffer => BUFFER_WORDS,
        MemLevel::AttentionRegisters => 0,
    }
}

/// `(latency ps, power mW)` per level, in the kind's level order.
fn level_table(kind: AcceleratorKind, design: Design) -> &'static [(f64, f64)] {
    use AcceleratorKind::*;
    use Design::*;
    match (kind, design) {
        // act glb, act lb, weight lb, act buffer, weight buffer
        (Mha, TwoD) => &[(220.0, 10.9), (24.0, 1.13), (82.0, 0.46), (40.0, 1.92), (28.0, 1.01)],
        (Mha, ThreeD) => &[(209.0, 7.56), (16.0, 0.76), (26.0, 0.1), (16.0, 0.52), (26.0, 0.17)],
        // act glb, weight glb0, weight glb1, act lb, weight lb, act buffer, weight buffer
        (Moe, TwoD) => &[
            (148.0, 2.36),
            (241.0, 3.87),
            (147.0, 4.05),
            (68.0, 1.1),
            (77.0, 0.47),
            (40.0, 1.66),
            (77.0, 1.50),
        ],
        (Moe, ThreeD) => &[
            (117.0, 1.84),
            (94.0, 2.03),
            (71.0, 2.01),
            (19.0, 0.77),
            (18.0, 0.09),
            (19.0, 0.27),
            (18.0, 0.39),
        ],
    }
}

fn aggregate_table(kind: AcceleratorKind, design: Design) -> Aggregate<f64> {
    use AcceleratorKind::*;
    use Design::*;
    // freq, area, cells, internal, switching, leakage, total, mem latency, mem power
    let (f, a, c, pi, ps, pl, pt, ml, mp) = match (kind, design) {
        (Mha, TwoD) => (2.13, 5.53, 169_046, 863.0, 30.0, 19.0, 912.0, 160.0, 6.23),
        (Mha, ThreeD) => (2.24, 3.36, 167_983, 859.0, 18.0, 18.0, 896.0, 112.0, 4.41),
        (Moe, TwoD) => (1.69, 2.97, 339_846, 6777.0, 67.0, 144.0, 6989.0, 202.0, 7.11),
        (Moe, ThreeD) => (1.74, 1.75, 339_693, 5716.0, 116.0, 111.0, 5983.0, 172.0, 5.2),
    };
    Aggregate {
        memory_access_latency_ps: ml,
        memory_access_power_mw: mp,
        total_power_mw: pt,
        area_mm2: a,
        effective_frequency_ghz: f,
        internal_power_mw: pi,
        switching_power_mw: ps,
        leakage_power_mw: pl,
        cell_count: c,
    }
}

/// Built-in calibration for the four-core accelerators.
pub fn builtin_calibration<F: Real>(kind: AcceleratorKind, design: Design) -> MemCalibration<F> {
    let levels = kind
        .levels()
        .iter()
        .zip(level_table(kind, design))
        .map(|(&id, &(lat, pow))| MemLevelSpec {
            id,
            words: capacity(id),
            width_bits: SRAM_WIDTH,
            latency_ps: F::lit(lat),
            power_mw: F::lit(pow),
        })
        .collect();
    let a = aggregate_table(kind, design);
    MemCalibration {
        kind,
        design,
        levels,
        aggregate: Aggregate {
            memory_access_latency_ps: F::lit(a.memory_access_latency_ps),
            memory_access_power_mw: F::lit(a.memory_access_power_mw),
            total_power_mw: F::lit(a.total_power_mw),
            area_mm2: F::lit(a.area_mm2),
            effective_frequency_ghz: F::lit(a.effective_frequency_ghz),
            internal_power_mw: F::lit(a.internal_power_mw),
            switching_power_mw: F::lit(a.switching_power_mw),
            leakage_power_mw: F::lit(a.leakage_power_mw),
            cell_count: a.cell_count,
        },
    }
}

pub fn reference_wirelength<F: Real>(kind: AcceleratorKind, design: Design) -> WirelengthReference<F> {
    let (single, system) = match (kind, design) {
        (AcceleratorKind::Mha, Design::TwoD) => (0.621, 3.654),
        (AcceleratorKind::Mha, Design::ThreeD) => (0.616, 3.290),
        (AcceleratorKind::Moe, Design::TwoD) => (2.178, 11.352),
        (AcceleratorKind::Moe, Design::ThreeD) => (1.959, 9.816),
    };
    WirelengthReference {
        single_expert_m: F::lit(single),
        four_expert_system_m: F::lit(system),
    }
}

impl<F: Real> MemCalibration<F> {
    pub fn level(&self, id: MemLevel) -> Option<&MemLevelSpec<F>> {
        self.levels.iter().find(|l| l.id == id)
    }

    pub fn width_of(&self, id: MemLevel) -> u32 {
        self.level(id).map_or(SRAM_WIDTH, |l| l.width_bits)
    }

    /// Checks the level set matches the accelerator kind and every constant is sane.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let want: BTreeSet<MemLevel> = self.kind.levels().iter().copied().collect();
        let mut seen = BTreeSet::new();
        for l in &self.levels {
            if !seen.insert(l.id) {
                problems.push(format!("level {} listed twice", l.id));
            }
            if !want.contains(&l.id) {
                problems.push(format!("level {} does not exist on the {} accelerator", l.id, self.kind));
            }
            if l.words == 0 || l.width_bits == 0 {
                problems.push(format!("level {} has zero capacity", l.id));
            }
            if !(l.latency_ps.is_finite() && l.latency_ps > F::zero()) {
                problems.push(format!("level {} latency must be > 0", l.id));
            }
            if !(l.power_mw.is_finite() && l.power_mw >= F::zero()) {
                problems.push(format!("level {} power must be >= 0", l.id));
            }
        }
        for missing in want.difference(&seen) {
            problems.push(format!("level {missing} missing"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("calibration: {}", problems.join("; "))))
        }
    }

    /// Loads a calibration document; `.json` is JSON, anything else TOML.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cal: Self = if is_json(path) {
            serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.into(),
                message: e.to_string(),
            })?
        } else {
            toml::from_str(&text).map_err(|e| Error::Format {
                path: path.into(),
                message: e.to_string(),
            })?
        };
        cal.validate()?;
        Ok(cal)
    }

    pub fn to_document(&self, json: bool) -> String {
        if json {
            serde_json::to_string_pretty(self).expect("calibration serializes") + "\n"
        } else {
            toml::to_string(self).expect("calibration serializes")
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_document(is_json(path))).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
