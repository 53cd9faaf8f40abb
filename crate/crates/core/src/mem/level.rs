use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Storage levels of the accelerator memory hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemLevel {
    ActGlb,
    WeightGlb0,
    WeightGlb1,
    ActLb,
    WeightLb,
    ActBuffer,
    WeightBuffer,
    /// Attention-map registers inside the reconfigurable array. Not a
    /// calibrated SRAM; traces must never touch it.
    AttentionRegisters,
}

impl MemLevel {
    pub const CALIBRATED: [MemLevel; 7] = [
        MemLevel::ActGlb,
        MemLevel::WeightGlb0,
        MemLevel::WeightGlb1,
        MemLevel::ActLb,
        MemLevel::WeightLb,
        MemLevel::ActBuffer,
        MemLevel::WeightBuffer,
    ];

    pub fn id(self) -> &'static str {
        match self {
            MemLevel::ActGlb => "act_glb",
            MemLevel::WeightGlb0 => "weight_glb0",
            MemLevel::WeightGlb1 => "weight_glb1",
            MemLevel::ActLb => "act_lb",
            MemLevel::WeightLb => "weight_lb",
            MemLevel::ActBuffer => "act_buffer",
            MemLevel::WeightBuffer => "weight_buffer",
            MemLevel::AttentionRegisters => "attention_registers",
        }
    }
}

impl fmt::Display for MemLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MemLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        MemLevel::CALIBRATED
            .into_iter()
            .chain([MemLevel::AttentionRegisters])
            .find(|l| l.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown memory level `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Read,
    Write,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Read => "read",
            Direction::Write => "write",
        })
    }
}

/// Which accelerator a calibration belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcceleratorKind {
    Moe,
    Mha,
}

impl AcceleratorKind {
    /// Levels an accelerator of this kind exposes. MHA has no weight GLBs.
    pub fn levels(self) -> &'static [MemLevel] {
        match self {
            AcceleratorKind::Moe => &MemLevel::CALIBRATED,
            AcceleratorKind::Mha => &[
                MemLevel::ActGlb,
                MemLevel::ActLb,
                MemLevel::WeightLb,
                MemLevel::ActBuffer,
                MemLevel::WeightBuffer,
            ],
        }
    }
}

impl fmt::Display for AcceleratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AcceleratorKind::Moe => "moe",
            AcceleratorKind::Mha => "mha",
        })
    }
}

/// Integration flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Design {
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    ThreeD,
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::TwoD => "2d",
            Design::ThreeD => "3d",
        })
    }
}
