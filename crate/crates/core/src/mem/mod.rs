//! Memory hierarchy: levels, per-design calibration, trace tallies,
//! capacity checks and energy proxies.

mod calibration;
mod capacity;
mod counting;
mod level;
mod report;
mod trace;

pub(crate) use calibration::is_json;
pub use calibration::{builtin_calibration, reference_wirelength, Aggregate, MemCalibration, MemLevelSpec, WirelengthReference};
pub use capacity::{capacity_check, CapacityEntry, CapacityReport, WorkloadShape};
pub use counting::{count_accesses, AccessCounts, LevelCounts};
pub use level::{AcceleratorKind, Design, Direction, MemLevel};
pub use report::{mem_report, LevelReport, MemReport};
pub use trace::{merge_traces, trace_to_csv, AccessEvent, Unit};
