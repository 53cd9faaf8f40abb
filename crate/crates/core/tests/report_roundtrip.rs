use serde_json::{json, Value};
use spikemoe::mem::{builtin_calibration, mem_report, AccessCounts, AcceleratorKind, Design};
use spikemoe::report::{compare_designs, csv_to_json, parse_workload, render_report, run_experiment, ReportFormat, RunResult};

#[test]
fn run_report_survives_csv() {
    let plan = parse_workload(&json!({"kind": "moe", "N": 12, "T": 3, "D_in": 16, "D_out": 24, "E": 6, "seed": 4})).unwrap();
    let result = run_experiment(&plan).unwrap();
    let as_json: Value = serde_json::from_str(&render_report(&result, ReportFormat::Json)).unwrap();
    let from_csv = csv_to_json(&render_report(&result, ReportFormat::Csv)).unwrap();
    assert_eq!(from_csv, as_json);
    let back: RunResult = serde_json::from_value(from_csv).unwrap();
    assert_eq!(back, result);
}

#[test]
fn csv_has_one_row_per_level_metric() {
    let plan = parse_workload(&json!({"kind": "mha", "N": 8, "T": 1, "H": 2, "d": 4})).unwrap();
    let csv = render_report(&run_experiment(&plan).unwrap(), ReportFormat::Csv);
    let rows = csv.lines().filter(|l| l.starts_with("memory.levels[") && l.contains(".energy_fj,")).count();
    assert_eq!(rows, AcceleratorKind::Mha.levels().len());
}

#[test]
fn empty_counts_give_a_valid_document() {
    let cal = builtin_calibration::<f64>(AcceleratorKind::Moe, Design::ThreeD);
    let report = mem_report(&AccessCounts::default(), &cal);
    let v = csv_to_json(&render_report(&report, ReportFormat::Csv)).unwrap();
    assert_eq!(v["total_words"], 0);
    assert!(v["levels"].as_array().unwrap().iter().all(|l| l["read_words"] == 0 && l["energy_fj"] == 0.0));
}

#[test]
fn comparison_carries_every_aggregate() {
    let plan = parse_workload(&json!({"kind": "moe", "N": 8, "T": 2, "D_in": 16, "D_out": 16})).unwrap();
    let v: Value = serde_json::to_value(compare_designs(&plan).unwrap()).unwrap();
    let fields = [
        "memory_access_latency_ps",
        "memory_access_power_mw",
        "total_power_mw",
        "area_mm2",
        "effective_frequency_ghz",
        "internal_power_mw",
        "switching_power_mw",
        "leakage_power_mw",
        "cell_count",
    ];
    for flavor in ["two_d", "three_d"] {
        for f in fields {
            assert!(v[flavor]["memory"]["calibrated"][f].is_number(), "{flavor}.{f}");
        }
    }
    let metrics: Vec<&str> = v["reductions"].as_array().unwrap().iter().map(|r| r["metric"].as_str().unwrap()).collect();
    for f in fields {
        assert!(metrics.contains(&f), "{f}");
    }
}
