//! Release acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use spikemoe::dataflow::*;
use spikemoe::mem::{builtin_calibration, capacity_check, AcceleratorKind, Design, MemLevel, WorkloadShape};
use spikemoe::mha::{mha_forward, spiking_attention_map, MhaConfig};
use spikemoe::moe::{moe_layer_forward, MoeLayerConfig, RoutingWeights};
use spikemoe::report::{compare_designs, parse_workload, run_experiment, RunPlan};
use spikemoe::tensor::{
    lif_run, lif_step, IntegrationTensor, Layout, LifParams, Matrix, PotentialState, QuantWeightMatrix, SpikeTensor,
};

type Check = fn() -> Result<String, String>;

const CASES: usize = 10_000;
const ORACLE_BUDGET: Duration = Duration::from_secs(10);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn moe_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..50 {
        let n = rng.gen_range(1..=64);
        let t = rng.gen_range(1..=8);
        let d = rng.gen_range(1..=64);
        let e = [1, 4, 6][case % 3];
        let th = rng.gen_range(1..=200);
        let leak = rng.gen_range(0..=8);
        let lif = LifParams::new(th, leak, 0).unwrap();
        let w_r = QuantWeightMatrix::random(d, e, &mut rng);
        let experts: Vec<QuantWeightMatrix> = (0..e).map(|_| QuantWeightMatrix::random(d, d, &mut rng)).collect();
        let s = SpikeTensor::random(n, t, d, rng.gen_range(0.05..0.6), &mut rng).unwrap();
        let cfg = MoeLayerConfig::new(1, lif, experts.clone()).unwrap();
        let got = moe_layer_forward(&s, &cfg, &RoutingWeights::new(w_r.clone()).unwrap()).unwrap();
        let want = common::dense_moe_oracle(&s, &w_r, &experts, &lif);
        ensure(got == want, || {
            format!("config {case} (N={n} T={t} D={d} E={e}) differs from the oracle")
        })?;
    }
    let took = start.elapsed();
    ensure(took < ORACLE_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("50/50 configs bit-identical in {took:.2?}"))
}

fn mha_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xa77e);
    for case in 0..50 {
        let n = rng.gen_range(1..=32);
        let t = rng.gen_range(1..=8);
        let h = rng.gen_range(1..=4);
        let d = rng.gen_range(1..=16);
        let lif = LifParams::new(rng.gen_range(1..=60), rng.gen_range(0..=4), 0).unwrap();
        let cfg = MhaConfig::new(n, t, h * d, h, lif).unwrap();
        let p = rng.gen_range(0.1..0.7);
        let q = SpikeTensor::random(n, t, h * d, p, &mut rng).unwrap();
        let k = SpikeTensor::random(n, t, h * d, p, &mut rng).unwrap();
        let v = SpikeTensor::random(n, t, h * d, p, &mut rng).unwrap();
        let got = mha_forward(&q, &k, &v, &cfg).unwrap();
        ensure(got == common::mha_oracle(&q, &k, &v, h, &lif), || {
            format!("config {case} (N={n} T={t} H={h} d={d}) differs from the oracle")
        })?;
    }
    let took = start.elapsed();
    ensure(took < ORACLE_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("50/50 configs bit-identical in {took:.2?}"))
}

fn lif_properties() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11f);

    // binary closure: outputs pack into a stream whose padding is zero and
    // which decodes back to the same tensor
    for _ in 0..CASES {
        let (n, t, d) = (rng.gen_range(0..5), rng.gen_range(1..5), rng.gen_range(1..9));
        let x = IntegrationTensor::from_fn(n, t, d, |_, _, _| rng.gen_range(-40..40));
        let s = lif_run(&x, &LifParams::new(rng.gen_range(1..30), rng.gen_range(0..3), 0).unwrap()).unwrap();
        let bytes = s.to_bytes();
        let bits = n * t * d;
        let tail_clean = bits % 8 == 0 || bytes.last().is_some_and(|b| b >> (bits % 8) == 0);
        ensure(tail_clean && s.count_ones() <= bits as u64, || {
            "non-binary spike stream".into()
        })?;
        ensure(SpikeTensor::from_bytes(&bytes, Layout::Ntd).unwrap() == s, || {
            "stream does not decode".into()
        })?;
    }

    // hard reset
    for _ in 0..CASES {
        let (n, d) = (rng.gen_range(1..4), rng.gen_range(1..6));
        let lif = LifParams::new(rng.gen_range(1..1000), rng.gen_range(0..50), 0).unwrap();
        let v0 = Matrix::from_fn(n, d, |_, _| rng.gen_range(-2000..2000));
        let x = Matrix::from_fn(n, d, |_, _| rng.gen::<i16>());
        let (v1, s) = lif_step(&PotentialState::from_matrix(&v0), &x, &lif).unwrap();
        for i in 0..n {
            for j in 0..d {
                let raw = v0[(i, j)] as i64 + x[(i, j)] as i64 - lif.v_leak as i64;
                let fired = s.get(i, 0, j);
                ensure(fired == (raw > lif.v_threshold as i64), || {
                    format!("wrong fire decision for {raw}")
                })?;
                ensure(!fired || v1.get(i, j) == 0, || "spike without reset".into())?;
                ensure(fired || v1.get(i, j) as i64 == raw, || {
                    "potential changed without a spike".into()
                })?;
            }
        }
    }

    // monotone threshold, leak-free
    for _ in 0..CASES {
        let t = rng.gen_range(1..16);
        let x = IntegrationTensor::from_fn(1, t, 1, |_, _, _| rng.gen_range(-50..50));
        let th1 = rng.gen_range(1..40);
        let th2 = th1 + rng.gen_range(1..40);
        let c1 = lif_run(&x, &LifParams::new(th1, 0, 0).unwrap()).unwrap().count_ones();
        let c2 = lif_run(&x, &LifParams::new(th2, 0, 0).unwrap()).unwrap().count_ones();
        ensure(c2 <= c1, || format!("threshold {th2} fired {c2} > {c1} at {th1}"))?;
    }

    // leak-free integer exactness: potential is the exact sum since the last reset
    for _ in 0..CASES {
        let t = rng.gen_range(1..20);
        let lif = LifParams::<i64>::new(rng.gen_range(1..100_000), 0, 0).unwrap();
        let mut v = PotentialState::filled(1, 1, 0i64);
        let mut sum = 0i64;
        for _ in 0..t {
            let x: i16 = rng.gen();
            let (nv, s) = lif_step(&v, &Matrix::from_fn(1, 1, |_, _| x), &lif).unwrap();
            sum += x as i64;
            if s.get(0, 0, 0) {
                sum = 0;
            }
            ensure(nv.get(0, 0) == sum, || format!("potential {} != exact {sum}", nv.get(0, 0)))?;
            v = nv;
        }
    }
    Ok(format!("4 properties x {CASES} cases, 0 violations"))
}

fn attention_map_bound() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11);
    for _ in 0..CASES {
        let (n, t, d) = (rng.gen_range(1..9), rng.gen_range(1..3), rng.gen_range(1..17));
        let p = rng.gen_range(0.0..=1.0);
        let q = SpikeTensor::random(n, t, d, p, &mut rng).unwrap();
        let k = SpikeTensor::random(n, t, d, p, &mut rng).unwrap();
        let a = spiking_attention_map(&q, &k).unwrap();
        for s in 0..t {
            ensure(a.at(s).as_slice().iter().all(|&x| x as usize <= d), || {
                format!("entry above d={d}")
            })?;
        }
    }
    let hw = HardwareConfig::default();
    let mut events = 0;
    for _ in 0..50 {
        let h = rng.gen_range(1..5);
        let timing = mha_layer_timing(rng.gen_range(1..80), rng.gen_range(1..5), h, rng.gen_range(1..17), &hw).unwrap();
        ensure(timing.trace.iter().all(|e| e.level != MemLevel::AttentionRegisters), || {
            "attention map left the array".into()
        })?;
        events += timing.trace.len();
    }
    Ok(format!(
        "{CASES} maps within [0, d]; 0 of {events} trace events touch attention storage"
    ))
}

fn cycle_formulas() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc1c);
    let geom = |rng: &mut ChaCha8Rng, role| ArrayGeometry::new(rng.gen_range(1..=8), rng.gen_range(1..=8), role).unwrap();
    for i in 0..100 {
        let g = geom(&mut rng, ArrayRole::Expert);
        let ts = plan_expert_tiles(
            rng.gen_range(0..8),
            rng.gen_range(1..4),
            rng.gen_range(1..10),
            rng.gen_range(1..14),
            &g,
        )
        .unwrap();
        let timing = ExpertTiming {
            extract_ports: rng.gen_range(1..6),
            word_bits: 128,
        };
        let (stats, _) = simulate_expert_array(&ts, &SparsityStats { active_spikes: 0 }, &timing).unwrap();
        let stepped = common::stepped_stream_total(&ts, timing.extract_ports, &mut rng);
        ensure(stats.total_cycles == stepped, || {
            format!("expert schedule {i}: {} vs {stepped}", stats.total_cycles)
        })?;
    }
    for i in 0..100 {
        let g = geom(&mut rng, ArrayRole::Routing);
        let (n, t, d, e) = (
            rng.gen_range(0..20),
            rng.gen_range(1..3),
            rng.gen_range(1..6),
            rng.gen_range(1..10),
        );
        let ports = rng.gen_range(1..5);
        let (stats, _) = simulate_routing_array(n, t, d, e, &g, ports, 128).unwrap();
        let stepped = common::stepped_stream_total(&plan_routing_tiles(n, t, d, e, &g).unwrap(), ports, &mut rng);
        ensure(stats.total_cycles == stepped, || {
            format!("routing schedule {i}: {} vs {stepped}", stats.total_cycles)
        })?;
    }
    for i in 0..100 {
        let g = geom(&mut rng, ArrayRole::Attention);
        let ts = plan_attention_tiles(
            rng.gen_range(0..12),
            rng.gen_range(1..8),
            rng.gen_range(1..3),
            rng.gen_range(1..3),
            &g,
        )
        .unwrap();
        let (stats, _) = simulate_attention_array(&ts, 128).unwrap();
        let stepped = common::stepped_attention_total(&ts, &mut rng);
        ensure(stats.total_cycles == stepped, || {
            format!("attention schedule {i}: {} vs {stepped}", stats.total_cycles)
        })?;
    }
    Ok("300/300 schedules (100 per array) match the stepped model".into())
}

fn plan(doc: serde_json::Value) -> RunPlan {
    parse_workload(&doc).unwrap()
}

fn calibration_reduction() -> Result<String, String> {
    let mha = compare_designs(&plan(json!({"kind": "mha", "N": 16, "T": 2}))).map_err(|e| e.to_string())?;
    let moe =
        compare_designs(&plan(json!({"kind": "moe", "N": 16, "T": 2, "D_in": 32, "D_out": 32}))).map_err(|e| e.to_string())?;
    let targets = [
        (&mha, "memory_access_latency_ps", 30.0),
        (&moe, "memory_access_power_mw", 26.9),
        (&moe, "total_power_mw", 14.4),
        (&mha, "area_mm2", 39.2),
        (&moe, "area_mm2", 41.1),
    ];
    let mut got = Vec::new();
    for (report, metric, want) in targets {
        let r = report.reduction(metric).ok_or_else(|| format!("{metric} missing"))?;
        let kind = if std::ptr::eq(report, &mha) { "mha" } else { "moe" };
        ensure((r.reduction_pct - want).abs() <= 0.5, || {
            format!("{kind} {metric}: {:.2}% vs {want}%", r.reduction_pct)
        })?;
        got.push(format!("{kind} {metric} {:.1}%", r.reduction_pct));
    }
    ensure(mha.functional_equal && moe.functional_equal, || {
        "flavors changed the output".into()
    })?;
    Ok(got.join(", "))
}

fn capacity() -> Result<String, String> {
    for kind in ["moe", "mha"] {
        let r = run_experiment(&plan(json!({ "kind": kind }))).map_err(|e| e.to_string())?;
        ensure(r.capacity.fits, || format!("default {kind} shape overflows"))?;
    }
    let cal = builtin_calibration::<f64>(AcceleratorKind::Moe, Design::TwoD);
    let big = WorkloadShape::Moe {
        tokens: 64,
        steps: 4,
        d_in: 1024,
        d_out: 1024,
        experts: 4,
        routed: true,
        array_rows: 16,
        array_cols: 128,
    };
    let report = capacity_check(&big, &cal);
    let over: Vec<String> = report.overflows().map(|e| e.level.to_string()).collect();
    ensure(!report.fits && over.iter().any(|l| l == "weight_lb"), || {
        format!("oversized verdict {over:?}")
    })?;
    Ok(format!("defaults fit; D=1024 overflows {}", over.join(", ")))
}

fn determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("moe.toml");
    std::fs::write(
        &cfg,
        "kind = \"moe\"\nseed = 1\n[model]\nN = 16\nT = 4\nD_in = 32\nD_out = 32\nE = 4\nK = 1\n",
    )
    .unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_spikemoe"))
            .arg("run")
            .arg(&cfg)
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    ensure(a.status.success() && a.stdout == b.stdout && !a.stdout.is_empty(), || {
        "run reports differ".into()
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xd37);
    let mut plans = 0;
    for _ in 0..6 {
        for doc in [
            json!({"kind": "moe", "N": rng.gen_range(1..40), "T": rng.gen_range(1..5), "D_in": 24, "D_out": 16, "E": 6, "seed": rng.gen::<u32>()}),
            json!({"kind": "mha", "N": rng.gen_range(1..40), "T": rng.gen_range(1..5), "H": 2, "d": 8, "seed": rng.gen::<u32>()}),
        ] {
            let c = compare_designs(&plan(doc)).map_err(|e| e.to_string())?;
            ensure(c.functional_equal && c.two_d.output_digest == c.three_d.output_digest, || {
                "2D/3D digests differ".into()
            })?;
            plans += 1;
        }
    }
    Ok(format!(
        "{} report bytes identical across runs; {plans} plans with equal 2D/3D digests",
        a.stdout.len()
    ))
}

fn main() {
    let checks: &[(&str, Check)] = &[
        ("moe_functional_oracle", moe_oracle),
        ("mha_functional_oracle", mha_oracle),
        ("lif_properties", lif_properties),
        ("attention_map_bound", attention_map_bound),
        ("cycle_formula_vs_stepped", cycle_formulas),
        ("calibration_reductions", calibration_reduction),
        ("capacity_arithmetic", capacity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
