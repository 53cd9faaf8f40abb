use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::plan::{CalibrationSource, ModelShape, RunPlan};
use crate::dataflow::{mha_layer_timing, moe_layer_timing, LayerTiming, MoeWorkload};
use crate::error::{Error, Result};
use crate::mem::{
    builtin_calibration, capacity_check, count_accesses, mem_report, AccessEvent, CapacityReport, Design, MemCalibration,
    MemReport, WorkloadShape,
};
use crate::mha::{attention_weighted_integration, partition_heads, spiking_attention_map, MhaConfig};
use crate::moe::{expert_integrate, moe_layer_forward_detailed, MoeLayerConfig, RoutingTable, RoutingWeights};
use crate::tensor::{lif_run, QuantWeightMatrix, SpikeTensor};

pub const RUN_SCHEMA: &str = "spikemoe.run/1";
pub const COMPARE_SCHEMA: &str = "spikemoe.compare/1";

// Generator streams. Inputs draw from the input seed, weights from the plan seed.
const STREAM_INPUT: u64 = 0;
const STREAM_ROUTER: u64 = 1;
const STREAM_EXPERT0: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalStats {
    pub input_spikes: u64,
    pub output_spikes: u64,
    pub output_bits: u64,
    pub saturations: u64,
    /// Tokens routed to each expert (MoE and dense layers only).
    pub expert_tokens: Vec<usize>,
    pub expert_spikes: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema: String,
    pub config: RunPlan,
    /// SHA-256 of the packed output spike stream.
    pub output_digest: String,
    pub functional: FunctionalStats,
    pub timing: LayerTiming,
    pub memory: MemReport<f64>,
    pub capacity: CapacityReport,
}

/// A finished run plus the artifacts that are not part of the report.
#[derive(Debug, Clone)]
pub struct Run {
    pub result: RunResult,
    pub trace: Vec<AccessEvent>,
    pub routing: Option<RoutingTable>,
    pub output: SpikeTensor,
    pub calibration: MemCalibration<f64>,
}

pub fn resolve_calibration(plan: &RunPlan) -> Result<MemCalibration<f64>> {
    let kind = plan.model.accelerator();
    match &plan.calibration {
        CalibrationSource::Builtin2d => Ok(builtin_calibration(kind, Design::TwoD)),
        CalibrationSource::Builtin3d => Ok(builtin_calibration(kind, Design::ThreeD)),
        CalibrationSource::File { path } => {
            let cal = MemCalibration::<f64>::load(path)?;
            if cal.kind != kind {
                return Err(Error::Config(format!(
                    "{}: calibration is for the {} accelerator, workload needs {kind}",
                    path.display(),
                    cal.kind
                )));
            }
            Ok(cal)
        }
    }
}

struct Functional {
    output: SpikeTensor,
    stats: FunctionalStats,
    routing: Option<RoutingTable>,
}

fn run_functional(plan: &RunPlan) -> Result<Functional> {
    let p = plan.input.spike_prob;
    let mut input = rng(plan.input.seed, STREAM_INPUT);
    match plan.model {
        ModelShape::Moe {
            tokens,
            steps,
            d_in,
            d_out,
            experts,
            k,
        } => {
            let s_in = SpikeTensor::random(tokens, steps, d_in, p, &mut input)?;
            let w_r = RoutingWeights::new(QuantWeightMatrix::<f64>::random(
                d_in,
                experts,
                &mut rng(plan.seed, STREAM_ROUTER),
            ))?;
            let weights = (0..experts)
                .map(|e| QuantWeightMatrix::random(d_in, d_out, &mut rng(plan.seed, STREAM_EXPERT0 + e as u64)))
                .collect();
            let cfg = MoeLayerConfig::new(k, plan.lif, weights)?;
            let f = moe_layer_forward_detailed(&s_in, &cfg, &w_r)?;
            Ok(Functional {
                stats: FunctionalStats {
                    input_spikes: s_in.count_ones(),
                    output_spikes: f.output.count_ones(),
                    output_bits: f.output.as_bits().len() as u64,
                    saturations: f.saturations,
                    expert_tokens: f.table.load(),
                    expert_spikes: f.expert_spikes,
                },
                output: f.output,
                routing: Some(f.table),
            })
        }
        ModelShape::Mlp {
            tokens,
            steps,
            d_in,
            d_out,
        } => {
            // same weight stream as expert 0 so a one-expert MoE matches
            let s_in = SpikeTensor::random(tokens, steps, d_in, p, &mut input)?;
            let w = QuantWeightMatrix::<f64>::random(d_in, d_out, &mut rng(plan.seed, STREAM_EXPERT0));
            let x = expert_integrate(&s_in, &w)?;
            let output = lif_run(&x, &plan.lif)?;
            Ok(Functional {
                stats: FunctionalStats {
                    input_spikes: s_in.count_ones(),
                    output_spikes: output.count_ones(),
                    output_bits: output.as_bits().len() as u64,
                    saturations: x.saturations(),
                    expert_tokens: vec![tokens],
                    expert_spikes: vec![s_in.count_ones()],
                },
                output,
                routing: None,
            })
        }
        ModelShape::Mha {
            tokens,
            steps,
            heads,
            head_dim,
        } => {
            let d = heads * head_dim;
            let cfg = MhaConfig::new(tokens, steps, d, heads, plan.lif)?;
            let draw = |stream| SpikeTensor::random(tokens, steps, d, p, &mut rng(plan.input.seed, stream));
            let (q, k, v) = (draw(0)?, draw(1)?, draw(2)?);
            let mut saturations = 0;
            let mut outs = Vec::with_capacity(heads);
            for h in partition_heads(&q, &k, &v, &cfg)? {
                let x = attention_weighted_integration(&spiking_attention_map(&h.q, &h.k)?, &h.v)?;
                saturations += x.saturations();
                outs.push(lif_run(&x, &cfg.lif)?);
            }
            let output = SpikeTensor::concat_features(&outs)?;
            Ok(Functional {
                stats: FunctionalStats {
                    input_spikes: q.count_ones() + k.count_ones() + v.count_ones(),
                    output_spikes: output.count_ones(),
                    output_bits: output.as_bits().len() as u64,
                    saturations,
                    expert_tokens: Vec::new(),
                    expert_spikes: Vec::new(),
                },
                output,
                routing: None,
            })
        }
    }
}

fn run_timing(plan: &RunPlan, f: &Functional) -> Result<(LayerTiming, WorkloadShape)> {
    let hw = &plan.hardware;
    let (tokens, steps, d_in, d_out, experts, routed) = match plan.model {
        ModelShape::Mha {
            tokens,
            steps,
            heads,
            head_dim,
        } => {
            let timing = mha_layer_timing(tokens, steps, heads, head_dim, hw)?;
            let shape = WorkloadShape::Mha {
                tokens,
                steps,
                heads,
                head_dim,
                array_rows: hw.attention_array.rows,
                array_cols: hw.attention_array.cols,
            };
            return Ok((timing, shape));
        }
        ModelShape::Moe {
            tokens,
            steps,
            d_in,
            d_out,
            experts,
            ..
        } => (tokens, steps, d_in, d_out, experts, true),
        ModelShape::Mlp {
            tokens,
            steps,
            d_in,
            d_out,
        } => (tokens, steps, d_in, d_out, 1, false),
    };
    let work = MoeWorkload {
        tokens,
        steps,
        d_in,
        d_out,
        expert_tokens: f.stats.expert_tokens.clone(),
        expert_spikes: f.stats.expert_spikes.clone(),
        routed,
    };
    let shape = WorkloadShape::Moe {
        tokens,
        steps,
        d_in,
        d_out,
        experts,
        routed,
        array_rows: hw.expert_array.rows,
        array_cols: hw.expert_array.cols,
    };
    Ok((moe_layer_timing(&work, hw)?, shape))
}

/// Runs the functional pipeline, the timing model and the memory model.
pub fn execute(plan: &RunPlan) -> Result<Run> {
    let calibration = resolve_calibration(plan)?;
    let f = run_functional(plan)?;
    let (mut timing, shape) = run_timing(plan, &f)?;
    let trace = std::mem::take(&mut timing.trace);
    let counts = count_accesses(&trace, &calibration)?;
    let result = RunResult {
        schema: RUN_SCHEMA.to_string(),
        config: plan.clone(),
        output_digest: f.output.digest(),
        functional: f.stats,
        timing,
        memory: mem_report(&counts, &calibration),
        capacity: capacity_check(&shape, &calibration),
    };
    Ok(Run {
        result,
        trace,
        routing: f.routing,
        output: f.output,
        calibration,
    })
}

pub fn run_experiment(plan: &RunPlan) -> Result<RunResult> {
    execute(plan).map(|r| r.result)
}

/// One compared metric; `reduction_pct` is `(2D - 3D) / 2D * 100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub metric: String,
    pub two_d: f64,
    pub three_d: f64,
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema: String,
    /// Both flavors produced the same output spikes.
    pub functional_equal: bool,
    /// Both flavors produced the same cycle counts.
    pub timing_equal: bool,
    pub reductions: Vec<Reduction>,
    pub two_d: RunResult,
    pub three_d: RunResult,
}

impl ComparisonReport {
    pub fn reduction(&self, metric: &str) -> Option<&Reduction> {
        self.reductions.iter().find(|r| r.metric == metric)
    }
}

fn reduction(metric: &str, two_d: f64, three_d: f64) -> Reduction {
    Reduction {
        metric: metric.to_string(),
        two_d,
        three_d,
        reduction_pct: if two_d == 0.0 {
            0.0
        } else {
            (two_d - three_d) / two_d * 100.0
        },
    }
}

/// Runs a plan under both built-in calibrations; any pinned calibration is ignored.
pub fn compare_designs(plan: &RunPlan) -> Result<ComparisonReport> {
    Ok(compare_runs(&execute_pair(plan)?))
}

pub fn execute_pair(plan: &RunPlan) -> Result<(Run, Run)> {
    let a = execute(&plan.clone().with_calibration(CalibrationSource::Builtin2d))?;
    let b = execute(&plan.clone().with_calibration(CalibrationSource::Builtin3d))?;
    Ok((a, b))
}

pub fn compare_runs((a, b): &(Run, Run)) -> ComparisonReport {
    let (x, y) = (&a.result.memory.calibrated, &b.result.memory.calibrated);
    let reductions = vec![
        reduction(
            "memory_access_latency_ps",
            x.memory_access_latency_ps,
            y.memory_access_latency_ps,
        ),
        reduction("memory_access_power_mw", x.memory_access_power_mw, y.memory_access_power_mw),
        reduction("total_power_mw", x.total_power_mw, y.total_power_mw),
        reduction("area_mm2", x.area_mm2, y.area_mm2),
        reduction("internal_power_mw", x.internal_power_mw, y.internal_power_mw),
        reduction("switching_power_mw", x.switching_power_mw, y.switching_power_mw),
        reduction("leakage_power_mw", x.leakage_power_mw, y.leakage_power_mw),
        reduction(
            "effective_frequency_ghz",
            x.effective_frequency_ghz,
            y.effective_frequency_ghz,
        ),
        reduction("cell_count", x.cell_count as f64, y.cell_count as f64),
        reduction(
            "trace_energy_fj",
            a.result.memory.trace_energy_fj,
            b.result.memory.trace_energy_fj,
        ),
    ];
    ComparisonReport {
        schema: COMPARE_SCHEMA.to_string(),
        functional_equal: a.result.output_digest == b.result.output_digest,
        timing_equal: a.result.timing == b.result.timing,
        reductions,
        two_d: a.result.clone(),
        three_d: b.result.clone(),
    }
}
