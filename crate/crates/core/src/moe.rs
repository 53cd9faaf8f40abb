//! Routed mixture-of-experts layer over spike tensors.
//!
//! Pipeline: timestep-summed integer routing scores, top-K selection, per
//! expert gather, fused integration + LIF, and an aligned scatter back to the
//! original token positions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::{lif_run, synaptic_integration, IntegrationTensor, LifParams, Matrix, QuantWeightMatrix, SpikeTensor};

/// Router weights `W_r` of shape `D_in x E`, shared across timesteps.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingWeights<F = f64> {
    w_r: QuantWeightMatrix<F>,
}

impl<F: Real> RoutingWeights<F> {
    pub fn new(w_r: QuantWeightMatrix<F>) -> Result<Self> {
        if w_r.cols() == 0 {
            return Err(Error::Config("router needs at least one expert column".into()));
        }
        Ok(Self { w_r })
    }

    pub fn experts(&self) -> usize {
        self.w_r.cols()
    }

    pub fn features(&self) -> usize {
        self.w_r.rows()
    }

    pub fn matrix(&self) -> &QuantWeightMatrix<F> {
        &self.w_r
    }
}

/// Integer expert scores, one row per token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertScores {
    pub scores: Matrix<i64>,
}

impl ExpertScores {
    pub fn tokens(&self) -> usize {
        self.scores.rows()
    }

    pub fn experts(&self) -> usize {
        self.scores.cols()
    }
}

/// One routed slot: a token's rank-th choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub expert: usize,
    pub score: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingTable {
    k: usize,
    experts: usize,
    /// Per token, `k` choices ordered by descending score.
    assignments: Vec<Vec<Assignment>>,
    /// Per expert, routed token ids in ascending order.
    expert_tokens: Vec<Vec<usize>>,
}

impl RoutingTable {
    /// Builds a table from explicit per-token expert lists.
    pub fn from_assignments(experts: usize, assignments: Vec<Vec<Assignment>>) -> Result<Self> {
        let k = assignments.first().map_or(1, Vec::len);
        if k == 0 || k > experts {
            return Err(Error::Config(format!("top-K of {k} with {experts} experts")));
        }
        let mut expert_tokens = vec![Vec::new(); experts];
        for (n, slots) in assignments.iter().enumerate() {
            if slots.len() != k {
                return Err(Error::Config(format!("token {n} has {} slots, expected {k}", slots.len())));
            }
            for (i, a) in slots.iter().enumerate() {
                if a.expert >= experts {
                    return Err(Error::Config(format!("token {n} routed to expert {} of {experts}", a.expert)));
                }
                if slots[..i].iter().any(|b| b.expert == a.expert) {
                    return Err(Error::Config(format!("token {n} routed twice to expert {}", a.expert)));
                }
                expert_tokens[a.expert].push(n);
            }
        }
        Ok(Self {
            k,
            experts,
            assignments,
            expert_tokens,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn experts(&self) -> usize {
        self.experts
    }

    pub fn tokens(&self) -> usize {
        self.assignments.len()
    }

    pub fn assignments(&self, token: usize) -> &[Assignment] {
        &self.assignments[token]
    }

    pub fn expert_tokens(&self, expert: usize) -> &[usize] {
        &self.expert_tokens[expert]
    }

    /// `N_e` for every expert.
    pub fn load(&self) -> Vec<usize> {
        self.expert_tokens.iter().map(Vec::len).collect()
    }

    /// CSV rows `token_id,rank,expert_id,score`, header first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("token_id,rank,expert_id,score\n");
        for (n, slots) in self.assignments.iter().enumerate() {
            for (rank, a) in slots.iter().enumerate() {
                out.push_str(&format!("{n},{rank},{},{}\n", a.expert, a.score));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoeLayerConfig<F = f64> {
    pub k: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub lif: LifParams,
    pub expert_weights: Vec<QuantWeightMatrix<F>>,
}

impl<F: Real> MoeLayerConfig<F> {
    pub fn new(k: usize, lif: LifParams, expert_weights: Vec<QuantWeightMatrix<F>>) -> Result<Self> {
        let first = expert_weights
            .first()
            .ok_or_else(|| Error::Config("MoE layer needs at least one expert".into()))?;
        let (d_in, d_out) = (first.rows(), first.cols());
        if let Some((e, w)) = expert_weights
            .iter()
            .enumerate()
            .find(|(_, w)| (w.rows(), w.cols()) != (d_in, d_out))
        {
            return Err(Error::Config(format!(
                "expert {e} weights are {}x{}, expert 0 is {d_in}x{d_out}",
                w.rows(),
                w.cols()
            )));
        }
        let cfg = Self {
            k,
            d_in,
            d_out,
            lif,
            expert_weights,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn experts(&self) -> usize {
        self.expert_weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.experts();
        if self.k == 0 || self.k > e {
            return Err(Error::Config(format!(
                "top-K must satisfy 1 <= K <= E, got K={} E={e}",
                self.k
            )));
        }
        if self.k > 1 {
            return Err(unsupported_k(self.k));
        }
        self.lif.validate()
    }
}

fn unsupported_k(k: usize) -> Error {
    Error::Unsupported(format!(
        "top-{k} routing: merging more than one expert output per token is not defined for binary spikes; only K=1 is supported"
    ))
}

/// `scores[n, e] = sum_t sum_d s_in[n, t, d] * w_r[d, e]`.
pub fn compute_expert_scores<F: Real>(s_in: &SpikeTensor, w_r: &RoutingWeights<F>) -> Result<ExpertScores> {
    if s_in.features() != w_r.features() {
        return Err(Error::shape(
            "compute_expert_scores",
            format!("spikes have {} features, router has {} rows", s_in.features(), w_r.features()),
        ));
    }
    let e = w_r.experts();
    let w = w_r.matrix().values();
    let mut scores = Matrix::zeros(s_in.tokens(), e);
    for n in 0..s_in.tokens() {
        for t in 0..s_in.steps() {
            for (d, _) in s_in.row(n, t).iter().enumerate().filter(|(_, &b)| b) {
                for (j, &wv) in w.row(d).iter().enumerate() {
                    scores[(n, j)] += wv as i64;
                }
            }
        }
    }
    Ok(ExpertScores { scores })
}

/// Selects the `k` highest-scoring experts per token; ties go to the lower id.
pub fn route_topk(scores: &ExpertScores, k: usize) -> Result<RoutingTable> {
    let e = scores.experts();
    if k == 0 || k > e {
        return Err(Error::Config(format!("top-K must satisfy 1 <= K <= E, got K={k} E={e}")));
    }
    let assignments = (0..scores.tokens())
        .map(|n| {
            let row = scores.scores.row(n);
            let mut chosen: Vec<Assignment> = Vec::with_capacity(k);
            for _ in 0..k {
                let best = (0..e)
                    .filter(|c| chosen.iter().all(|a| a.expert != *c))
                    .fold(None::<usize>, |best, c| match best {
                        Some(b) if row[b] >= row[c] => Some(b),
                        _ => Some(c),
                    })
                    .expect("k <= e leaves a candidate");
                chosen.push(Assignment {
                    expert: best,
                    score: row[best],
                });
            }
            chosen
        })
        .collect();
    RoutingTable::from_assignments(e, assignments)
}

/// Rows of `s_in` routed to expert `e`, original order kept.
pub fn gather_expert_tokens(s_in: &SpikeTensor, table: &RoutingTable, e: usize) -> Result<SpikeTensor> {
    if e >= table.experts() {
        return Err(Error::Config(format!("expert {e} of {}", table.experts())));
    }
    if table.tokens() != s_in.tokens() {
        return Err(Error::shape(
            "gather_expert_tokens",
            format!("table routes {} tokens, input has {}", table.tokens(), s_in.tokens()),
        ));
    }
    s_in.select_tokens(table.expert_tokens(e))
}

/// Integration stage of one expert; exposes the saturation count.
pub fn expert_integrate<F: Real>(s_e: &SpikeTensor, w_e: &QuantWeightMatrix<F>) -> Result<IntegrationTensor> {
    synaptic_integration(s_e, w_e)
}

/// Fused integration and LIF for one expert's routed tokens.
pub fn expert_forward<F: Real>(s_e: &SpikeTensor, w_e: &QuantWeightMatrix<F>, lif: &LifParams) -> Result<SpikeTensor> {
    lif_run(&expert_integrate(s_e, w_e)?, lif)
}

/// Scatters per-expert outputs back to their tokens. Only `K == 1` is defined.
pub fn merge_aligned(outputs: &[SpikeTensor], table: &RoutingTable) -> Result<SpikeTensor> {
    if table.k() != 1 {
        return Err(unsupported_k(table.k()));
    }
    if outputs.len() != table.experts() {
        return Err(Error::shape(
            "merge_aligned",
            format!("{} expert outputs for {} experts", outputs.len(), table.experts()),
        ));
    }
    let first = &outputs[0];
    let (steps, features) = (first.steps(), first.features());
    let mut out = SpikeTensor::zeros(table.tokens(), steps, features)?;
    let mut written = vec![false; table.tokens()];
    for (e, o) in outputs.iter().enumerate() {
        let ids = table.expert_tokens(e);
        if o.tokens() != ids.len() || o.steps() != steps || o.features() != features {
            return Err(Error::shape(
                "merge_aligned",
                format!("expert {e} output {:?}, table routes {} tokens", o.dims(), ids.len()),
            ));
        }
        for (i, &n) in ids.iter().enumerate() {
            debug_assert!(!written[n]);
            written[n] = true;
            for t in 0..steps {
                out.row_mut(n, t).copy_from_slice(o.row(i, t));
            }
        }
    }
    if let Some(n) = written.iter().position(|w| !w) {
        return Err(Error::shape("merge_aligned", format!("token {n} was never written")));
    }
    Ok(out)
}

/// Everything one MoE layer evaluation produced.
#[derive(Debug, Clone)]
pub struct MoeForward {
    pub output: SpikeTensor,
    pub scores: ExpertScores,
    pub table: RoutingTable,
    /// Input spike count per expert after gather.
    pub expert_spikes: Vec<u64>,
    pub saturations: u64,
}

pub fn moe_layer_forward_detailed<F: Real>(
    s_in: &SpikeTensor,
    cfg: &MoeLayerConfig<F>,
    w_r: &RoutingWeights<F>,
) -> Result<MoeForward> {
    cfg.validate()?;
    if w_r.experts() != cfg.experts() {
        return Err(Error::Config(format!(
            "router scores {} experts, layer has {}",
            w_r.experts(),
            cfg.experts()
        )));
    }
    if s_in.features() != cfg.d_in {
        return Err(Error::shape(
            "moe_layer_forward",
            format!("input has {} features, experts expect {}", s_in.features(), cfg.d_in),
        ));
    }
    let scores = compute_expert_scores(s_in, w_r)?;
    let table = route_topk(&scores, cfg.k)?;
    let per_expert = (0..cfg.experts())
        .into_par_iter()
        .map(|e| {
            let s_e = gather_expert_tokens(s_in, &table, e)?;
            let x = expert_integrate(&s_e, &cfg.expert_weights[e])?;
            Ok((s_e.count_ones(), x.saturations(), lif_run(&x, &cfg.lif)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let expert_spikes = per_expert.iter().map(|p| p.0).collect();
    let saturations = per_expert.iter().map(|p| p.1).sum();
    let outputs: Vec<SpikeTensor> = per_expert.into_iter().map(|p| p.2).collect();
    let output = merge_aligned(&outputs, &table)?;
    Ok(MoeForward {
        output,
        scores,
        table,
        expert_spikes,
        saturations,
    })
}

pub fn moe_layer_forward<F: Real>(s_in: &SpikeTensor, cfg: &MoeLayerConfig<F>, w_r: &RoutingWeights<F>) -> Result<SpikeTensor> {
    moe_layer_forward_detailed(s_in, cfg, w_r).map(|f| f.output)
}
