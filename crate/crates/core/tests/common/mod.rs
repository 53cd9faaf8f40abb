//! Reference implementations shared by the integration tests. They use plain
//! nested loops and scalar state, nothing from the library's internals.
#![allow(dead_code)]

use rand::Rng;
use spikemoe::dataflow::{Phase, TileSchedule};
use spikemoe::tensor::{LifParams, QuantWeightMatrix, SpikeTensor};

pub fn clamp16(v: i64) -> i64 {
    v.clamp(i16::MIN as i64, i16::MAX as i64)
}

/// One neuron over a trace of inputs; returns its spikes.
pub fn lif_neuron(inputs: &[i64], th: i64, leak: i64, v0: i64) -> Vec<bool> {
    let mut v = v0;
    inputs
        .iter()
        .map(|&x| {
            v = v + x - leak;
            if v > th {
                v = 0;
                true
            } else {
                false
            }
        })
        .collect()
}

fn lif_params(p: &LifParams) -> (i64, i64, i64) {
    (p.v_threshold as i64, p.v_leak as i64, p.initial_potential as i64)
}

/// Route each token on its own, apply its chosen expert and fire.
pub fn dense_moe_oracle(s: &SpikeTensor, w_r: &QuantWeightMatrix, experts: &[QuantWeightMatrix], lif: &LifParams) -> SpikeTensor {
    let (n_tok, steps, d_in) = s.dims();
    let d_out = experts[0].cols();
    let (th, leak, v0) = lif_params(lif);
    let mut out = SpikeTensor::zeros(n_tok, steps, d_out).unwrap();
    for n in 0..n_tok {
        let mut best = (i64::MIN, 0usize);
        for e in 0..w_r.cols() {
            let mut score = 0i64;
            for t in 0..steps {
                for d in 0..d_in {
                    if s.get(n, t, d) {
                        score += w_r.get(d, e) as i64;
                    }
                }
            }
            if score > best.0 {
                best = (score, e);
            }
        }
        let w = &experts[best.1];
        for o in 0..d_out {
            let x: Vec<i64> = (0..steps)
                .map(|t| clamp16((0..d_in).filter(|&d| s.get(n, t, d)).map(|d| w.get(d, o) as i64).sum()))
                .collect();
            for (t, fired) in lif_neuron(&x, th, leak, v0).into_iter().enumerate() {
                out.set(n, t, o, fired);
            }
        }
    }
    out
}

/// `A = Q K^T`, `X = A V`, LIF, per head and timestep.
pub fn mha_oracle(q: &SpikeTensor, k: &SpikeTensor, v: &SpikeTensor, heads: usize, lif: &LifParams) -> SpikeTensor {
    let (n_tok, steps, d_model) = q.dims();
    let hd = d_model / heads;
    let (th, leak, v0) = lif_params(lif);
    let mut x = vec![0i64; n_tok * steps * d_model];
    for h in 0..heads {
        let f0 = h * hd;
        for t in 0..steps {
            let mut a = vec![0i64; n_tok * n_tok];
            for i in 0..n_tok {
                for j in 0..n_tok {
                    a[i * n_tok + j] = (0..hd).filter(|&c| q.get(i, t, f0 + c) && k.get(j, t, f0 + c)).count() as i64;
                }
            }
            for i in 0..n_tok {
                for f in 0..hd {
                    let acc: i64 = (0..n_tok).filter(|&j| v.get(j, t, f0 + f)).map(|j| a[i * n_tok + j]).sum();
                    x[(i * steps + t) * d_model + f0 + f] = clamp16(acc);
                }
            }
        }
    }
    let mut out = SpikeTensor::zeros(n_tok, steps, d_model).unwrap();
    for i in 0..n_tok {
        for f in 0..d_model {
            let trace: Vec<i64> = (0..steps).map(|t| x[(i * steps + t) * d_model + f]).collect();
            for (t, fired) in lif_neuron(&trace, th, leak, v0).into_iter().enumerate() {
                out.set(i, t, f, fired);
            }
        }
    }
    out
}

pub struct StreamResult {
    pub cycles: u64,
    pub compute_cycles: u64,
    pub out: Vec<Vec<i64>>,
}

/// Cycle-by-cycle model of an output-stationary `rows x cols` array.
///
/// Row operand `a[i][k]` enters at the left edge of row `i` on cycle `k + i`
/// and moves one PE right per cycle; column operand `b[k][j]` enters at the top
/// of column `j` on cycle `k + j` and moves one PE down per cycle. A PE
/// multiplies whatever pair it holds. Once every PE has seen all `k` pairs one
/// commit cycle follows, then `ports` results leave per cycle.
pub fn stream_tile(a: &[Vec<i64>], b: &[Vec<i64>], ports: usize) -> StreamResult {
    let rows = a.len();
    let red = b.len();
    let cols = b.first().map_or(0, Vec::len);
    // (value, k) travelling through the array registers
    let mut h: Vec<Vec<Option<(i64, usize)>>> = vec![vec![None; cols]; rows];
    let mut v: Vec<Vec<Option<(i64, usize)>>> = vec![vec![None; cols]; rows];
    let mut acc = vec![vec![0i64; cols]; rows];
    let mut seen = vec![vec![0usize; cols]; rows];
    let mut cycle = 0u64;
    while seen.iter().flatten().any(|&s| s < red) {
        // shift right and down, then inject at the edges
        for i in 0..rows {
            for j in (1..cols).rev() {
                h[i][j] = h[i][j - 1];
            }
            let k = (cycle as usize).checked_sub(i);
            h[i][0] = k.filter(|&k| k < red).map(|k| (a[i][k], k));
        }
        for j in 0..cols {
            for i in (1..rows).rev() {
                v[i][j] = v[i - 1][j];
            }
            let k = (cycle as usize).checked_sub(j);
            v[0][j] = k.filter(|&k| k < red).map(|k| (b[k][j], k));
        }
        for i in 0..rows {
            for j in 0..cols {
                if let (Some((x, kx)), Some((y, ky))) = (h[i][j], v[i][j]) {
                    assert_eq!(kx, ky, "operands out of step at PE ({i},{j})");
                    acc[i][j] += x * y;
                    seen[i][j] += 1;
                }
            }
        }
        cycle += 1;
    }
    if rows * cols > 0 {
        cycle += 1; // commit
    }
    let compute_cycles = cycle;
    let mut left = rows * cols;
    while left > 0 {
        left -= left.min(ports);
        cycle += 1;
    }
    StreamResult {
        cycles: cycle,
        compute_cycles,
        out: acc,
    }
}

/// Value pass over a resident `rows x cols` map: column `f` of `V` enters the
/// top on cycle `f` and drops one row per cycle; each PE row reduces the
/// column it holds against its map row and emits at the right edge. One
/// commit cycle closes the pass.
pub fn value_tile(map: &[Vec<i64>], v: &[Vec<i64>]) -> StreamResult {
    let rows = map.len();
    let cols = map.first().map_or(0, Vec::len);
    let width = v.first().map_or(0, Vec::len);
    let mut reg: Vec<Option<usize>> = vec![None; rows];
    let mut out = vec![vec![0i64; width]; rows];
    let mut emitted = vec![0usize; rows];
    let mut cycle = 0u64;
    while emitted.iter().any(|&e| e < width) {
        for i in (1..rows).rev() {
            reg[i] = reg[i - 1];
        }
        if rows > 0 {
            reg[0] = Some(cycle as usize).filter(|&f| f < width);
        }
        for i in 0..rows {
            if let Some(f) = reg[i] {
                out[i][f] = (0..cols).map(|j| map[i][j] * v[j][f]).sum();
                emitted[i] += 1;
            }
        }
        cycle += 1;
    }
    if rows > 0 && width > 0 {
        cycle += 1;
    }
    StreamResult {
        cycles: cycle,
        compute_cycles: cycle,
        out,
    }
}

pub fn matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

fn random_block(rng: &mut impl Rng, rows: usize, cols: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(lo..=hi)).collect())
        .collect()
}

/// Steps every tile of a streaming schedule through [`stream_tile`] with random
/// operands, checks the numbers and returns the summed cycle count.
pub fn stepped_stream_total(ts: &TileSchedule, ports: usize, rng: &mut impl Rng) -> u64 {
    let mut total = 0;
    for tile in &ts.tiles {
        assert_eq!(tile.phase, Phase::Stream);
        let a = random_block(rng, tile.row_len(), tile.reduction, -128, 127);
        let b = random_block(rng, tile.reduction, tile.col_len(), 0, 1);
        let r = stream_tile(&a, &b, ports);
        assert_eq!(r.out, matmul(&a, &b));
        total += r.cycles;
    }
    total
}

/// Same for an attention schedule: map tiles run the streaming model without
/// a drain, value tiles run [`value_tile`] against the map just computed.
pub fn stepped_attention_total(ts: &TileSchedule, rng: &mut impl Rng) -> u64 {
    let mut total = 0;
    let mut map = Vec::new();
    for tile in &ts.tiles {
        match tile.phase {
            Phase::AttentionMap => {
                let q = random_block(rng, tile.row_len(), tile.reduction, 0, 1);
                let kt = random_block(rng, tile.reduction, tile.col_len(), 0, 1);
                let r = stream_tile(&q, &kt, 1);
                assert!(r.out.iter().flatten().all(|&a| (0..=tile.reduction as i64).contains(&a)));
                total += r.compute_cycles;
                map = r.out;
            }
            Phase::AttentionValue => {
                let v = random_block(rng, tile.col_len(), tile.stream_len, 0, 1);
                let r = value_tile(&map, &v);
                assert_eq!(r.out, matmul(&map, &v));
                total += r.cycles;
            }
            Phase::Stream => panic!("stream tile in an attention schedule"),
        }
    }
    total
}
