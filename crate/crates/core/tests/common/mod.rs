#![allow(dead_code)]

pub mod gradcases;

use std::sync::Arc;

use hgcn::graph::{HyperedgeMode, Hypergraph, NodeOrigin, SparseAffinityGraph};
use hgcn::io::{synthesize, SyntheticSpec};
use hgcn::layers::{Mode, StageArchitecture, StageModel};
use hgcn::numeric::{AdamState, DenseMatrix, SparseMatrix, Tape, Var};
use hgcn::rng::{stream, Purpose};
use hgcn::training::{
    CompletedStage, EpochRecord, PipelineCheckpoint, PipelineConfig, ReduceOnPlateau, Sample, SchedulerConfig,
    StageConfig, StageProgress, WeakSignal,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream(seed, Purpose::Synthetic, 1_000_003)
}

pub fn origins(n: usize) -> Vec<NodeOrigin> {
    (0..n as u32).map(|s| NodeOrigin { image: 0, superpixel: s }).collect()
}

/// Symmetric graph with zero diagonal and weights in `(0, 1]`.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> SparseAffinityGraph {
    let mut trip = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                let w = 1.0 - rng.gen_range(0.0..1.0);
                trip.extend([(i, j, w), (j, i, w)]);
            }
        }
    }
    SparseAffinityGraph {
        adjacency: SparseMatrix::from_triplets(n, n, trip).unwrap(),
        origins: origins(n),
    }
}

/// Hypergraph where every node belongs to at least one hyperedge.
pub fn random_hypergraph(n: usize, m: usize, rng: &mut impl Rng) -> Hypergraph {
    let mut trip = Vec::new();
    for e in 0..m {
        let size = rng.gen_range(1..=n.min(5));
        for i in rand::seq::index::sample(rng, n, size) {
            trip.push((i, e, 1.0));
        }
    }
    let mut covered = vec![false; n];
    trip.iter().for_each(|&(i, _, _)| covered[i] = true);
    let mut extra = 0;
    for (i, _) in covered.iter().enumerate().filter(|(_, c)| !**c) {
        trip.push((i, m + extra, 1.0));
        extra += 1;
    }
    let weights = (0..m + extra).map(|_| rng.gen_range(0.05..1.0)).collect();
    Hypergraph::new(SparseMatrix::from_triplets(n, m + extra, trip).unwrap(), weights).unwrap()
}

pub fn to_na(s: &SparseMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(s.rows(), s.cols());
    for (i, j, v) in s.triplets() {
        m[(i, j)] = v;
    }
    m
}

pub fn dense_to_na(d: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(d.rows(), d.cols(), d.as_slice())
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` with dense matrices.
pub fn graph_operator_oracle(a: &SparseMatrix) -> DMatrix<f64> {
    let n = a.rows();
    let at = to_na(a) + DMatrix::identity(n, n);
    let d = DMatrix::from_diagonal(&at.column_sum().map(|v| 1.0 / v.sqrt()));
    &d * at * &d
}

/// `D_h^{-1/2} H W B^{-1} Hᵀ D_h^{-1/2}` with degrees recomputed from `H`
/// and `W`.
pub fn hypergraph_operator_oracle(hg: &Hypergraph) -> DMatrix<f64> {
    let h = to_na(&hg.incidence);
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(hg.edge_weights.clone()));
    let b = DMatrix::from_diagonal(&h.row_sum().transpose().map(|v| 1.0 / v));
    let dh = (&h * &w).column_sum().map(|v| 1.0 / v.sqrt());
    let dh = DMatrix::from_diagonal(&dh);
    &dh * &h * w * b * h.transpose() * &dh
}

pub fn max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// `‖a − n‖ / max(‖a‖, ‖n‖, 1e-6)` over all entries.
pub fn rel_err(a: &DenseMatrix, n: &DenseMatrix) -> f64 {
    let diff: f64 = a
        .as_slice()
        .iter()
        .zip(n.as_slice())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    diff / a.frobenius().max(n.frobenius()).max(1e-6)
}

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

/// Central differences of `f` around `params`, compared with the analytic
/// gradients `f` returns. The relative error is taken over all parameter
/// entries at once, since tensors whose true gradient is identically zero
/// (a bias feeding batch normalization) have no meaningful ratio of their
/// own.
pub fn grad_check(params: &[DenseMatrix], mut f: impl FnMut(&[DenseMatrix]) -> (f64, Vec<DenseMatrix>)) -> f64 {
    let (_, analytic) = f(params);
    assert_eq!(analytic.len(), params.len(), "one gradient per parameter");
    let mut a_all = Vec::new();
    let mut n_all = Vec::new();
    for (t, a) in analytic.iter().enumerate() {
        for k in 0..a.as_slice().len() {
            let mut at = |d: f64| {
                let mut p = params.to_vec();
                p[t].as_mut_slice()[k] += d;
                f(&p).0
            };
            n_all.push((at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP));
            a_all.push(a.as_slice()[k]);
        }
    }
    let len = a_all.len();
    rel_err(&DenseMatrix::from_vec(1, len, a_all).unwrap(), &DenseMatrix::from_vec(1, len, n_all).unwrap())
}

/// Reduces a matrix node to a scalar with fixed random weights so every
/// output entry reaches the loss.
pub fn weighted_sum(tape: &mut Tape, x: Var, seed: u64) -> Var {
    let (r, c) = tape.value(x).shape();
    let mut g = rng(seed ^ 0x5eed);
    let w = DenseMatrix::from_fn(r, c, |_, _| g.gen_range(-1.0..1.0));
    let m = tape.mask(x, w).unwrap();
    tape.sum(m)
}

pub fn random_dense(r: usize, c: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// NLL of a stage model in training mode with a fixed dropout stream, and
/// the gradients of every state tensor (zero for running statistics).
pub fn stage_loss(
    model: &StageModel,
    state: &[DenseMatrix],
    op: &Arc<SparseMatrix>,
    x: &DenseMatrix,
    labels: &[Option<usize>],
) -> (f64, Vec<DenseMatrix>) {
    let mut m = model.clone();
    m.load_state(state).unwrap();
    let mut tape = Tape::new();
    let xv = tape.constant(x.clone());
    let out = m
        .forward(&mut tape, op, xv, Mode::Train, &mut stream(7, Purpose::Dropout, 0))
        .unwrap();
    let (l, _) = tape.nll(out.logp, labels).unwrap();
    let mut grads = tape.backward(l).unwrap().for_params(&tape);
    grads.extend(state[grads.len()..].iter().map(|s| DenseMatrix::zeros(s.rows(), s.cols())));
    (tape.value(l).get(0, 0), grads)
}

/// A small stage model with random parameters, including non-trivial
/// running statistics.
pub fn random_stage_model(stage: u8, input: usize, hidden: usize, classes: usize, rng: &mut impl Rng) -> StageModel {
    let arch = StageArchitecture::for_stage(stage, input).unwrap().with_widths(hidden, classes);
    let mut m = StageModel::new(arch, rng).unwrap();
    let mut s = m.state();
    let trainable = s.len() - 2 * m.layers.len();
    for (i, t) in s.iter_mut().enumerate() {
        let positive = i >= trainable && (i - trainable) % 2 == 1;
        for v in t.as_mut_slice() {
            *v = if positive { rng.gen_range(0.5..2.0) } else { rng.gen_range(-1.0..1.0) };
        }
    }
    m.load_state(&s).unwrap();
    m
}

fn random_history(n: usize, rng: &mut impl Rng) -> Vec<EpochRecord> {
    (0..n)
        .map(|e| EpochRecord {
            epoch: e + 1,
            train_nll: rng.gen_range(0.0..5.0),
            val_nll: rng.gen_bool(0.7).then(|| rng.gen_range(0.0..5.0)),
            lr: rng.gen_range(1e-6..1e-2),
        })
        .collect()
}

/// A structurally valid checkpoint with random contents.
pub fn random_checkpoint(rng: &mut impl Rng) -> PipelineCheckpoint {
    let input = rng.gen_range(1..6);
    let hidden = rng.gen_range(1..6);
    let classes = rng.gen_range(2..5);
    let done = rng.gen_range(0..3);
    let completed = (1..=done as u8)
        .map(|s| CompletedStage {
            state: random_stage_model(s, input, hidden, classes, rng).state(),
            history: random_history(rng.gen_range(0..6), rng),
        })
        .collect();
    let current = rng.gen_bool(0.6).then(|| {
        let stage = done as u8 + 1;
        let model = random_stage_model(stage, input, hidden, classes, rng);
        let tensors = model.tensors();
        let mut adam = AdamState::new(&tensors);
        for m in adam.first.iter_mut().chain(adam.second.iter_mut()) {
            m.as_mut_slice().iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        }
        adam.step = rng.gen_range(0..1000);
        let mut scheduler = ReduceOnPlateau::new(rng.gen_range(1e-4..1e-1), rng.gen_range(1..500), SchedulerConfig::default());
        scheduler.best = if rng.gen_bool(0.2) { f64::INFINITY } else { rng.gen_range(0.0..3.0) };
        scheduler.stalled = rng.gen_range(0..25);
        scheduler.epoch = rng.gen_range(0..400);
        let best = rng.gen_bool(0.5).then(|| (rng.gen_range(0.0..3.0), model.state()));
        StageProgress {
            stage,
            model,
            adam,
            scheduler,
            best,
            history: random_history(rng.gen_range(0..8), rng),
            finished: rng.gen_bool(0.3),
        }
    });
    let mut config_hash = [0u8; 32];
    rng.fill(&mut config_hash);
    PipelineCheckpoint {
        config_hash,
        seed: rng.gen(),
        completed,
        current,
    }
}

/// The desk-scale setting used by the end-to-end checks: 20 noisy 64×64
/// images with four classes, clicks on 1/8 of the superpixels.
pub const DESK_NOISE: f64 = 40.0;

pub fn desk_samples(seed: u64) -> Vec<Sample> {
    let spec = SyntheticSpec {
        noise: DESK_NOISE,
        ..SyntheticSpec::new(20, 64, 4, seed)
    };
    synthesize(&spec).unwrap().iter().map(|s| s.to_sample()).collect()
}

pub fn desk_config() -> PipelineConfig {
    PipelineConfig {
        superpixels: 50,
        feature_cell: 2,
        weak: WeakSignal::Clicks { fraction: 1.0 / 8.0 },
        classes: 4,
        hidden: 64,
        hyperedges: HyperedgeMode::Pairwise,
        stage: StageConfig {
            max_epochs: 200,
            ..Default::default()
        },
        ..Default::default()
    }
}

/// A tiny configuration for quick pipeline runs.
pub fn tiny_config(epochs: usize) -> PipelineConfig {
    PipelineConfig {
        superpixels: 20,
        feature_cell: 4,
        weak: WeakSignal::Clicks { fraction: 0.25 },
        classes: 4,
        hidden: 8,
        stage: StageConfig {
            max_epochs: epochs,
            ..Default::default()
        },
        ..Default::default()
    }
}

pub fn tiny_samples(images: usize, seed: u64) -> Vec<Sample> {
    synthesize(&SyntheticSpec::new(images, 32, 4, seed))
        .unwrap()
        .iter()
        .map(|s| s.to_sample())
        .collect()
}

/// O(N²) reference: sort every other node by (distance, index).
pub fn brute_force_picks(x: &DenseMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = x.rows();
    (0..n)
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let s: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (s, j)
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|p| p.1).collect()
        })
        .collect()
}

/// Checks with a flood fill that every label in `0..n` owns exactly one
/// 4-connected region and that the labels cover the image.
pub fn connected_partition(labels: &[u32], w: usize, h: usize) -> Result<usize, String> {
    let n = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut seen = vec![false; labels.len()];
    let mut regions = vec![0usize; n];
    for start in 0..labels.len() {
        if seen[start] {
            continue;
        }
        let l = labels[start];
        regions[l as usize] += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            let mut push = |q: usize| {
                if !seen[q] && labels[q] == l {
                    seen[q] = true;
                    stack.push(q);
                }
            };
            if x > 0 {
                push(p - 1);
            }
            if x + 1 < w {
                push(p + 1);
            }
            if y > 0 {
                push(p - w);
            }
            if y + 1 < h {
                push(p + w);
            }
        }
    }
    if labels.len() != w * h {
        return Err(format!("{} labels for {}x{} pixels", labels.len(), w, h));
    }
    match regions.iter().position(|&r| r != 1) {
        Some(l) => Err(format!("label {l} has {} regions", regions[l])),
        None => Ok(n),
    }
}
