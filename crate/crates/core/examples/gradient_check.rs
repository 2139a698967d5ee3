//! Compares tape gradients of a stage-2 stack against central finite
//! differences on a small random hypergraph.
//!
//! cargo run --example gradient_check -- [seed]

use std::sync::Arc;

use hgcn::graph::{build_hypergraph, normalized_hypergraph_operator, HyperedgeMode, NodeOrigin, SparseAffinityGraph};
use hgcn::layers::{Mode, StageArchitecture, StageModel};
use hgcn::numeric::{DenseMatrix, SparseMatrix, Tape};
use hgcn::rng::{stream, Purpose};
use rand::Rng;

const N: usize = 8;

fn loss(model: &mut StageModel, op: &Arc<SparseMatrix>, x: &DenseMatrix, labels: &[Option<usize>]) -> (f64, Vec<DenseMatrix>) {
    let mut tape = Tape::new();
    let xv = tape.constant(x.clone());
    let out = model.forward(&mut tape, op, xv, Mode::Train, &mut stream(0, Purpose::Dropout, 0)).unwrap();
    let (l, _) = tape.nll(out.logp, labels).unwrap();
    let g = tape.backward(l).unwrap();
    (tape.value(l).get(0, 0), g.for_params(&tape))
}

fn main() -> hgcn::Result<()> {
    let seed = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed"));
    let mut rng = stream(seed, Purpose::Init, 99);
    let origins: Vec<NodeOrigin> = (0..N as u32).map(|s| NodeOrigin { image: 0, superpixel: s }).collect();
    let mut trip = Vec::new();
    for i in 0..N {
        let j = (i + 1) % N;
        let w = rng.gen_range(0.1..1.0);
        trip.extend([(i, j, w), (j, i, w)]);
    }
    let ring = SparseAffinityGraph { adjacency: SparseMatrix::from_triplets(N, N, trip)?, origins: origins.clone() };
    let empty = SparseAffinityGraph::empty(origins);
    let op = normalized_hypergraph_operator(&build_hypergraph(&ring, &empty, HyperedgeMode::PerNode)?)?.0;
    let x = DenseMatrix::from_fn(N, 3, |_, _| rng.gen_range(-1.0..1.0));
    let labels: Vec<Option<usize>> = (0..N).map(|i| (i % 3 != 2).then_some(i % 3)).collect();

    let arch = StageArchitecture::for_stage(2, 3)?.with_widths(4, 3);
    let mut model = StageModel::new(arch, &mut rng)?;
    let (_, analytic) = loss(&mut model, &op, &x, &labels);
    let base = model.state();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (t, a) in analytic.iter().enumerate() {
        let mut numeric = DenseMatrix::zeros(a.rows(), a.cols());
        for k in 0..a.as_slice().len() {
            let mut eval = |delta: f64| {
                let mut s = base.clone();
                s[t].as_mut_slice()[k] += delta;
                model.load_state(&s).unwrap();
                loss(&mut model, &op, &x, &labels).0
            };
            numeric.as_mut_slice()[k] = (eval(h) - eval(-h)) / (2.0 * h);
        }
        let diff = a.max_abs_diff(&numeric);
        let rel = (0..a.as_slice().len())
            .map(|k| (a.as_slice()[k] - numeric.as_slice()[k]).powi(2))
            .sum::<f64>()
            .sqrt()
            / a.frobenius().max(numeric.frobenius()).max(1e-6);
        worst = worst.max(rel);
        println!("tensor {t:2} {:>2}x{:<2} max abs diff {diff:.2e} rel {rel:.2e}", a.rows(), a.cols());
    }
    println!("worst relative error {worst:.2e}");
    Ok(())
}
