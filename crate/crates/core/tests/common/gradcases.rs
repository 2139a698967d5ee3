use std::sync::Arc;

use hgcn::graph::{normalized_graph_operator, normalized_hypergraph_operator};
use hgcn::layers::{batch_norm, dropout, mlp_head_forward, ConvLayer, LayerConfig, LayerParams, MlpHead, Mode};
use hgcn::numeric::{DenseMatrix, SparseMatrix, Tape, Var};
use hgcn::rng::{stream, Purpose};
use rand::Rng;

use super::*;

/// A gradient case: given a random-point seed, the worst relative error
/// between tape and finite-difference gradients.
pub type Case = (&'static str, fn(u64) -> f64);

const N: usize = 7;

fn op_check(seed: u64, shapes: &[(usize, usize)], build: impl Fn(&mut Tape, &[Var], &mut ChaCha8Rng) -> Var) -> f64 {
    let mut g = rng(seed);
    let params: Vec<DenseMatrix> = shapes.iter().map(|&(r, c)| random_dense(r, c, &mut g)).collect();
    grad_check(&params, |p| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = p.iter().map(|m| tape.param(m.clone())).collect();
        let out = build(&mut tape, &vars, &mut rng(seed + 1));
        let loss = if tape.value(out).shape() == (1, 1) { out } else { weighted_sum(&mut tape, out, seed) };
        let grads = tape.backward(loss).unwrap().for_params(&tape);
        (tape.value(loss).get(0, 0), grads)
    })
}

fn graph_op(seed: u64) -> Arc<SparseMatrix> {
    normalized_graph_operator(&random_graph(N, 0.4, &mut rng(seed + 2))).0
}

fn hyper_op(seed: u64) -> Arc<SparseMatrix> {
    normalized_hypergraph_operator(&random_hypergraph(N, 5, &mut rng(seed + 3))).unwrap().0
}

fn layer_check(seed: u64, op: Arc<SparseMatrix>, config: LayerConfig) -> f64 {
    let mut g = rng(seed);
    let x = random_dense(N, config.in_features, &mut g);
    let base = ConvLayer::new(config, &mut g).unwrap();
    let p = &base.params;
    let params = vec![
        p.weight.clone(),
        p.bias.clone(),
        random_dense(1, config.out_features, &mut g),
        random_dense(1, config.out_features, &mut g),
    ];
    grad_check(&params, |ps| {
        let mut layer = base.clone();
        layer.params = LayerParams {
            weight: ps[0].clone(),
            bias: ps[1].clone(),
            bn_gain: ps[2].clone(),
            bn_bias: ps[3].clone(),
            ..layer.params.clone()
        };
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let y = layer
            .forward(&mut tape, &op, xv, Mode::Train, &mut stream(seed, Purpose::Dropout, 0))
            .unwrap();
        let loss = weighted_sum(&mut tape, y, seed);
        let grads = tape.backward(loss).unwrap().for_params(&tape);
        (tape.value(loss).get(0, 0), grads)
    })
}

fn stack_check(seed: u64, stage: u8) -> f64 {
    let mut g = rng(seed);
    let model = random_stage_model(stage, 3, 4, 3, &mut g);
    let op = if stage == 1 { graph_op(seed) } else { hyper_op(seed) };
    let x = random_dense(N, 3, &mut g);
    let labels: Vec<Option<usize>> = (0..N).map(|i| (i % 4 != 3).then(|| g.gen_range(0..3))).collect();
    grad_check(&model.state(), |s| stage_loss(&model, s, &op, &x, &labels))
}

pub const CASES: &[Case] = &[
    ("matmul", |s| op_check(s, &[(4, 3), (3, 5)], |t, v, _| t.matmul(v[0], v[1]).unwrap())),
    ("spmm", |s| {
        let op = graph_op(s);
        op_check(s, &[(N, 3)], move |t, v, _| t.spmm(&op, v[0]).unwrap())
    }),
    ("add_bias", |s| op_check(s, &[(4, 3), (1, 3)], |t, v, _| t.add_bias(v[0], v[1]).unwrap())),
    ("add", |s| op_check(s, &[(4, 3), (4, 3)], |t, v, _| t.add(v[0], v[1]).unwrap())),
    ("elu", |s| op_check(s, &[(5, 4)], |t, v, _| t.elu(v[0]))),
    ("mask", |s| {
        op_check(s, &[(4, 3)], |t, v, r| {
            let m = random_dense(4, 3, r);
            t.mask(v[0], m).unwrap()
        })
    }),
    ("batch_norm_train", |s| {
        op_check(s, &[(6, 3), (1, 3), (1, 3)], |t, v, _| t.batch_norm_train(v[0], v[1], v[2], 1e-5).unwrap().0)
    }),
    ("batch_norm_eval", |s| {
        op_check(s, &[(6, 3), (1, 3), (1, 3)], |t, v, r| {
            let mean: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
            let var: Vec<f64> = (0..3).map(|_| r.gen_range(0.5..2.0)).collect();
            t.batch_norm_eval(v[0], v[1], v[2], &mean, &var, 1e-5).unwrap()
        })
    }),
    ("log_softmax", |s| op_check(s, &[(5, 4)], |t, v, _| t.log_softmax(v[0]))),
    ("nll", |s| {
        op_check(s, &[(6, 4)], |t, v, r| {
            let lp = t.log_softmax(v[0]);
            let labels: Vec<Option<usize>> = (0..6).map(|i| (i != 2).then(|| r.gen_range(0..4))).collect();
            t.nll(lp, &labels).unwrap().0
        })
    }),
    ("sum", |s| op_check(s, &[(3, 3)], |t, v, _| t.sum(v[0]))),
    ("batch_norm_layer", |s| {
        op_check(s, &[(6, 3), (1, 3), (1, 3)], |t, v, _| {
            let mut p = LayerParams::identity(3);
            batch_norm(t, v[0], v[1], v[2], &mut p, Mode::Train).unwrap()
        })
    }),
    ("batch_norm_layer_eval", |s| {
        op_check(s, &[(6, 3), (1, 3), (1, 3)], |t, v, r| {
            let mut p = LayerParams::identity(3);
            p.running_mean = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
            p.running_var = (0..3).map(|_| r.gen_range(0.5..2.0)).collect();
            batch_norm(t, v[0], v[1], v[2], &mut p, Mode::Eval).unwrap()
        })
    }),
    ("dropout", |s| op_check(s, &[(6, 4)], |t, v, r| dropout(t, v[0], 0.5, Mode::Train, r).unwrap())),
    ("mlp_head", |s| {
        let mut g = rng(s);
        let head = MlpHead::new(4, 5, 3, &mut g);
        let x = random_dense(6, 4, &mut g);
        let params = vec![head.w1.clone(), head.b1.clone(), head.w2.clone(), head.b2.clone()];
        grad_check(&params, |p| {
            let h = MlpHead {
                w1: p[0].clone(),
                b1: p[1].clone(),
                w2: p[2].clone(),
                b2: p[3].clone(),
            };
            let mut tape = Tape::new();
            let xv = tape.constant(x.clone());
            let lp = mlp_head_forward(&h, &mut tape, xv).unwrap();
            let loss = weighted_sum(&mut tape, lp, s);
            let grads = tape.backward(loss).unwrap().for_params(&tape);
            (tape.value(loss).get(0, 0), grads)
        })
    }),
    ("gcl", |s| layer_check(s, graph_op(s), LayerConfig::new(3, 4))),
    ("gcl_residual", |s| layer_check(s, graph_op(s), LayerConfig::new(4, 4).residual(true))),
    ("hcl", |s| layer_check(s, hyper_op(s), LayerConfig::new(3, 4))),
    ("hcl_residual", |s| layer_check(s, hyper_op(s), LayerConfig::new(4, 4).residual(true))),
    ("hcl_plain", |s| {
        let c = LayerConfig {
            batch_norm: false,
            ..LayerConfig::new(3, 4).dropout(0.0)
        };
        layer_check(s, hyper_op(s), c)
    }),
    ("stage1_stack", |s| stack_check(s, 1)),
    ("stage2_stack", |s| stack_check(s, 2)),
    ("stage3_stack", |s| stack_check(s + 1_000, 3)),
];
