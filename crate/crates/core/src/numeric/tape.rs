//! Define-by-run reverse-mode differentiation over matrix values.
//!
//! A [`Tape`] records every primitive as it is evaluated. Nodes are
//! appended in evaluation order, so the node list is already a topological
//! order and [`Tape::backward`] is a single reverse sweep. The op set is
//! exactly what the convolution layers, heads and losses need; it is not a
//! general autodiff system.

use std::sync::Arc;

use super::dense::{self, gemm, DenseMatrix};
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Batch statistics produced by a training-mode batch normalization.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Biased (divide by N) variance used for normalization.
    pub var: Vec<f64>,
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(Arc<SparseMatrix>, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Elu(Var),
    Mask(Var, DenseMatrix),
    BatchNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: DenseMatrix,
        inv_std: Vec<f64>,
        batch: bool,
    },
    LogSoftmax(Var),
    Nll {
        logp: Var,
        labels: Vec<Option<usize>>,
        count: usize,
    },
    Sum(Var),
}

struct Node {
    value: DenseMatrix,
    op: Op,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<Var>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: DenseMatrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Records a value that is not differentiated.
    pub fn constant(&mut self, value: DenseMatrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Records a trainable leaf. Parameters are remembered in registration
    /// order; see [`Gradients::for_params`].
    pub fn param(&mut self, value: DenseMatrix) -> Var {
        let v = self.push(value, Op::Leaf, true);
        self.params.push(v);
        v
    }

    pub fn params(&self) -> &[Var] {
        &self.params
    }

    pub fn value(&self, v: Var) -> &DenseMatrix {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::MatMul(a, b), ng))
    }

    pub fn spmm(&mut self, s: &Arc<SparseMatrix>, x: Var) -> Result<Var> {
        let value = s.spmm(self.value(x))?;
        let ng = self.needs(x);
        Ok(self.push(value, Op::SpMM(Arc::clone(s), x), ng))
    }

    /// Adds a `1×F` row vector to every row of an `N×F` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if bv.rows() != 1 || bv.cols() != xv.cols() {
            return Err(Error::dims("add_bias", xv.shape(), bv.shape()));
        }
        let mut value = xv.clone();
        for r in 0..value.rows() {
            for (d, b) in value.row_mut(r).iter_mut().zip(bv.as_slice()) {
                *d += b;
            }
        }
        let ng = self.needs(x) || self.needs(bias);
        Ok(self.push(value, Op::AddBias(x, bias), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(Error::dims("add", av.shape(), bv.shape()));
        }
        let mut value = av.clone();
        value.add_assign(bv);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Add(a, b), ng))
    }

    pub fn elu(&mut self, x: Var) -> Var {
        let value = dense::elu(self.value(x));
        let ng = self.needs(x);
        self.push(value, Op::Elu(x), ng)
    }

    /// Elementwise product with a constant mask (dropout).
    pub fn mask(&mut self, x: Var, mask: DenseMatrix) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape() != mask.shape() {
            return Err(Error::dims("mask", xv.shape(), mask.shape()));
        }
        let mut value = xv.clone();
        for (d, m) in value.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *d *= m;
        }
        let ng = self.needs(x);
        Ok(self.push(value, Op::Mask(x, mask), ng))
    }

    /// Training-mode batch normalization over the row (node) dimension.
    pub fn batch_norm_train(
        &mut self,
        x: Var,
        gain: Var,
        bias: Var,
        eps: f64,
    ) -> Result<(Var, BatchStats)> {
        let xv = self.value(x);
        let (n, f) = xv.shape();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "batch normalization in training mode needs at least 2 rows, got {n}"
            )));
        }
        self.check_vec("batch_norm", gain, f)?;
        self.check_vec("batch_norm", bias, f)?;
        let mut mean = vec![0.0; f];
        for r in 0..n {
            for (m, v) in mean.iter_mut().zip(xv.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; f];
        for r in 0..n {
            for ((s, v), m) in var.iter_mut().zip(xv.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= n as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let stats = BatchStats { mean, var };
        let node = self.normalize(x, gain, bias, &stats.mean, inv_std, true);
        Ok((node, stats))
    }

    /// Evaluation-mode batch normalization with fixed statistics.
    pub fn batch_norm_eval(
        &mut self,
        x: Var,
        gain: Var,
        bias: Var,
        running_mean: &[f64],
        running_var: &[f64],
        eps: f64,
    ) -> Result<Var> {
        let f = self.value(x).cols();
        self.check_vec("batch_norm", gain, f)?;
        self.check_vec("batch_norm", bias, f)?;
        if running_mean.len() != f || running_var.len() != f {
            return Err(Error::dims("batch_norm", (1, f), (1, running_mean.len())));
        }
        let inv_std = running_var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        Ok(self.normalize(x, gain, bias, running_mean, inv_std, false))
    }

    fn check_vec(&self, op: &'static str, v: Var, f: usize) -> Result<()> {
        let s = self.value(v).shape();
        if s != (1, f) {
            return Err(Error::dims(op, (1, f), s));
        }
        Ok(())
    }

    fn normalize(
        &mut self,
        x: Var,
        gain: Var,
        bias: Var,
        mean: &[f64],
        inv_std: Vec<f64>,
        batch: bool,
    ) -> Var {
        let xv = self.value(x);
        let (n, f) = xv.shape();
        let mut xhat = DenseMatrix::zeros(n, f);
        for r in 0..n {
            for (c, (d, v)) in xhat.row_mut(r).iter_mut().zip(xv.row(r)).enumerate() {
                *d = (v - mean[c]) * inv_std[c];
            }
        }
        let (g, b) = (self.value(gain).as_slice(), self.value(bias).as_slice());
        let mut value = xhat.clone();
        for r in 0..n {
            for (c, d) in value.row_mut(r).iter_mut().enumerate() {
                *d = *d * g[c] + b[c];
            }
        }
        let ng = self.needs(x) || self.needs(gain) || self.needs(bias);
        self.push(
            value,
            Op::BatchNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
                batch,
            },
            ng,
        )
    }

    pub fn log_softmax(&mut self, x: Var) -> Var {
        let value = dense::log_softmax_rows(self.value(x));
        let ng = self.needs(x);
        self.push(value, Op::LogSoftmax(x), ng)
    }

    /// Mean negative log-likelihood over rows whose label is `Some`.
    /// Returns the `1×1` loss and the number of contributing rows.
    pub fn nll(&mut self, logp: Var, labels: &[Option<usize>]) -> Result<(Var, usize)> {
        let lp = self.value(logp);
        if labels.len() != lp.rows() {
            return Err(Error::dims("nll", lp.shape(), (labels.len(), 1)));
        }
        let mut total = 0.0;
        let mut count = 0;
        for (r, l) in labels.iter().enumerate() {
            if let Some(c) = *l {
                if c >= lp.cols() {
                    return Err(Error::InvalidArgument(format!(
                        "label {c} at row {r} is not below class count {}",
                        lp.cols()
                    )));
                }
                total -= lp.get(r, c);
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptySupervision);
        }
        let value = DenseMatrix::filled(1, 1, total / count as f64);
        let ng = self.needs(logp);
        let op = Op::Nll {
            logp,
            labels: labels.to_vec(),
            count,
        };
        Ok((self.push(value, op, ng), count))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = DenseMatrix::filled(1, 1, self.value(x).sum());
        let ng = self.needs(x);
        self.push(value, Op::Sum(x), ng)
    }

    /// Reverse sweep from a `1×1` loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(Error::NotScalar {
                rows: lv.rows(),
                cols: lv.cols(),
            });
        }
        let mut grads: Vec<Option<DenseMatrix>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(DenseMatrix::filled(1, 1, 1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &DenseMatrix, grads: &mut [Option<DenseMatrix>]) {
        let mut acc = |v: Var, d: DenseMatrix| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(e) => e.add_assign(&d),
                slot => *slot = Some(d),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.needs(*a) {
                    acc(*a, gemm(g, false, self.value(*b), true));
                }
                if self.needs(*b) {
                    acc(*b, gemm(self.value(*a), true, g, false));
                }
            }
            Op::SpMM(s, x) => {
                if self.needs(*x) {
                    acc(*x, s.spmm_transposed(g).expect("shape checked in forward"));
                }
            }
            Op::AddBias(x, b) => {
                acc(*x, g.clone());
                if self.needs(*b) {
                    acc(*b, column_sums(g));
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Elu(x) => {
                let xv = self.value(*x);
                let mut d = g.clone();
                for (dv, &xi) in d.as_mut_slice().iter_mut().zip(xv.as_slice()) {
                    if xi <= 0.0 {
                        *dv *= xi.exp();
                    }
                }
                acc(*x, d);
            }
            Op::Mask(x, m) => {
                let mut d = g.clone();
                for (dv, mv) in d.as_mut_slice().iter_mut().zip(m.as_slice()) {
                    *dv *= mv;
                }
                acc(*x, d);
            }
            Op::BatchNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
                batch,
            } => {
                let (n, f) = g.shape();
                let gv = self.value(*gain).as_slice();
                if self.needs(*gain) {
                    let mut dg = DenseMatrix::zeros(1, f);
                    for r in 0..n {
                        for (c, d) in dg.as_mut_slice().iter_mut().enumerate() {
                            *d += g.get(r, c) * xhat.get(r, c);
                        }
                    }
                    acc(*gain, dg);
                }
                if self.needs(*bias) {
                    acc(*bias, column_sums(g));
                }
                if self.needs(*x) {
                    let mut dx = DenseMatrix::zeros(n, f);
                    if *batch {
                        // dx = inv_std/N · (N·dxhat − Σdxhat − xhat·Σ(dxhat·xhat))
                        let mut s1 = vec![0.0; f];
                        let mut s2 = vec![0.0; f];
                        for r in 0..n {
                            for c in 0..f {
                                let dxh = g.get(r, c) * gv[c];
                                s1[c] += dxh;
                                s2[c] += dxh * xhat.get(r, c);
                            }
                        }
                        let nf = n as f64;
                        for r in 0..n {
                            for c in 0..f {
                                let dxh = g.get(r, c) * gv[c];
                                let v = inv_std[c] / nf
                                    * (nf * dxh - s1[c] - xhat.get(r, c) * s2[c]);
                                dx.set(r, c, v);
                            }
                        }
                    } else {
                        for r in 0..n {
                            for c in 0..f {
                                dx.set(r, c, g.get(r, c) * gv[c] * inv_std[c]);
                            }
                        }
                    }
                    acc(*x, dx);
                }
            }
            Op::LogSoftmax(x) => {
                // dx = g − softmax · rowsum(g)
                let y = &node.value;
                let mut d = g.clone();
                for r in 0..d.rows() {
                    let s: f64 = g.row(r).iter().sum();
                    for (dv, yv) in d.row_mut(r).iter_mut().zip(y.row(r)) {
                        *dv -= yv.exp() * s;
                    }
                }
                acc(*x, d);
            }
            Op::Nll {
                logp,
                labels,
                count,
            } => {
                let lp = self.value(*logp);
                let scale = -g.get(0, 0) / *count as f64;
                let mut d = DenseMatrix::zeros(lp.rows(), lp.cols());
                for (r, l) in labels.iter().enumerate() {
                    if let Some(c) = *l {
                        d.set(r, c, scale);
                    }
                }
                acc(*logp, d);
            }
            Op::Sum(x) => {
                let (r, c) = self.value(*x).shape();
                acc(*x, DenseMatrix::filled(r, c, g.get(0, 0)));
            }
        }
    }
}

fn column_sums(g: &DenseMatrix) -> DenseMatrix {
    let mut s = DenseMatrix::zeros(1, g.cols());
    for r in 0..g.rows() {
        for (d, v) in s.as_mut_slice().iter_mut().zip(g.row(r)) {
            *d += v;
        }
    }
    s
}

/// Result of [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<DenseMatrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&DenseMatrix> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradients of every registered parameter, in registration order.
    /// Parameters the loss does not depend on get a zero gradient.
    pub fn for_params(&self, tape: &Tape) -> Vec<DenseMatrix> {
        tape.params()
            .iter()
            .map(|&p| match self.get(p) {
                Some(g) => g.clone(),
                None => {
                    let (r, c) = tape.value(p).shape();
                    DenseMatrix::zeros(r, c)
                }
            })
            .collect()
    }
}
