use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Per-parameter Adam moments plus the shared step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first: Vec<DenseMatrix>,
    pub second: Vec<DenseMatrix>,
    pub step: u64,
}

impl AdamState {
    /// Zeroed moments shaped like `params`.
    pub fn new(params: &[&DenseMatrix]) -> Self {
        let zeros = |p: &&DenseMatrix| DenseMatrix::zeros(p.rows(), p.cols());
        Self {
            first: params.iter().map(zeros).collect(),
            second: params.iter().map(zeros).collect(),
            step: 0,
        }
    }
}

/// One parameter tensor handed to [`adam_step`].
pub struct ParamSlot<'a> {
    pub value: &'a mut DenseMatrix,
    /// Whether decoupled weight decay applies (weights yes, biases and
    /// normalization parameters no).
    pub decay: bool,
}

/// Adam with bias correction and decoupled weight decay.
///
/// Decay is applied to the parameter itself (`θ ← θ − lr·wd·θ`) before the
/// moment update, and only to slots flagged `decay`.
pub fn adam_step(
    params: &mut [ParamSlot<'_>],
    grads: &[DenseMatrix],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")));
    }
    if params.len() != grads.len() || params.len() != state.first.len() {
        return Err(Error::InvalidArgument(format!(
            "adam: {} params, {} grads, {} moment slots",
            params.len(),
            grads.len(),
            state.first.len()
        )));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.first) {
        if p.value.shape() != g.shape() || g.shape() != m.shape() {
            return Err(Error::dims("adam_step", p.value.shape(), g.shape()));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);

    for (i, slot) in params.iter_mut().enumerate() {
        let theta = slot.value.as_mut_slice();
        let g = grads[i].as_slice();
        let m = state.first[i].as_mut_slice();
        let v = state.second[i].as_mut_slice();
        let decay = if slot.decay { lr * weight_decay } else { 0.0 };
        for k in 0..theta.len() {
            theta[k] -= decay * theta[k];
            m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
            v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
            let mhat = m[k] / c1;
            let vhat = v[k] / c2;
            theta[k] -= lr * mhat / (vhat.sqrt() + EPSILON);
        }
    }
    Ok(())
}
