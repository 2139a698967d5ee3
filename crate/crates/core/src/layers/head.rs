use rand::Rng;
use serde::{Deserialize, Serialize};

use super::glorot;
use crate::error::Result;
use crate::numeric::{DenseMatrix, Tape, Var};

/// Two-layer perceptron classifier ending in log-softmax:
/// `log_softmax(elu(X·W1 + b1)·W2 + b2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHead {
    pub w1: DenseMatrix,
    pub b1: DenseMatrix,
    pub w2: DenseMatrix,
    pub b2: DenseMatrix,
}

impl MlpHead {
    pub fn new(input: usize, hidden: usize, classes: usize, rng: &mut impl Rng) -> Self {
        Self {
            w1: glorot(input, hidden, rng),
            b1: DenseMatrix::zeros(1, hidden),
            w2: glorot(hidden, classes, rng),
            b2: DenseMatrix::zeros(1, classes),
        }
    }

    pub fn zeros(input: usize, hidden: usize, classes: usize) -> Self {
        Self {
            w1: DenseMatrix::zeros(input, hidden),
            b1: DenseMatrix::zeros(1, hidden),
            w2: DenseMatrix::zeros(hidden, classes),
            b2: DenseMatrix::zeros(1, classes),
        }
    }

    pub const DECAY_FLAGS: [bool; 4] = [true, false, true, false];

    pub fn tensors(&self) -> [&DenseMatrix; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut DenseMatrix; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

/// Records the head on the tape and returns per-row log-probabilities.
pub fn mlp_head_forward(head: &MlpHead, tape: &mut Tape, x: Var) -> Result<Var> {
    let w1 = tape.param(head.w1.clone());
    let b1 = tape.param(head.b1.clone());
    let w2 = tape.param(head.w2.clone());
    let b2 = tape.param(head.b2.clone());
    let h = tape.matmul(x, w1)?;
    let h = tape.add_bias(h, b1)?;
    let h = tape.elu(h);
    let h = tape.matmul(h, w2)?;
    let h = tape.add_bias(h, b2)?;
    Ok(tape.log_softmax(h))
}
