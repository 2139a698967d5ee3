//! Building blocks of the staged classifier: graph and hypergraph
//! convolution layers, batch normalization, dropout, the MLP head, and the
//! stacks that chain them.

mod batchnorm;
mod conv;
mod dropout;
mod head;
mod stack;

pub use batchnorm::{batch_norm, BN_EPS, BN_MOMENTUM};
pub use conv::{gcl_forward, hcl_forward, ConvLayer, LayerConfig, LayerParams};
pub use dropout::{dropout, dropout_mask};
pub use head::{mlp_head_forward, MlpHead};
pub use stack::{StageArchitecture, StageForward, StageModel, StageOperator};

use rand::Rng;

use crate::numeric::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Uniform Glorot initialization.
pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> DenseMatrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    DenseMatrix::from_fn(fan_in, fan_out, |_, _| rng.gen_range(-limit..limit))
}
