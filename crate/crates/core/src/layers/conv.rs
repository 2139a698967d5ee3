use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{batch_norm, dropout, glorot, Mode};
use crate::error::{Error, Result};
use crate::graph::{GraphOperator, HypergraphOperator};
use crate::numeric::{DenseMatrix, SparseMatrix, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub in_features: usize,
    pub out_features: usize,
    pub dropout: f64,
    pub residual: bool,
    /// When false the layer skips normalization entirely.
    pub batch_norm: bool,
}

impl LayerConfig {
    pub fn new(in_features: usize, out_features: usize) -> Self {
        Self {
            in_features,
            out_features,
            dropout: 0.5,
            residual: false,
            batch_norm: true,
        }
    }

    pub fn residual(mut self, on: bool) -> Self {
        self.residual = on;
        self
    }

    pub fn dropout(mut self, rate: f64) -> Self {
        self.dropout = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.residual && self.in_features != self.out_features {
            return Err(Error::InvalidArgument(format!(
                "residual connection needs equal widths, got {} -> {}",
                self.in_features, self.out_features
            )));
        }
        Ok(())
    }
}

/// Trainable state of one convolution layer. `weight` is the propagation
/// weight matrix; the rest are `1×F` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weight: DenseMatrix,
    pub bias: DenseMatrix,
    pub bn_gain: DenseMatrix,
    pub bn_bias: DenseMatrix,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl LayerParams {
    pub fn init(f_in: usize, f_out: usize, rng: &mut impl Rng) -> Self {
        Self {
            weight: glorot(f_in, f_out, rng),
            ..Self::identity(f_out)
        }
    }

    /// Identity weight, zero bias, unit gain, zero shift and unit running
    /// statistics: every stage of the layer passes values through.
    pub fn identity(f: usize) -> Self {
        Self {
            weight: DenseMatrix::identity(f),
            bias: DenseMatrix::zeros(1, f),
            bn_gain: DenseMatrix::filled(1, f, 1.0),
            bn_bias: DenseMatrix::zeros(1, f),
            running_mean: vec![0.0; f],
            running_var: vec![1.0; f],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub config: LayerConfig,
    pub params: LayerParams,
}

impl ConvLayer {
    pub fn new(config: LayerConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            params: LayerParams::init(config.in_features, config.out_features, rng),
            config,
        })
    }

    /// `op · X · P + bias`, the part of the layer before normalization.
    /// Registers weight and bias on the tape.
    pub fn pre_activation(&self, tape: &mut Tape, op: &Arc<SparseMatrix>, x: Var) -> Result<(Var, Var, Var)> {
        let w = tape.param(self.params.weight.clone());
        let b = tape.param(self.params.bias.clone());
        let h = tape.spmm(op, x)?;
        let h = tape.matmul(h, w)?;
        Ok((tape.add_bias(h, b)?, w, b))
    }

    /// Propagate, affine, batch norm, ELU, dropout, then the optional
    /// residual. Parameters are registered in the order weight, bias,
    /// gain, shift.
    pub fn forward(
        &mut self,
        tape: &mut Tape,
        op: &Arc<SparseMatrix>,
        x: Var,
        mode: Mode,
        rng: &mut impl Rng,
    ) -> Result<Var> {
        self.config.validate()?;
        let n = tape.value(x).rows();
        if op.shape() != (n, n) {
            return Err(Error::dims("conv", op.shape(), tape.value(x).shape()));
        }
        let (mut h, _, _) = self.pre_activation(tape, op, x)?;
        let g = tape.param(self.params.bn_gain.clone());
        let s = tape.param(self.params.bn_bias.clone());
        if self.config.batch_norm {
            h = batch_norm(tape, h, g, s, &mut self.params, mode)?;
        }
        h = tape.elu(h);
        h = dropout(tape, h, self.config.dropout, mode, rng)?;
        if self.config.residual {
            h = tape.add(h, x)?;
        }
        Ok(h)
    }

    /// Whether each registered parameter takes weight decay.
    pub const DECAY_FLAGS: [bool; 4] = [true, false, false, false];

    pub fn tensors(&self) -> [&DenseMatrix; 4] {
        let p = &self.params;
        [&p.weight, &p.bias, &p.bn_gain, &p.bn_bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut DenseMatrix; 4] {
        let p = &mut self.params;
        [&mut p.weight, &mut p.bias, &mut p.bn_gain, &mut p.bn_bias]
    }
}

/// Graph convolution layer forward pass.
pub fn gcl_forward(
    layer: &mut ConvLayer,
    tape: &mut Tape,
    op: &GraphOperator,
    x: Var,
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<Var> {
    layer.forward(tape, op.matrix(), x, mode, rng)
}

/// Hypergraph convolution layer forward pass.
pub fn hcl_forward(
    layer: &mut ConvLayer,
    tape: &mut Tape,
    op: &HypergraphOperator,
    x: Var,
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<Var> {
    layer.forward(tape, op.matrix(), x, mode, rng)
}
