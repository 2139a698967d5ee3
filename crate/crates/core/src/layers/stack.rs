use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{mlp_head_forward, ConvLayer, LayerConfig, MlpHead, Mode};
use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, ParamSlot, SparseMatrix, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageOperator {
    Graph,
    Hypergraph,
}

/// Layer counts and widths of one stage: an entry layer `input → hidden`,
/// `residual_layers` residual layers `hidden → hidden`, then the head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageArchitecture {
    pub operator: StageOperator,
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
    pub residual_layers: usize,
    pub dropout: f64,
    pub batch_norm: bool,
}

impl StageArchitecture {
    /// Default stack for stage 1 (graph, two residual layers) or stages
    /// 2 and 3 (hypergraph, one residual layer).
    pub fn for_stage(stage: u8, input: usize) -> Result<Self> {
        let (operator, residual_layers) = match stage {
            1 => (StageOperator::Graph, 2),
            2 | 3 => (StageOperator::Hypergraph, 1),
            s => return Err(Error::InvalidArgument(format!("stage must be 1, 2 or 3, got {s}"))),
        };
        Ok(Self {
            operator,
            input,
            hidden: 256,
            classes: 21,
            residual_layers,
            dropout: 0.5,
            batch_norm: true,
        })
    }

    pub fn with_widths(mut self, hidden: usize, classes: usize) -> Self {
        self.hidden = hidden;
        self.classes = classes;
        self
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout = rate;
        self
    }

    fn layer_configs(&self) -> Vec<LayerConfig> {
        let base = |i, o| LayerConfig {
            batch_norm: self.batch_norm,
            ..LayerConfig::new(i, o).dropout(self.dropout)
        };
        let mut v = vec![base(self.input, self.hidden)];
        v.extend((0..self.residual_layers).map(|_| base(self.hidden, self.hidden).residual(true)));
        v
    }
}

pub struct StageForward {
    pub logp: Var,
    /// Output of the last convolution layer, the head's input.
    pub embedding: Var,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageModel {
    pub arch: StageArchitecture,
    pub layers: Vec<ConvLayer>,
    pub head: MlpHead,
}

impl StageModel {
    pub fn new(arch: StageArchitecture, rng: &mut impl Rng) -> Result<Self> {
        if arch.input == 0 || arch.hidden == 0 || arch.classes == 0 {
            return Err(Error::InvalidArgument("stage widths must be positive".into()));
        }
        let layers = arch
            .layer_configs()
            .into_iter()
            .map(|c| ConvLayer::new(c, rng))
            .collect::<Result<Vec<_>>>()?;
        let head = MlpHead::new(arch.hidden, arch.hidden, arch.classes, rng);
        Ok(Self { arch, layers, head })
    }

    /// Records the full stack. Parameters are registered layer by layer,
    /// then the head, matching [`StageModel::tensors`].
    pub fn forward(
        &mut self,
        tape: &mut Tape,
        op: &Arc<SparseMatrix>,
        x: Var,
        mode: Mode,
        rng: &mut impl Rng,
    ) -> Result<StageForward> {
        let mut h = x;
        for layer in &mut self.layers {
            h = layer.forward(tape, op, h, mode, rng)?;
        }
        let logp = mlp_head_forward(&self.head, tape, h)?;
        Ok(StageForward { logp, embedding: h })
    }

    pub fn tensors(&self) -> Vec<&DenseMatrix> {
        let mut v: Vec<&DenseMatrix> = self.layers.iter().flat_map(|l| l.tensors()).collect();
        v.extend(self.head.tensors());
        v
    }

    pub fn decay_flags(&self) -> Vec<bool> {
        let mut v: Vec<bool> = self.layers.iter().flat_map(|_| ConvLayer::DECAY_FLAGS).collect();
        v.extend(MlpHead::DECAY_FLAGS);
        v
    }

    pub fn param_slots(&mut self) -> Vec<ParamSlot<'_>> {
        let flags = self.decay_flags();
        let mut values: Vec<&mut DenseMatrix> = self.layers.iter_mut().flat_map(|l| l.tensors_mut()).collect();
        values.extend(self.head.tensors_mut());
        values
            .into_iter()
            .zip(flags)
            .map(|(value, decay)| ParamSlot { value, decay })
            .collect()
    }

    /// Every trainable tensor followed by each layer's running mean and
    /// variance as `1×F` rows.
    pub fn state(&self) -> Vec<DenseMatrix> {
        let mut v: Vec<DenseMatrix> = self.tensors().into_iter().cloned().collect();
        for l in &self.layers {
            let f = l.params.running_mean.len();
            v.push(DenseMatrix::from_vec(1, f, l.params.running_mean.clone()).expect("running mean width"));
            v.push(DenseMatrix::from_vec(1, f, l.params.running_var.clone()).expect("running var width"));
        }
        v
    }

    pub fn load_state(&mut self, state: &[DenseMatrix]) -> Result<()> {
        let expected: Vec<(usize, usize)> = self.state().iter().map(|m| m.shape()).collect();
        if state.len() != expected.len() {
            return Err(Error::Malformed(format!(
                "stage state holds {} tensors, model needs {}",
                state.len(),
                expected.len()
            )));
        }
        for (m, &shape) in state.iter().zip(&expected) {
            if m.shape() != shape {
                return Err(Error::dims("load_state", shape, m.shape()));
            }
        }
        let (trainable, running) = state.split_at(state.len() - 2 * self.layers.len());
        for (dst, src) in self.param_slots().into_iter().zip(trainable) {
            dst.value.clone_from(src);
        }
        for (l, pair) in self.layers.iter_mut().zip(running.chunks(2)) {
            l.params.running_mean = pair[0].as_slice().to_vec();
            l.params.running_var = pair[1].as_slice().to_vec();
        }
        Ok(())
    }
}
