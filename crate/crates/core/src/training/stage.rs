use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::scheduler::{ReduceOnPlateau, SchedulerConfig};
use crate::error::{Error, Result};
use crate::layers::{Mode, StageArchitecture, StageModel};
use crate::numeric::{adam_step, AdamState, DenseMatrix, SparseMatrix, Tape};
use crate::rng::{index3, stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub max_epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub scheduler: SchedulerConfig,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            max_epochs: 1000,
            lr: 0.01,
            weight_decay: 5e-4,
            scheduler: SchedulerConfig::default(),
        }
    }
}

/// One partition graph as seen by a stage: its propagation operator,
/// input features, and the TRAIN and VAL label vectors (other nodes
/// `None`).
#[derive(Debug, Clone)]
pub struct PartitionInput {
    pub op: Arc<SparseMatrix>,
    pub x: DenseMatrix,
    pub train: Vec<Option<usize>>,
    pub val: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sum over partitions of the mean TRAIN NLL.
    pub train_nll: f64,
    /// Sum over partitions of the mean VAL NLL; `None` without VAL nodes.
    pub val_nll: Option<f64>,
    pub lr: f64,
}

/// Everything needed to continue a stage exactly where it stopped. Random
/// streams are addressed by (stage, epoch, partition), so no generator
/// state is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct StageProgress {
    pub stage: u8,
    pub model: StageModel,
    pub adam: AdamState,
    pub scheduler: ReduceOnPlateau,
    pub best: Option<(f64, Vec<DenseMatrix>)>,
    pub history: Vec<EpochRecord>,
    pub finished: bool,
}

impl StageProgress {
    pub fn epoch(&self) -> usize {
        self.history.len()
    }
}

#[derive(Debug, Clone)]
pub struct StageOutput {
    pub model: StageModel,
    /// Per-partition node log-probabilities.
    pub logp: Vec<DenseMatrix>,
    /// Per-partition embedding tap (last convolution output).
    pub embeddings: Vec<DenseMatrix>,
    pub history: Vec<EpochRecord>,
}

pub struct StageTrainer<'a> {
    config: StageConfig,
    parts: &'a [PartitionInput],
    seed: u64,
    progress: StageProgress,
    verbose: bool,
}

impl<'a> StageTrainer<'a> {
    pub fn new(
        stage: u8,
        arch: StageArchitecture,
        config: StageConfig,
        parts: &'a [PartitionInput],
        seed: u64,
    ) -> Result<Self> {
        let model = StageModel::new(arch, &mut stream(seed, Purpose::Init, stage as u64))?;
        let adam = AdamState::new(&model.tensors());
        let progress = StageProgress {
            stage,
            model,
            adam,
            scheduler: ReduceOnPlateau::new(config.lr, config.max_epochs, config.scheduler),
            best: None,
            history: Vec::new(),
            finished: config.max_epochs == 0,
        };
        Self::resume(config, parts, seed, progress)
    }

    pub fn resume(config: StageConfig, parts: &'a [PartitionInput], seed: u64, progress: StageProgress) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("no partitions to train on".into()));
        }
        for (p, part) in parts.iter().enumerate() {
            let n = part.x.rows();
            if part.op.shape() != (n, n) || part.train.len() != n || part.val.len() != n {
                return Err(Error::InvalidArgument(format!("partition {p} has inconsistent sizes")));
            }
            if part.x.cols() != progress.model.arch.input {
                return Err(Error::dims("stage input", (n, progress.model.arch.input), part.x.shape()));
            }
            if part.train.iter().all(Option::is_none) {
                return Err(Error::EmptyTrainSet(p));
            }
        }
        Ok(Self {
            config,
            parts,
            seed,
            progress,
            verbose: false,
        })
    }

    pub fn verbose(mut self, on: bool) -> Self {
        self.verbose = on;
        self
    }

    pub fn progress(&self) -> &StageProgress {
        &self.progress
    }

    pub fn is_finished(&self) -> bool {
        self.progress.finished
    }

    /// One epoch: a train-mode Adam step per partition in ascending order,
    /// then an eval-mode validation pass that feeds the scheduler.
    pub fn step_epoch(&mut self) -> Result<()> {
        if self.progress.finished {
            return Ok(());
        }
        let prog = &mut self.progress;
        let epoch = prog.history.len() + 1;
        let lr = prog.scheduler.lr;
        let mut train_nll = 0.0;
        for (p, part) in self.parts.iter().enumerate() {
            let mut tape = Tape::new();
            let x = tape.constant(part.x.clone());
            let mut rng = stream(
                self.seed,
                Purpose::Dropout,
                index3(prog.stage as u64, epoch as u64, p as u64),
            );
            let out = prog.model.forward(&mut tape, &part.op, x, Mode::Train, &mut rng)?;
            let (loss, _) = tape.nll(out.logp, &part.train)?;
            train_nll += tape.value(loss).get(0, 0);
            let grads = tape.backward(loss)?.for_params(&tape);
            adam_step(
                &mut prog.model.param_slots(),
                &grads,
                &mut prog.adam,
                lr,
                self.config.weight_decay,
            )?;
        }

        let mut val_nll = None;
        for (p, part) in self.parts.iter().enumerate() {
            if part.val.iter().all(Option::is_none) {
                continue;
            }
            let mut tape = Tape::new();
            let x = tape.constant(part.x.clone());
            let mut rng = stream(self.seed, Purpose::Dropout, index3(prog.stage as u64, epoch as u64, p as u64));
            let out = prog.model.forward(&mut tape, &part.op, x, Mode::Eval, &mut rng)?;
            let (loss, _) = tape.nll(out.logp, &part.val)?;
            *val_nll.get_or_insert(0.0) += tape.value(loss).get(0, 0);
        }

        let metric = val_nll.unwrap_or(train_nll);
        if !metric.is_finite() {
            return Err(Error::Malformed(format!("stage {} diverged at epoch {epoch}", prog.stage)));
        }
        if prog.best.as_ref().is_none_or(|(b, _)| metric < *b) {
            prog.best = Some((metric, prog.model.state()));
        }
        let step = prog.scheduler.step(metric);
        prog.history.push(EpochRecord {
            epoch,
            train_nll,
            val_nll,
            lr,
        });
        if self.verbose {
            println!(
                "stage {} epoch {epoch} train_nll {train_nll:.6} val_nll {} lr {lr:.3e}",
                prog.stage,
                val_nll.map_or("-".to_string(), |v| format!("{v:.6}"))
            );
        }
        prog.finished = step.stop;
        Ok(())
    }

    /// Restores the best-validation parameters and runs an eval-mode
    /// forward pass over every partition.
    pub fn finish(self) -> Result<StageOutput> {
        let mut model = self.progress.model;
        if let Some((_, state)) = &self.progress.best {
            model.load_state(state)?;
        }
        let (logp, embeddings) = infer_stage(&mut model, self.parts.iter().map(|p| (&p.op, &p.x)))?;
        Ok(StageOutput {
            model,
            logp,
            embeddings,
            history: self.progress.history,
        })
    }
}

/// Eval-mode forward of a trained stage over several partitions.
pub fn infer_stage<'p>(
    model: &mut StageModel,
    parts: impl IntoIterator<Item = (&'p Arc<SparseMatrix>, &'p DenseMatrix)>,
) -> Result<(Vec<DenseMatrix>, Vec<DenseMatrix>)> {
    let mut logp = Vec::new();
    let mut emb = Vec::new();
    for (op, x) in parts {
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        // eval mode draws nothing from the stream
        let out = model.forward(&mut tape, op, xv, Mode::Eval, &mut stream(0, Purpose::Dropout, 0))?;
        logp.push(tape.value(out.logp).clone());
        emb.push(tape.value(out.embedding).clone());
    }
    Ok((logp, emb))
}

/// Trains one stage to completion.
pub fn train_stage(
    stage: u8,
    arch: StageArchitecture,
    config: StageConfig,
    parts: &[PartitionInput],
    seed: u64,
) -> Result<StageOutput> {
    let mut t = StageTrainer::new(stage, arch, config, parts, seed)?;
    while !t.is_finished() {
        t.step_epoch()?;
    }
    t.finish()
}
