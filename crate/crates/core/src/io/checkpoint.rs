use std::path::Path;

use super::binary::{ByteReader, ByteWriter};
use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::layers::{StageArchitecture, StageOperator};
use crate::numeric::AdamState;
use crate::training::{
    model_from_state, CompletedStage, EpochRecord, PipelineCheckpoint, ReduceOnPlateau, SchedulerConfig,
    StageProgress,
};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HGCK";
pub const CHECKPOINT_VERSION: u16 = 1;

fn write_history(w: &mut ByteWriter, h: &[EpochRecord]) {
    w.usize(h.len());
    for r in h {
        w.usize(r.epoch);
        w.f64(r.train_nll);
        w.opt_f64(r.val_nll);
        w.f64(r.lr);
    }
}

fn read_history(r: &mut ByteReader) -> Result<Vec<EpochRecord>> {
    let n = r.len(25)?;
    (0..n)
        .map(|_| {
            Ok(EpochRecord {
                epoch: r.usize()?,
                train_nll: r.f64()?,
                val_nll: r.opt_f64()?,
                lr: r.f64()?,
            })
        })
        .collect()
}

fn write_arch(w: &mut ByteWriter, a: &StageArchitecture) {
    w.u8(match a.operator {
        StageOperator::Graph => 0,
        StageOperator::Hypergraph => 1,
    });
    for v in [a.input, a.hidden, a.classes, a.residual_layers] {
        w.usize(v);
    }
    w.f64(a.dropout);
    w.bool(a.batch_norm);
}

fn read_arch(r: &mut ByteReader) -> Result<StageArchitecture> {
    let operator = match r.u8()? {
        0 => StageOperator::Graph,
        1 => StageOperator::Hypergraph,
        b => return Err(Error::Malformed(format!("unknown operator tag {b}"))),
    };
    Ok(StageArchitecture {
        operator,
        input: r.usize()?,
        hidden: r.usize()?,
        classes: r.usize()?,
        residual_layers: r.usize()?,
        dropout: r.f64()?,
        batch_norm: r.bool()?,
    })
}

/// Encodes a resumable run as HGCK: magic, version, the 32-byte config
/// hash and seed, then every completed stage (parameter state and loss
/// history) and, if present, the stage in progress with its model,
/// optimizer moments, scheduler, best snapshot and history. All floats are
/// stored as raw `f64` bits, so a resumed run continues bit for bit.
pub fn encode_checkpoint(c: &PipelineCheckpoint) -> Vec<u8> {
    let mut w = ByteWriter::with_header(CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
    w.bytes(&c.config_hash);
    w.u64(c.seed);
    w.usize(c.completed.len());
    for s in &c.completed {
        w.dense_list(&s.state);
        write_history(&mut w, &s.history);
    }
    w.bool(c.current.is_some());
    if let Some(p) = &c.current {
        w.u8(p.stage);
        write_arch(&mut w, &p.model.arch);
        w.dense_list(&p.model.state());
        w.u64(p.adam.step);
        w.dense_list(&p.adam.first);
        w.dense_list(&p.adam.second);
        let s = &p.scheduler;
        w.f64(s.config.factor);
        w.usize(s.config.patience);
        w.f64(s.config.min_lr);
        w.f64(s.config.threshold);
        w.f64(s.lr);
        w.f64(s.best);
        w.usize(s.stalled);
        w.usize(s.epoch);
        w.usize(s.max_epochs);
        w.bool(p.best.is_some());
        if let Some((v, state)) = &p.best {
            w.f64(*v);
            w.dense_list(state);
        }
        write_history(&mut w, &p.history);
        w.bool(p.finished);
    }
    w.into_inner()
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<PipelineCheckpoint> {
    let mut r = ByteReader::with_header(bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
    let config_hash: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let seed = r.u64()?;
    let n = r.len(16)?;
    let completed = (0..n)
        .map(|_| {
            Ok(CompletedStage {
                state: r.dense_list()?,
                history: read_history(&mut r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let current = if r.bool()? {
        let stage = r.u8()?;
        let arch = read_arch(&mut r)?;
        let model = model_from_state(arch, &r.dense_list()?)?;
        let step = r.u64()?;
        let first = r.dense_list()?;
        let second = r.dense_list()?;
        let shapes: Vec<_> = model.tensors().iter().map(|m| m.shape()).collect();
        let ok = |ms: &[crate::numeric::DenseMatrix]| ms.iter().map(|m| m.shape()).eq(shapes.iter().copied());
        if !ok(&first) || !ok(&second) {
            return Err(Error::Malformed("optimizer moments do not match model".into()));
        }
        let config = SchedulerConfig {
            factor: r.f64()?,
            patience: r.usize()?,
            min_lr: r.f64()?,
            threshold: r.f64()?,
        };
        let scheduler = ReduceOnPlateau {
            config,
            lr: r.f64()?,
            best: r.f64()?,
            stalled: r.usize()?,
            epoch: r.usize()?,
            max_epochs: r.usize()?,
        };
        let best = if r.bool()? { Some((r.f64()?, r.dense_list()?)) } else { None };
        let history = read_history(&mut r)?;
        let finished = r.bool()?;
        Some(StageProgress {
            stage,
            model,
            adam: AdamState { first, second, step },
            scheduler,
            best,
            history,
            finished,
        })
    } else {
        None
    };
    r.finish()?;
    Ok(PipelineCheckpoint {
        config_hash,
        seed,
        completed,
        current,
    })
}

pub fn save_checkpoint(c: &PipelineCheckpoint, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_checkpoint(c))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<PipelineCheckpoint> {
    decode_checkpoint(&read_file(path.as_ref())?)
}
