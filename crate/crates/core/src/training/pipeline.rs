use std::ops::Range;
use std::sync::Arc;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::clicks::sample_clicks;
use super::pseudo::{node_classes, project_to_pixels};
use super::split::{split_weak_labels, SplitRole};
use super::stage::{infer_stage, EpochRecord, PartitionInput, StageConfig, StageProgress, StageTrainer};
use crate::error::{Error, Result};
use crate::graph::{
    build_hypergraph, build_knn_graph, build_spatial_graph, normalized_graph_operator,
    normalized_hypergraph_operator, plan_partition, HyperedgeMode, PartitionPlan, SparseAffinityGraph,
};
use crate::io::{evaluate_miou, MiouReport};
use crate::layers::{StageArchitecture, StageModel};
use crate::numeric::{DenseMatrix, SparseMatrix};
use crate::raster::{FeatureMap, LabelMap, UNLABELED};
use crate::rng::{stream, Purpose};
use crate::superpixel::{
    builtin_feature_extract, pool_features, slic_segment, weak_labels_to_nodes, SlicParams, SuperpixelMap,
    WeakNodeLabels,
};

/// Source of the sparse supervision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum WeakSignal {
    /// Use each sample's weak annotation raster.
    Scribbles,
    /// Simulate clicks on a fraction of each image's superpixels from the
    /// dense ground truth.
    Clicks { fraction: f64 },
}

/// What stages 2 and 3 take as node input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageInput {
    /// The pooled features `X`.
    #[default]
    Features,
    /// The previous stage's embedding tap.
    PreviousEmbedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub superpixels: usize,
    pub compactness: f64,
    pub slic_iterations: usize,
    /// Downscale factor of the built-in feature extractor.
    pub feature_cell: usize,
    pub max_nodes: usize,
    pub knn: usize,
    pub weak: WeakSignal,
    /// Validation share of the labeled nodes; defaults to 5% for
    /// scribbles and 1% for clicks.
    pub val_fraction: Option<f64>,
    pub classes: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub hyperedges: HyperedgeMode,
    pub stage_input: StageInput,
    pub stage: StageConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            superpixels: 100,
            compactness: 10.0,
            slic_iterations: 10,
            feature_cell: 8,
            max_nodes: 40_000,
            knn: 10,
            weak: WeakSignal::Scribbles,
            val_fraction: None,
            classes: 21,
            hidden: 256,
            dropout: 0.5,
            hyperedges: HyperedgeMode::PerNode,
            stage_input: StageInput::Features,
            stage: StageConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn val_fraction(&self) -> f64 {
        self.val_fraction.unwrap_or(match self.weak {
            WeakSignal::Scribbles => 0.05,
            WeakSignal::Clicks { .. } => 0.01,
        })
    }

    pub fn slic(&self) -> SlicParams {
        SlicParams {
            superpixels: self.superpixels,
            compactness: self.compactness,
            iterations: self.slic_iterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(2..=255).contains(&self.classes) {
            return bad(format!("classes must be in 2..=255, got {}", self.classes));
        }
        if self.superpixels == 0 || self.max_nodes == 0 || self.knn == 0 || self.feature_cell == 0 {
            return bad("superpixels, max_nodes, knn and feature_cell must be positive".into());
        }
        if let WeakSignal::Clicks { fraction } = self.weak {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return bad(format!("click fraction {fraction} outside (0, 1]"));
            }
        }
        if !(self.stage.lr > 0.0) || !(self.stage.scheduler.min_lr < self.stage.lr) {
            return bad("need 0 < min_lr < lr".into());
        }
        Ok(())
    }
}

/// SHA-256 over the JSON form of the configuration and the seed.
pub fn config_hash(config: &PipelineConfig, seed: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    h.update(seed.to_le_bytes());
    h.finalize().into()
}

/// One input image with its optional rasters.
#[derive(Debug, Clone)]
pub struct Sample {
    pub name: String,
    pub image: RgbImage,
    pub ground_truth: Option<LabelMap>,
    pub weak: Option<LabelMap>,
    pub features: Option<FeatureMap>,
}

#[derive(Debug, Clone)]
pub struct PartitionGraph {
    pub images: Vec<usize>,
    pub nodes: Range<usize>,
    pub spatial: SparseAffinityGraph,
}

/// Everything computed before training: superpixels, pooled features,
/// weak node labels, the partition plan and spatial graphs.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub spmaps: Vec<SuperpixelMap>,
    pub features: DenseMatrix,
    pub node_offsets: Vec<usize>,
    pub weak_maps: Vec<LabelMap>,
    pub weak: WeakNodeLabels,
    pub plan: PartitionPlan,
    pub partitions: Vec<PartitionGraph>,
}

/// Segments, pools, projects weak signals, partitions and builds the
/// spatial graphs. Images are processed in parallel; each result depends
/// only on its own image.
pub fn prepare(samples: &[Sample], config: &PipelineConfig, seed: u64) -> Result<PreparedData> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no images".into()));
    }
    let slic = config.slic();
    let per_image: Vec<(SuperpixelMap, DenseMatrix, LabelMap)> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let sp = slic_segment(&s.image, &slic)?;
            let fm = match &s.features {
                Some(f) => f.clone(),
                None => builtin_feature_extract(&s.image, config.feature_cell)?,
            };
            let x = pool_features(&fm, &sp)?;
            // images without a usable weak signal contribute no labels
            let weak = match (config.weak, &s.weak, &s.ground_truth) {
                (WeakSignal::Scribbles, Some(w), _) => w.clone(),
                (WeakSignal::Clicks { fraction }, _, Some(gt)) => sample_clicks(gt, &sp, fraction, seed, i)?,
                _ => LabelMap::filled(s.image.width(), s.image.height(), UNLABELED),
            };
            Ok((sp, x, weak))
        })
        .collect::<Result<_>>()?;

    let channels = per_image[0].1.cols();
    if let Some((i, _)) = per_image.iter().enumerate().find(|(_, p)| p.1.cols() != channels) {
        return Err(Error::InvalidArgument(format!(
            "image {} has {} feature channels, expected {channels}",
            samples[i].name,
            per_image[i].1.cols()
        )));
    }
    let mut spmaps = Vec::with_capacity(samples.len());
    let mut feats = Vec::with_capacity(samples.len());
    let mut weak_maps = Vec::with_capacity(samples.len());
    let mut weak_parts = Vec::with_capacity(samples.len());
    let mut node_offsets = vec![0];
    for (sp, x, w) in per_image {
        weak_parts.push(weak_labels_to_nodes(&w, &sp)?);
        for c in weak_parts.last().unwrap().0.iter().flatten() {
            if *c as usize >= config.classes {
                return Err(Error::InvalidArgument(format!(
                    "weak label {c} outside {} classes",
                    config.classes
                )));
            }
        }
        node_offsets.push(node_offsets.last().unwrap() + sp.node_count());
        spmaps.push(sp);
        feats.push(x);
        weak_maps.push(w);
    }
    let features = DenseMatrix::vstack(&feats.iter().collect::<Vec<_>>())?;
    let weak = WeakNodeLabels::concat(&weak_parts);

    let plan = plan_partition(samples.len(), config.superpixels, config.max_nodes);
    let partitions = (0..plan.tau)
        .into_par_iter()
        .map(|p| {
            let images = plan.images_of(p);
            let nodes = node_offsets[images[0]]..node_offsets[images[images.len() - 1] + 1];
            let maps: Vec<&SuperpixelMap> = images.iter().map(|&i| &spmaps[i]).collect();
            let x = features.select_rows(&nodes.clone().collect::<Vec<_>>());
            let spatial = build_spatial_graph(&maps, &images, &x)?;
            Ok(PartitionGraph { images, nodes, spatial })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedData {
        spmaps,
        features,
        node_offsets,
        weak_maps,
        weak,
        plan,
        partitions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletedStage {
    pub state: Vec<DenseMatrix>,
    pub history: Vec<EpochRecord>,
}

/// Resumable run state: finished stages plus the one in progress.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineCheckpoint {
    pub config_hash: [u8; 32],
    pub seed: u64,
    pub completed: Vec<CompletedStage>,
    pub current: Option<StageProgress>,
}

#[derive(Default)]
pub struct RunControl {
    pub resume: Option<PipelineCheckpoint>,
    /// Stop after this many epochs in this invocation and hand back a
    /// checkpoint.
    pub halt_after_epochs: Option<usize>,
    pub verbose: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: u8,
    pub epochs: usize,
    pub best_val: Option<f64>,
    /// Pixel mIoU on the images with ground truth, weak labels kept.
    pub train_miou: Option<f64>,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub pseudo_labels: Vec<LabelMap>,
    pub stages: Vec<StageReport>,
    pub final_report: Option<MiouReport>,
    /// mIoU of predicting class 0 everywhere.
    pub baseline_miou: Option<f64>,
    pub plan: PartitionPlan,
    pub node_count: usize,
    pub labeled_nodes: usize,
    pub models: Vec<StageModel>,
    pub checkpoint: PipelineCheckpoint,
}

pub enum PipelineRun {
    Finished(Box<PipelineOutput>),
    Halted(Box<PipelineCheckpoint>),
}

impl PipelineRun {
    pub fn finished(self) -> Result<PipelineOutput> {
        match self {
            PipelineRun::Finished(o) => Ok(*o),
            PipelineRun::Halted(_) => Err(Error::InvalidArgument("run halted before completion".into())),
        }
    }
}

fn stage_arch(stage: u8, input: usize, config: &PipelineConfig) -> Result<StageArchitecture> {
    Ok(StageArchitecture::for_stage(stage, input)?
        .with_widths(config.hidden, config.classes)
        .with_dropout(config.dropout))
}

/// Rebuilds a stage model from a stored state list.
pub fn model_from_state(arch: StageArchitecture, state: &[DenseMatrix]) -> Result<StageModel> {
    let mut m = StageModel::new(arch, &mut stream(0, Purpose::Init, 0))?;
    m.load_state(state)?;
    Ok(m)
}

fn miou_of(classes: &[u8], prep: &PreparedData, gts: &[Option<LabelMap>], n_classes: usize) -> Result<Option<MiouReport>> {
    let maps = project_to_pixels(classes, &prep.spmaps)?;
    let (p, g): (Vec<LabelMap>, Vec<LabelMap>) = maps
        .into_iter()
        .zip(gts)
        .filter_map(|(m, g)| g.clone().map(|g| (m, g)))
        .unzip();
    if g.is_empty() {
        return Ok(None);
    }
    match evaluate_miou(&p, &g, n_classes) {
        Ok(r) => Ok(Some(r)),
        Err(Error::EmptyEvaluation) => Ok(None),
        Err(e) => Err(e),
    }
}

/// The full three-stage procedure: graph stage on the spatial graphs, then
/// two hypergraph stages whose k-NN graphs come from the previous stage's
/// embedding tap. Returns pseudo-labels for stage 3 with weak labels kept.
pub fn run_pipeline(samples: &[Sample], config: &PipelineConfig, seed: u64, control: RunControl) -> Result<PipelineRun> {
    let prep = prepare(samples, config, seed)?;
    run_prepared(&prep, samples, config, seed, control)
}

pub fn run_prepared(
    prep: &PreparedData,
    samples: &[Sample],
    config: &PipelineConfig,
    seed: u64,
    control: RunControl,
) -> Result<PipelineRun> {
    let hash = config_hash(config, seed);
    let mut ckpt = match control.resume {
        Some(c) if c.config_hash != hash || c.seed != seed => return Err(Error::ConfigMismatch),
        Some(c) => c,
        None => PipelineCheckpoint {
            config_hash: hash,
            seed,
            completed: Vec::new(),
            current: None,
        },
    };
    let split = split_weak_labels(&prep.weak, config.val_fraction(), seed)?;
    let train = split.labels_for(&prep.weak, SplitRole::Train);
    let val = split.labels_for(&prep.weak, SplitRole::Val);
    let gts: Vec<Option<LabelMap>> = samples.iter().map(|s| s.ground_truth.clone()).collect();
    let x_parts: Vec<DenseMatrix> = prep
        .partitions
        .iter()
        .map(|p| prep.features.select_rows(&p.nodes.clone().collect::<Vec<_>>()))
        .collect();

    let mut budget = control.halt_after_epochs;
    let mut prev_emb: Option<Vec<DenseMatrix>> = None;
    let mut reports = Vec::new();
    let mut models = Vec::new();
    let mut last_classes = Vec::new();
    for stage in 1..=3u8 {
        let ops: Vec<Arc<SparseMatrix>> = match &prev_emb {
            None => prep
                .partitions
                .iter()
                .map(|p| normalized_graph_operator(&p.spatial).0)
                .collect(),
            Some(emb) => prep
                .partitions
                .iter()
                .zip(emb)
                .map(|(p, e)| {
                    let n = e.rows();
                    let knn = if n < 2 {
                        SparseAffinityGraph::empty(p.spatial.origins.clone())
                    } else {
                        build_knn_graph(e, config.knn.min(n - 1), p.spatial.origins.clone())?
                    };
                    let hg = build_hypergraph(&p.spatial, &knn, config.hyperedges)?;
                    Ok(normalized_hypergraph_operator(&hg)?.0)
                })
                .collect::<Result<_>>()?,
        };
        let xs: &[DenseMatrix] = match (&prev_emb, config.stage_input) {
            (Some(e), StageInput::PreviousEmbedding) => e,
            _ => &x_parts,
        };
        let parts: Vec<PartitionInput> = prep
            .partitions
            .iter()
            .zip(ops)
            .zip(xs)
            .map(|((p, op), x)| PartitionInput {
                op,
                x: x.clone(),
                train: train[p.nodes.clone()].to_vec(),
                val: val[p.nodes.clone()].to_vec(),
            })
            .collect();
        let arch = stage_arch(stage, xs[0].cols(), config)?;

        let idx = stage as usize - 1;
        let (model, logp, emb, history) = if idx < ckpt.completed.len() {
            let done = &ckpt.completed[idx];
            let mut model = model_from_state(arch, &done.state)?;
            let (logp, emb) = infer_stage(&mut model, parts.iter().map(|p| (&p.op, &p.x)))?;
            (model, logp, emb, done.history.clone())
        } else {
            let trainer = match ckpt.current.take() {
                Some(p) if p.stage == stage => StageTrainer::resume(config.stage, &parts, seed, p)?,
                Some(_) => return Err(Error::Malformed("checkpoint stage out of order".into())),
                None => StageTrainer::new(stage, arch, config.stage, &parts, seed)?,
            };
            let mut trainer = trainer.verbose(control.verbose);
            while !trainer.is_finished() {
                if budget == Some(0) {
                    ckpt.current = Some(trainer.progress().clone());
                    return Ok(PipelineRun::Halted(Box::new(ckpt)));
                }
                trainer.step_epoch()?;
                budget = budget.map(|b| b - 1);
            }
            let out = trainer.finish()?;
            ckpt.completed.push(CompletedStage {
                state: out.model.state(),
                history: out.history.clone(),
            });
            (out.model, out.logp, out.embeddings, out.history)
        };

        let all = DenseMatrix::vstack(&logp.iter().collect::<Vec<_>>())?;
        let classes = node_classes(&all, &prep.weak)?;
        let report = miou_of(&classes, prep, &gts, config.classes)?;
        reports.push(StageReport {
            stage,
            epochs: history.len(),
            best_val: history
                .iter()
                .filter_map(|r| r.val_nll)
                .min_by(f64::total_cmp),
            train_miou: report.map(|r| r.miou),
            history,
        });
        models.push(model);
        last_classes = classes;
        prev_emb = Some(emb);
    }

    let pseudo_labels = project_to_pixels(&last_classes, &prep.spmaps)?;
    let final_report = miou_of(&last_classes, prep, &gts, config.classes)?;
    let baseline = miou_of(&vec![0; last_classes.len()], prep, &gts, config.classes)?;
    Ok(PipelineRun::Finished(Box::new(PipelineOutput {
        pseudo_labels,
        stages: reports,
        final_report,
        baseline_miou: baseline.map(|r| r.miou),
        plan: prep.plan.clone(),
        node_count: prep.features.rows(),
        labeled_nodes: prep.weak.labeled_count(),
        models,
        checkpoint: ckpt,
    })))
}
