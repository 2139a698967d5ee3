//! The `hgcn` command line.
//!
//! Every command runs inside a rayon pool sized by `HGCN_THREADS`
//! (default 1). Exit codes: 0 success, 1 runtime or data error, 2 usage
//! error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::HyperedgeMode;
use crate::io::{
    evaluate_miou, export_pseudo_labels, gen_synthetic_dataset, load_annotation, load_checkpoint, load_manifest,
    load_samples, save_bundle, save_checkpoint, AnnotationKind, BundlePartition, DatasetManifest, GraphBundle,
    SyntheticSpec,
};
use crate::training::{
    prepare, run_pipeline, PipelineConfig, PipelineOutput, PipelineRun, RunControl, WeakSignal,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const THREADS_VAR: &str = "HGCN_THREADS";
pub const RUN_FILE: &str = "run.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.hgck";
pub const PSEUDO_DIR: &str = "pseudo_labels";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Parser)]
#[command(name = "hgcn", version, about = "Pseudo-labels from scribbles or clicks via staged graph and hypergraph convolutions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic shape dataset with a manifest.
    GenSynthetic(GenSyntheticArgs),
    /// Segment, pool, partition and write the spatial graphs.
    BuildGraphs(BuildGraphsArgs),
    /// Train the three stages and export pseudo-labels.
    Train(TrainArgs),
    /// Export pseudo-labels from a finished checkpoint.
    Infer(InferArgs),
    /// Score label PNGs against dense ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenSyntheticArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub images: usize,
    #[arg(long, default_value_t = 64)]
    pub size: u32,
    /// Number of classes including background.
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub max_shapes: usize,
    /// Per-pixel noise amplitude.
    #[arg(long, default_value_t = 10.0)]
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HyperedgeArg {
    PerNode,
    Pairwise,
}

impl From<HyperedgeArg> for HyperedgeMode {
    fn from(a: HyperedgeArg) -> Self {
        match a {
            HyperedgeArg::PerNode => HyperedgeMode::PerNode,
            HyperedgeArg::Pairwise => HyperedgeMode::Pairwise,
        }
    }
}

/// Pipeline settings; each one overrides the value from `--config`.
#[derive(Debug, Default, Args)]
pub struct PipelineArgs {
    /// Requested superpixels per image.
    #[arg(long)]
    pub superpixels: Option<usize>,
    #[arg(long)]
    pub compactness: Option<f64>,
    #[arg(long)]
    pub feature_cell: Option<usize>,
    /// Node budget per partition graph.
    #[arg(long)]
    pub max_nodes: Option<usize>,
    #[arg(long)]
    pub knn: Option<usize>,
    /// Simulate clicks on this fraction of superpixels, e.g. 1/32.
    #[arg(long, value_parser = parse_fraction, conflicts_with = "scribbles")]
    pub clicks: Option<f64>,
    /// Use the manifest's scribble rasters.
    #[arg(long)]
    pub scribbles: bool,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// Defaults to the manifest's class count.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long, value_enum)]
    pub hyperedges: Option<HyperedgeArg>,
    /// Epoch cap per stage.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// A run file from an earlier run; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct BuildGraphsArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop after this many epochs and write a checkpoint.
    #[arg(long)]
    pub halt_after: Option<usize>,
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to the run file next to the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Defaults to the manifest named in the run file.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of `<stem>.png` predictions.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Report path; defaults to `eval.json` inside the prediction directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub manifest: PathBuf,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, &serde_json::to_value(self).expect("run config serializes"))
    }
}

/// Parses `a/b` or a decimal into a fraction in `(0, 1]`.
pub fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("not a fraction: {s:?}"))?,
    };
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("fraction {s} outside (0, 1]"))
    }
}

/// Reads the thread count from `HGCN_THREADS`; unset means 1.
pub fn thread_count(raw: Option<&str>) -> std::result::Result<usize, String> {
    match raw {
        None => Ok(1),
        Some(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("{THREADS_VAR} must be a positive integer, got {s:?}")),
        },
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = match thread_count(std::env::var(THREADS_VAR).ok().as_deref()) {
        Ok(n) => n,
        Err(m) => {
            eprintln!("error: {m}");
            return EXIT_USAGE;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| execute(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::GenSynthetic(a) => cmd_gen_synthetic(&a),
        Command::BuildGraphs(a) => cmd_build_graphs(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Infer(a) => cmd_infer(&a),
        Command::Eval(a) => cmd_eval(&a),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Error::io(p, e))
}

pub fn cmd_gen_synthetic(a: &GenSyntheticArgs) -> Result<()> {
    let spec = SyntheticSpec {
        max_shapes: a.max_shapes,
        noise: a.noise,
        ..SyntheticSpec::new(a.images, a.size, a.classes, a.seed)
    };
    let manifest = gen_synthetic_dataset(&spec, &a.out)?;
    println!("{}", manifest.display());
    Ok(())
}

fn apply(p: &PipelineArgs, c: &mut PipelineConfig) {
    macro_rules! set {
        ($($flag:ident => $($field:ident).+),* $(,)?) => {
            $(if let Some(v) = p.$flag { c.$($field).+ = v.into(); })*
        };
    }
    set!(
        superpixels => superpixels,
        compactness => compactness,
        feature_cell => feature_cell,
        max_nodes => max_nodes,
        knn => knn,
        classes => classes,
        hidden => hidden,
        dropout => dropout,
        hyperedges => hyperedges,
        epochs => stage.max_epochs,
        lr => stage.lr,
        weight_decay => stage.weight_decay,
    );
    if let Some(f) = p.clicks {
        c.weak = WeakSignal::Clicks { fraction: f };
    }
    if p.scribbles {
        c.weak = WeakSignal::Scribbles;
    }
    if p.val_fraction.is_some() {
        c.val_fraction = p.val_fraction;
    }
}

/// Merges `--config` with explicit flags and loads the manifest.
pub fn resolve_run(a: &RunArgs, command: &str) -> Result<(RunConfig, DatasetManifest)> {
    let base = a.config.as_deref().map(RunConfig::load).transpose()?;
    let manifest_path = match (&a.manifest, &base) {
        (Some(m), _) => absolute(m)?,
        (None, Some(b)) => b.manifest.clone(),
        (None, None) => return Err(Error::InvalidArgument("--manifest is required without --config".into())),
    };
    let manifest = load_manifest(&manifest_path)?;
    let mut pipeline = match &base {
        Some(b) => b.pipeline.clone(),
        None => PipelineConfig {
            classes: manifest.classes,
            ..PipelineConfig::default()
        },
    };
    apply(&a.pipeline, &mut pipeline);
    pipeline.validate()?;
    let run = RunConfig {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed: a.seed.or(base.as_ref().map(|b| b.seed)).unwrap_or(0),
        manifest: manifest_path,
        pipeline,
    };
    Ok((run, manifest))
}

pub fn cmd_build_graphs(a: &BuildGraphsArgs) -> Result<()> {
    let (run, manifest) = resolve_run(&a.run, "build-graphs")?;
    let samples = load_samples(&manifest)?;
    let prep = prepare(&samples, &run.pipeline, run.seed)?;
    create_dir(&a.out)?;
    run.save(&a.out.join(RUN_FILE))?;
    let mut bundles = Vec::new();
    for (p, part) in prep.partitions.iter().enumerate() {
        let bundle = GraphBundle {
            plan: prep.plan.clone(),
            partitions: vec![BundlePartition {
                index: p,
                origins: part.spatial.origins.clone(),
                spatial: part.spatial.adjacency.clone(),
                knn: None,
                hypergraph: None,
            }],
        };
        let name = format!("partition_{p:04}.hggb");
        save_bundle(&bundle, a.out.join(&name))?;
        bundles.push(json!({
            "file": name,
            "images": part.images.len(),
            "nodes": part.nodes.len(),
            "edges": part.spatial.edges().len(),
        }));
    }
    let plan = &prep.plan;
    let summary = json!({
        "alpha": plan.alpha,
        "xi": plan.xi,
        "mu": plan.mu,
        "tau": plan.tau,
        "gamma": plan.gamma,
        "nodes": prep.features.rows(),
        "partitions": bundles,
    });
    write_json(&a.out.join(SUMMARY_FILE), &summary)?;
    println!(
        "{} images, {} nodes, tau {} gamma {}",
        plan.alpha,
        prep.features.rows(),
        plan.tau,
        plan.gamma
    );
    Ok(())
}

fn stems(m: &DatasetManifest) -> Vec<String> {
    m.records.iter().map(|r| r.stem()).collect()
}

/// The metrics document written by `train`.
pub fn metrics_json(out: &PipelineOutput) -> serde_json::Value {
    let mut doc = serde_json::Map::new();
    for s in &out.stages {
        doc.insert(
            format!("L{}", s.stage),
            json!({
                "train_miou": s.train_miou,
                "epochs": s.epochs,
                "best_val": s.best_val,
                "history": s.history,
            }),
        );
    }
    doc.insert("final".into(), json!(out.final_report));
    doc.insert("baseline_miou".into(), json!(out.baseline_miou));
    doc.insert("nodes".into(), json!(out.node_count));
    doc.insert("labeled_nodes".into(), json!(out.labeled_nodes));
    doc.insert("tau".into(), json!(out.plan.tau));
    doc.insert("gamma".into(), json!(out.plan.gamma));
    serde_json::Value::Object(doc)
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let (run, manifest) = resolve_run(&a.run, "train")?;
    let samples = load_samples(&manifest)?;
    let resume = a.resume.as_deref().map(load_checkpoint).transpose()?;
    create_dir(&a.out)?;
    run.save(&a.out.join(RUN_FILE))?;
    let control = RunControl {
        resume,
        halt_after_epochs: a.halt_after,
        verbose: a.verbose,
    };
    let ckpt_path = a.out.join(CHECKPOINT_FILE);
    match run_pipeline(&samples, &run.pipeline, run.seed, control)? {
        PipelineRun::Halted(c) => {
            save_checkpoint(&c, &ckpt_path)?;
            println!("halted; checkpoint at {}", ckpt_path.display());
        }
        PipelineRun::Finished(out) => {
            export_pseudo_labels(&out.pseudo_labels, &stems(&manifest), a.out.join(PSEUDO_DIR))?;
            save_checkpoint(&out.checkpoint, &ckpt_path)?;
            write_json(&a.out.join(METRICS_FILE), &metrics_json(&out))?;
            for s in &out.stages {
                println!(
                    "L{}: epochs {} train mIoU {}",
                    s.stage,
                    s.epochs,
                    s.train_miou.map_or("-".into(), |v| format!("{v:.4}"))
                );
            }
        }
    }
    Ok(())
}

pub fn cmd_infer(a: &InferArgs) -> Result<()> {
    let config_path = match &a.config {
        Some(p) => p.clone(),
        None => a.checkpoint.parent().unwrap_or(Path::new(".")).join(RUN_FILE),
    };
    let mut run = RunConfig::load(&config_path)?;
    if let Some(m) = &a.manifest {
        run.manifest = absolute(m)?;
    }
    let manifest = load_manifest(&run.manifest)?;
    let samples = load_samples(&manifest)?;
    let control = RunControl {
        resume: Some(load_checkpoint(&a.checkpoint)?),
        halt_after_epochs: Some(0),
        verbose: false,
    };
    let out = run_pipeline(&samples, &run.pipeline, run.seed, control)?
        .finished()
        .map_err(|_| Error::InvalidArgument(format!("{}: training is not finished", a.checkpoint.display())))?;
    let written = export_pseudo_labels(&out.pseudo_labels, &stems(&manifest), &a.out)?;
    println!("wrote {} label maps to {}", written.len() - 1, a.out.display());
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for (i, r) in manifest.records.iter().enumerate() {
        let gt_path = r.annotation.as_ref().ok_or_else(|| Error::Manifest {
            field: format!("annotations[{i}]"),
            message: "dense ground truth is required for evaluation".into(),
        })?;
        let gt = load_annotation(gt_path, AnnotationKind::Dense, manifest.classes, manifest.ignore_index)?;
        let pred_path = a.pred.join(format!("{}.png", r.stem()));
        let pred = load_annotation(&pred_path, AnnotationKind::Dense, manifest.classes, 255)?;
        if pred.dims() != gt.dims() {
            return Err(Error::Image {
                path: pred_path,
                message: format!("size {:?} differs from ground truth {:?}", pred.dims(), gt.dims()),
            });
        }
        preds.push(pred);
        gts.push(gt);
    }
    let report = evaluate_miou(&preds, &gts, manifest.classes)?;
    println!("{:>6}  {:>8}", "class", "IoU");
    for (c, v) in report.per_class.iter().enumerate() {
        println!("{c:>6}  {:>8}", v.map_or("-".into(), |v| format!("{v:.4}")));
    }
    println!("mIoU {:.4}", report.miou);
    let out = a.out.clone().unwrap_or_else(|| a.pred.join("eval.json"));
    write_json(&out, &serde_json::to_value(&report).expect("report serializes"))
}
