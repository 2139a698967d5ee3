//! Writes a feature file, a graph bundle and a short-run checkpoint to a
//! temporary directory and reads each back.
//!
//! cargo run --example formats

use hgcn::graph::plan_partition;
use hgcn::io::{
    load_bundle, load_checkpoint, load_features, save_bundle, save_checkpoint, save_features, synthesize,
    BundlePartition, GraphBundle, SyntheticSpec,
};
use hgcn::superpixel::builtin_feature_extract;
use hgcn::training::{prepare, run_pipeline, PipelineConfig, RunControl, StageConfig, WeakSignal};

fn main() -> hgcn::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let samples: Vec<_> = synthesize(&SyntheticSpec::new(4, 48, 3, 1))?.iter().map(|s| s.to_sample()).collect();

    let fm = builtin_feature_extract(&samples[0].image, 4)?;
    let p = dir.path().join("img.hgft");
    save_features(&fm, &p)?;
    let back = load_features(&p)?;
    let err = fm
        .as_slice()
        .iter()
        .zip(back.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    // values are stored as f32
    println!("features {}x{}x{}, {} bytes, max error {err:.1e}", fm.channels(), fm.height(), fm.width(), size(&p));

    let config = PipelineConfig {
        superpixels: 30,
        feature_cell: 4,
        classes: 3,
        hidden: 8,
        weak: WeakSignal::Clicks { fraction: 0.25 },
        stage: StageConfig { max_epochs: 5, ..Default::default() },
        ..Default::default()
    };
    let prep = prepare(&samples, &config, 1)?;
    let part = &prep.partitions[0];
    let bundle = GraphBundle {
        plan: plan_partition(samples.len(), config.superpixels, config.max_nodes),
        partitions: vec![BundlePartition {
            index: 0,
            origins: part.spatial.origins.clone(),
            spatial: part.spatial.adjacency.clone(),
            knn: None,
            hypergraph: None,
        }],
    };
    let p = dir.path().join("graphs.hggb");
    save_bundle(&bundle, &p)?;
    println!("bundle {} nodes, {} bytes, equal {}", part.nodes.len(), size(&p), load_bundle(&p)? == bundle);

    let ckpt = run_pipeline(&samples, &config, 1, RunControl::default())?.finished()?.checkpoint;
    let p = dir.path().join("run.hgck");
    save_checkpoint(&ckpt, &p)?;
    println!("checkpoint {} stages, {} bytes, equal {}", ckpt.completed.len(), size(&p), load_checkpoint(&p)? == ckpt);
    Ok(())
}

fn size(p: &std::path::Path) -> u64 {
    std::fs::metadata(p).map_or(0, |m| m.len())
}
