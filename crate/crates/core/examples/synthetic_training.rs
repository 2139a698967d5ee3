//! Trains the three-stage model on a generated shape dataset with
//! simulated clicks and prints per-stage mIoU.
//!
//! cargo run --release --example synthetic_training -- [seed] [superpixels] [hidden] [epochs]

use std::time::Instant;

use hgcn::graph::HyperedgeMode;
use hgcn::io::{synthesize, SyntheticSpec};
use hgcn::training::{run_pipeline, PipelineConfig, RunControl, StageConfig, WeakSignal};

fn main() -> hgcn::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let arg = |i: usize, d: u64| args.get(i).copied().unwrap_or(d);
    let seed = arg(0, 1);
    let samples: Vec<_> = synthesize(&SyntheticSpec {
        noise: 40.0,
        ..SyntheticSpec::new(20, 64, 4, seed)
    })?
        .iter()
        .map(|s| s.to_sample())
        .collect();
    let config = PipelineConfig {
        superpixels: arg(1, 50) as usize,
        feature_cell: 2,
        weak: WeakSignal::Clicks { fraction: 1.0 / 8.0 },
        classes: 4,
        hidden: arg(2, 64) as usize,
        hyperedges: HyperedgeMode::Pairwise,
        stage: StageConfig {
            max_epochs: arg(3, 200) as usize,
            ..Default::default()
        },
        ..Default::default()
    };
    let start = Instant::now();
    let out = run_pipeline(&samples, &config, seed, RunControl::default())?.finished()?;
    println!("nodes {} labeled {} partitions {}", out.node_count, out.labeled_nodes, out.plan.tau);
    for s in &out.stages {
        println!(
            "L{}: epochs {:4} best val {:>8} train mIoU {:.4}",
            s.stage,
            s.epochs,
            s.best_val.map_or("-".into(), |v| format!("{v:.4}")),
            s.train_miou.unwrap_or(f64::NAN)
        );
    }
    println!("all-background mIoU {:.4}", out.baseline_miou.unwrap_or(f64::NAN));
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
