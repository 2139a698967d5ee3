//! Scores a noisy copy of synthetic ground truth and prints the per-class
//! table and the all-background baseline.
//!
//! cargo run --example miou_report -- [flip_rate]

use hgcn::io::{evaluate_miou, synthesize, SyntheticSpec};
use hgcn::raster::LabelMap;
use rand::{Rng, SeedableRng};

fn main() -> hgcn::Result<()> {
    let flip: f64 = std::env::args().nth(1).map_or(0.1, |s| s.parse().expect("rate"));
    let data = synthesize(&SyntheticSpec::new(5, 64, 4, 9))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let gts: Vec<LabelMap> = data.iter().map(|d| d.ground_truth.clone()).collect();
    let preds: Vec<LabelMap> = gts
        .iter()
        .map(|g| {
            let v = g
                .as_slice()
                .iter()
                .map(|&c| if rng.gen_bool(flip) { rng.gen_range(0..4) } else { c })
                .collect();
            LabelMap::new(g.width(), g.height(), v)
        })
        .collect::<hgcn::Result<_>>()?;
    let r = evaluate_miou(&preds, &gts, 4)?;
    for (c, v) in r.per_class.iter().enumerate() {
        println!("class {c}: {}", v.map_or("-".into(), |v| format!("{v:.4}")));
    }
    println!("mIoU {:.4} over {} pixels", r.miou, r.scored_pixels);
    let zeros: Vec<LabelMap> = gts.iter().map(|g| LabelMap::filled(g.width(), g.height(), 0)).collect();
    println!("all-background mIoU {:.4}", evaluate_miou(&zeros, &gts, 4)?.miou);
    Ok(())
}
