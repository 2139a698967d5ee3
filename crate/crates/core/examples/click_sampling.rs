//! Simulates clicks at each click fraction and shows how many land per
//! image.
//!
//! cargo run --example click_sampling -- [superpixels]

use hgcn::io::{synthesize, SyntheticSpec};
use hgcn::superpixel::{slic_segment, weak_labels_to_nodes, SlicParams};
use hgcn::training::{click_count, sample_clicks};

fn main() -> hgcn::Result<()> {
    let superpixels = std::env::args().nth(1).map_or(100, |s| s.parse().expect("superpixel count"));
    let data = synthesize(&SyntheticSpec::new(4, 96, 4, 2))?;
    for fraction in [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0] {
        let mut line = format!("fraction {fraction:<8}");
        for (i, d) in data.iter().enumerate() {
            let sp = slic_segment(&d.image, &SlicParams::with_superpixels(superpixels))?;
            let clicks = sample_clicks(&d.ground_truth, &sp, fraction, 1, i)?;
            let nodes = weak_labels_to_nodes(&clicks, &sp)?;
            line += &format!(
                "  {}/{} of {}",
                clicks.labeled_count(),
                click_count(fraction, sp.node_count()),
                sp.node_count()
            );
            assert_eq!(nodes.labeled_count(), clicks.labeled_count());
        }
        println!("{line}");
    }
    Ok(())
}
