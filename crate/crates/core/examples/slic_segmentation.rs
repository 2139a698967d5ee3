//! Segments a synthetic image with SLIC and reports superpixel sizes and
//! connectivity. Pass an output path to also write the label map.
//!
//! cargo run --example slic_segmentation -- [superpixels] [out.png]

use hgcn::io::{save_label_png, synthesize, SyntheticSpec};
use hgcn::raster::LabelMap;
use hgcn::superpixel::{slic_segment, SlicParams};

fn main() -> hgcn::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let superpixels = args.first().map_or(100, |s| s.parse().expect("superpixel count"));
    let img = &synthesize(&SyntheticSpec::new(1, 96, 4, 3))?[0];
    let sp = slic_segment(&img.image, &SlicParams::with_superpixels(superpixels))?;
    let sizes = sp.sizes();
    println!(
        "requested {superpixels}, got {} superpixels, sizes {}..={}",
        sp.node_count(),
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    );
    let split = sp.component_counts().iter().filter(|&&c| c != 1).count();
    println!("superpixels with more than one component: {split}");
    if let Some(path) = args.get(1) {
        let labels = sp.labels().iter().map(|&l| (l % 255) as u8).collect();
        save_label_png(&LabelMap::new(sp.width(), sp.height(), labels)?, path)?;
        println!("wrote {path}");
    }
    Ok(())
}
