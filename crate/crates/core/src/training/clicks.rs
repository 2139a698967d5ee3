use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::raster::{LabelMap, UNLABELED};
use crate::rng::{stream, Purpose};
use crate::superpixel::SuperpixelMap;

/// Number of clicks for an image with `nodes` superpixels.
pub fn click_count(fraction: f64, nodes: usize) -> usize {
    ((fraction * nodes as f64).round() as usize).min(nodes)
}

/// The pixel a click on superpixel `node` lands on: the pixel nearest the
/// centroid, or, when that pixel belongs to another superpixel, the
/// closest pixel of `node` (lowest raster index on ties).
pub fn click_pixel(spmap: &SuperpixelMap, node: u32, centroid: (f64, f64)) -> (u32, u32) {
    let (w, h) = (spmap.width(), spmap.height());
    let cx = (centroid.0.round().max(0.0) as u32).min(w - 1);
    let cy = (centroid.1.round().max(0.0) as u32).min(h - 1);
    if spmap.get(cx, cy) == node {
        return (cx, cy);
    }
    let mut best = (f64::INFINITY, (cx, cy));
    for (p, &l) in spmap.labels().iter().enumerate() {
        if l != node {
            continue;
        }
        let (x, y) = ((p % w as usize) as u32, (p / w as usize) as u32);
        let d = (x as f64 - centroid.0).powi(2) + (y as f64 - centroid.1).powi(2);
        if d < best.0 {
            best = (d, (x, y));
        }
    }
    best.1
}

/// Simulated click annotation for one image.
///
/// `round(fraction · node_count)` superpixels are drawn without
/// replacement from the stream for `image`; each click copies the ground
/// truth class at its [`click_pixel`]. Clicks that land on ignored ground
/// truth are dropped.
pub fn sample_clicks(
    gt: &LabelMap,
    spmap: &SuperpixelMap,
    fraction: f64,
    seed: u64,
    image: usize,
) -> Result<LabelMap> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("click fraction {fraction} outside (0, 1]")));
    }
    if gt.dims() != (spmap.width(), spmap.height()) {
        return Err(Error::dims(
            "sample_clicks",
            (gt.height() as usize, gt.width() as usize),
            (spmap.height() as usize, spmap.width() as usize),
        ));
    }
    let n = spmap.node_count();
    let mut rng = stream(seed, Purpose::Clicks, image as u64);
    let mut picked = sample(&mut rng, n, click_count(fraction, n)).into_vec();
    picked.sort_unstable();
    let centroids = spmap.centroids();
    let mut out = LabelMap::filled(gt.width(), gt.height(), UNLABELED);
    for node in picked {
        let (x, y) = click_pixel(spmap, node as u32, centroids[node]);
        let c = gt.get(x, y);
        if c != UNLABELED {
            out.set(x, y, c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: u32, h: u32, cell: u32) -> SuperpixelMap {
        let per_row = w / cell;
        let labels = (0..w * h).map(|p| (p % w) / cell + (p / w) / cell * per_row).collect();
        SuperpixelMap::from_labels(w, h, labels).unwrap()
    }

    #[test]
    fn counts_follow_rounding() {
        assert_eq!(click_count(1.0 / 32.0, 100), 3);
        assert_eq!(click_count(1.0 / 8.0, 100), 13);
        assert_eq!(click_count(1.0 / 8.0, 4), 1);
        assert_eq!(click_count(1.0, 37), 37);
    }

    #[test]
    fn full_fraction_clicks_everything() {
        let sp = grid(8, 8, 2);
        let gt = LabelMap::new(8, 8, (0..64).map(|p| (p % 3) as u8).collect()).unwrap();
        let clicks = sample_clicks(&gt, &sp, 1.0, 1, 0).unwrap();
        assert_eq!(clicks.labeled_count(), 16);
        for y in 0..8 {
            for x in 0..8 {
                let c = clicks.get(x, y);
                assert!(c == UNLABELED || c == gt.get(x, y));
            }
        }
    }

    #[test]
    fn seeded() {
        let sp = grid(16, 16, 2);
        let gt = LabelMap::filled(16, 16, 1);
        let a = sample_clicks(&gt, &sp, 0.25, 9, 3).unwrap();
        assert_eq!(a, sample_clicks(&gt, &sp, 0.25, 9, 3).unwrap());
        assert_eq!(a.labeled_count(), 16);
        assert_ne!(a, sample_clicks(&gt, &sp, 0.25, 9, 4).unwrap());
    }

    #[test]
    fn centroid_outside_region() {
        // ring-shaped node 0 around node 1; the centroid of 0 sits in 1
        let labels: Vec<u32> = (0..25).map(|p| if p == 12 { 1 } else { 0 }).collect();
        let sp = SuperpixelMap::from_labels(5, 5, labels).unwrap();
        let (x, y) = click_pixel(&sp, 0, (2.0, 2.0));
        assert_eq!(sp.get(x, y), 0);
        assert_eq!((x, y), (2, 1));
    }
}
