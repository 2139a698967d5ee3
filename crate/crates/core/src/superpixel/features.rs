use image::RgbImage;

use super::color::{hue, rgb_to_lab};
use crate::error::{Error, Result};
use crate::raster::FeatureMap;

pub const BUILTIN_CHANNELS: usize = 16;
const HUE_BINS: usize = 8;

/// Hand-built per-cell color and position features.
///
/// Channels: mean RGB (3, in `[0,1]`), mean CIELAB (3, scaled by 1/100),
/// an 8-bin hue histogram over the surrounding 3×3 cells (8, sums to 1),
/// and the normalized cell position `x, y` (2). The grid is
/// `⌊H/cell⌋ × ⌊W/cell⌋`; the last row and column of cells absorb any
/// remainder pixels.
pub fn builtin_feature_extract(image: &RgbImage, cell: usize) -> Result<FeatureMap> {
    if cell == 0 {
        return Err(Error::InvalidArgument("cell size must be at least 1".into()));
    }
    let (w, h) = (image.width() as usize, image.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::InvalidArgument("image is empty".into()));
    }
    let hf = (h / cell).max(1);
    let wf = (w / cell).max(1);
    let span = |i: usize, cells: usize, len: usize| {
        let start = (i * cell).min(len);
        let end = if i + 1 == cells { len } else { ((i + 1) * cell).min(len) };
        start..end
    };

    let mut out = FeatureMap::zeros(BUILTIN_CHANNELS, hf, wf);
    let mut hist = vec![[0.0f64; HUE_BINS]; hf * wf];
    for fy in 0..hf {
        for fx in 0..wf {
            let mut sums = [0.0f64; 6];
            let mut n = 0.0;
            for y in span(fy, hf, h) {
                for x in span(fx, wf, w) {
                    let px = image.get_pixel(x as u32, y as u32).0;
                    let lab = rgb_to_lab(px);
                    for c in 0..3 {
                        sums[c] += px[c] as f64 / 255.0;
                        sums[3 + c] += lab[c] / 100.0;
                    }
                    let bin = ((hue(px) * HUE_BINS as f64) as usize).min(HUE_BINS - 1);
                    hist[fy * wf + fx][bin] += 1.0;
                    n += 1.0;
                }
            }
            for (c, s) in sums.iter().enumerate() {
                out.set(c, fy, fx, s / n);
            }
            out.set(14, fy, fx, (fx as f64 + 0.5) / wf as f64);
            out.set(15, fy, fx, (fy as f64 + 0.5) / hf as f64);
        }
    }

    for fy in 0..hf {
        for fx in 0..wf {
            let mut agg = [0.0f64; HUE_BINS];
            for ny in fy.saturating_sub(1)..=(fy + 1).min(hf - 1) {
                for nx in fx.saturating_sub(1)..=(fx + 1).min(wf - 1) {
                    for (a, v) in agg.iter_mut().zip(&hist[ny * wf + nx]) {
                        *a += v;
                    }
                }
            }
            let total: f64 = agg.iter().sum();
            for (b, a) in agg.iter().enumerate() {
                out.set(6 + b, fy, fx, a / total);
            }
        }
    }
    Ok(out)
}
