use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::color::rgb_to_lab;
use super::connectivity::enforce_connectivity;
use super::SuperpixelMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlicParams {
    /// Requested number of superpixels.
    pub superpixels: usize,
    /// Weight of spatial distance against color distance.
    pub compactness: f64,
    pub iterations: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            superpixels: 100,
            compactness: 10.0,
            iterations: 10,
        }
    }
}

impl SlicParams {
    pub fn with_superpixels(superpixels: usize) -> Self {
        Self {
            superpixels,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy)]
struct Center {
    lab: [f64; 3],
    x: f64,
    y: f64,
}

/// SLIC: localized k-means in CIELAB + xy space, then connectivity
/// enforcement.
///
/// Centers start on a `nx × ny` grid with `nx·ny ≈ superpixels`, nudged to
/// the lowest color gradient in their 3×3 neighborhood. Each pixel is
/// assigned to the nearest center within a window of half-width `S`, using
/// `d = d_lab + (compactness / S)·d_xy` with `S = sqrt(W·H / superpixels)`.
pub fn slic_segment(image: &RgbImage, params: &SlicParams) -> Result<SuperpixelMap> {
    let (width, height) = image.dimensions();
    let (w, h) = (width as usize, height as usize);
    let n = w * h;
    if n == 0 {
        return Err(Error::InvalidArgument("image is empty".into()));
    }
    let k = params.superpixels;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "requested {k} superpixels for {n} pixels"
        )));
    }

    let lab: Vec<[f64; 3]> = image.pixels().map(|p| rgb_to_lab(p.0)).collect();
    let s = (n as f64 / k as f64).sqrt();
    let nx = ((k as f64 * w as f64 / h as f64).sqrt().ceil() as usize).clamp(1, w);
    let ny = ((k as f64 / nx as f64).round() as usize).clamp(1, h);
    let cell_w = w as f64 / nx as f64;
    let cell_h = h as f64 / ny as f64;

    let gradient = |x: usize, y: usize| -> f64 {
        let at = |xx: usize, yy: usize| lab[yy * w + xx];
        let (x0, x1) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let (y0, y1) = (y.saturating_sub(1), (y + 1).min(h - 1));
        let dx = sq_dist(&at(x1, y), &at(x0, y));
        let dy = sq_dist(&at(x, y1), &at(x, y0));
        dx + dy
    };

    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let mut cx = (((i as f64 + 0.5) * cell_w) as usize).min(w - 1);
            let mut cy = (((j as f64 + 0.5) * cell_h) as usize).min(h - 1);
            let mut best = gradient(cx, cy);
            let (ox, oy) = (cx, cy);
            for yy in oy.saturating_sub(1)..=(oy + 1).min(h - 1) {
                for xx in ox.saturating_sub(1)..=(ox + 1).min(w - 1) {
                    let g = gradient(xx, yy);
                    if g < best {
                        best = g;
                        cx = xx;
                        cy = yy;
                    }
                }
            }
            centers.push(Center {
                lab: lab[cy * w + cx],
                x: cx as f64,
                y: cy as f64,
            });
        }
    }

    let radius = s.max(cell_w).max(cell_h).ceil();
    let spatial = params.compactness / s;
    let mut assign = vec![u32::MAX; n];
    let mut dist = vec![f64::INFINITY; n];

    for _ in 0..params.iterations.max(1) {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (ci, c) in centers.iter().enumerate() {
            let x0 = (c.x - radius).max(0.0) as usize;
            let x1 = ((c.x + radius) as usize).min(w - 1);
            let y0 = (c.y - radius).max(0.0) as usize;
            let y1 = ((c.y + radius) as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = y * w + x;
                    let dl = sq_dist(&lab[p], &c.lab).sqrt();
                    let dxy = ((x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2)).sqrt();
                    let d = dl + spatial * dxy;
                    if d < dist[p] {
                        dist[p] = d;
                        assign[p] = ci as u32;
                    }
                }
            }
        }

        let mut acc = vec![[0.0f64; 6]; centers.len()];
        for (p, &a) in assign.iter().enumerate() {
            if a == u32::MAX {
                continue;
            }
            let e = &mut acc[a as usize];
            e[0] += lab[p][0];
            e[1] += lab[p][1];
            e[2] += lab[p][2];
            e[3] += (p % w) as f64;
            e[4] += (p / w) as f64;
            e[5] += 1.0;
        }
        for (c, e) in centers.iter_mut().zip(&acc) {
            if e[5] > 0.0 {
                c.lab = [e[0] / e[5], e[1] / e[5], e[2] / e[5]];
                c.x = e[3] / e[5];
                c.y = e[4] / e[5];
            }
        }
    }

    Ok(enforce_connectivity(&assign, width, height, k))
}

fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn single_pixel() {
        let img = RgbImage::from_pixel(1, 1, Rgb([10, 20, 30]));
        let m = slic_segment(&img, &SlicParams::with_superpixels(1)).unwrap();
        assert_eq!(m.node_count(), 1);
        assert_eq!(m.labels(), &[0]);
    }

    #[test]
    fn too_many_superpixels_is_error() {
        let img = RgbImage::from_pixel(3, 3, Rgb([0, 0, 0]));
        assert!(slic_segment(&img, &SlicParams::with_superpixels(10)).is_err());
        assert!(slic_segment(&img, &SlicParams::with_superpixels(0)).is_err());
    }

    #[test]
    fn uniform_image_gives_even_squares() {
        let img = RgbImage::from_pixel(64, 64, Rgb([90, 140, 60]));
        let m = slic_segment(&img, &SlicParams::with_superpixels(4)).unwrap();
        assert_eq!(m.node_count(), 4);
        for s in m.sizes() {
            assert!((768..=1280).contains(&s), "size {s}");
        }
    }

    #[test]
    fn two_tone_split_is_pure() {
        let img = RgbImage::from_fn(64, 64, |x, _| {
            if x < 32 {
                Rgb([220, 30, 30])
            } else {
                Rgb([30, 30, 220])
            }
        });
        let m = slic_segment(&img, &SlicParams::with_superpixels(2)).unwrap();
        let mut tone = vec![None; m.node_count()];
        for y in 0..64 {
            for x in 0..64 {
                let t = x < 32;
                let slot = &mut tone[m.get(x, y) as usize];
                assert!(slot.is_none_or(|v| v == t), "mixed superpixel");
                *slot = Some(t);
            }
        }
    }

    #[test]
    fn deterministic() {
        let img = RgbImage::from_fn(40, 30, |x, y| Rgb([(x * 6) as u8, (y * 8) as u8, ((x * y) % 256) as u8]));
        let p = SlicParams::with_superpixels(12);
        assert_eq!(slic_segment(&img, &p).unwrap(), slic_segment(&img, &p).unwrap());
    }
}
