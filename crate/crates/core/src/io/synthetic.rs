use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::annotation::{save_label_png, save_rgb};
use super::manifest::write_manifest;
use crate::error::{Error, Result};
use crate::raster::{LabelMap, UNLABELED};
use crate::rng::{stream, Purpose};
use crate::training::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub images: usize,
    pub size: u32,
    /// Including background class 0.
    pub classes: usize,
    pub seed: u64,
    pub max_shapes: usize,
    /// Amplitude of per-pixel noise; per-shape color jitter is twice this.
    pub noise: f64,
}

impl SyntheticSpec {
    pub fn new(images: usize, size: u32, classes: usize, seed: u64) -> Self {
        Self {
            images,
            size,
            classes,
            seed,
            max_shapes: 3,
            noise: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticImage {
    pub name: String,
    pub image: RgbImage,
    pub ground_truth: LabelMap,
    pub scribbles: LabelMap,
}

impl SyntheticImage {
    pub fn to_sample(&self) -> Sample {
        Sample {
            name: self.name.clone(),
            image: self.image.clone(),
            ground_truth: Some(self.ground_truth.clone()),
            weak: Some(self.scribbles.clone()),
            features: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Rect,
    Disk,
    Triangle,
}

impl Shape {
    fn contains(self, x: f64, y: f64, cx: f64, cy: f64, r: f64) -> bool {
        let (dx, dy) = (x - cx, y - cy);
        match self {
            Shape::Rect => dx.abs() <= r && dy.abs() <= 0.7 * r,
            Shape::Disk => dx * dx + dy * dy <= r * r,
            Shape::Triangle => dy >= -r && dy <= r && dx.abs() <= (dy + r) / 2.0,
        }
    }
}

/// Saturated color for shape class `c` (1-based), hues spread evenly.
fn class_color(c: usize, classes: usize) -> [f64; 3] {
    let h = (c - 1) as f64 / (classes - 1).max(1) as f64 * 0.85 * 6.0;
    let (s, v) = (0.75, 0.85);
    let f = h - h.floor();
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    let rgb = match h.floor() as u32 % 6 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    };
    rgb.map(|x| x * 255.0)
}

fn clamp8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// A 1-pixel-wide random walk that never leaves the pixels of `class`.
fn scribble(gt: &LabelMap, class: u8, len: usize, rng: &mut ChaCha8Rng, out: &mut LabelMap) {
    let (w, h) = gt.dims();
    let inside = |x: i64, y: i64| x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && gt.get(x as u32, y as u32) == class;
    let region: Vec<(i64, i64)> = (0..h as i64)
        .flat_map(|y| (0..w as i64).map(move |x| (x, y)))
        .filter(|&(x, y)| inside(x, y))
        .collect();
    if region.is_empty() {
        return;
    }
    let interior: Vec<(i64, i64)> = region
        .iter()
        .copied()
        .filter(|&(x, y)| [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().all(|d| inside(x + d.0, y + d.1)))
        .collect();
    let pool = if interior.is_empty() { &region } else { &interior };
    let (mut x, mut y) = pool[rng.gen_range(0..pool.len())];
    const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    let mut dir = rng.gen_range(0..4);
    out.set(x as u32, y as u32, class);
    for _ in 0..len {
        if rng.gen::<f64>() < 0.3 {
            dir = rng.gen_range(0..4);
        }
        let ok: Vec<usize> = (0..4)
            .map(|k| (dir + k) % 4)
            .filter(|&d| inside(x + DIRS[d].0, y + DIRS[d].1))
            .collect();
        let Some(&d) = ok.first() else { break };
        dir = d;
        x += DIRS[d].0;
        y += DIRS[d].1;
        out.set(x as u32, y as u32, class);
    }
}

fn one_image(spec: &SyntheticSpec, index: usize) -> SyntheticImage {
    let mut rng = stream(spec.seed, Purpose::Synthetic, index as u64);
    let n = spec.size;
    let s = n as f64;
    let mut image = RgbImage::new(n, n);
    let mut gt = LabelMap::filled(n, n, 0);

    let base = rng.gen_range(90.0..150.0);
    let (fx, fy, phase) = (rng.gen_range(0.1..0.5), rng.gen_range(0.1..0.5), rng.gen_range(0.0..6.3));
    for y in 0..n {
        for x in 0..n {
            let g = base + 25.0 * (x as f64 * fx + y as f64 * fy + phase).sin() + rng.gen_range(-1.2 * spec.noise..=1.2 * spec.noise);
            image.put_pixel(x, y, Rgb([clamp8(g), clamp8(g), clamp8(g + 10.0)]));
        }
    }

    let shapes = rng.gen_range(1..=spec.max_shapes.max(1));
    for _ in 0..shapes {
        let class = rng.gen_range(1..spec.classes);
        let kind = [Shape::Rect, Shape::Disk, Shape::Triangle][rng.gen_range(0..3)];
        let (cx, cy) = (rng.gen_range(0.2 * s..0.8 * s), rng.gen_range(0.2 * s..0.8 * s));
        let r = rng.gen_range(s / 8.0..s / 4.0);
        let jitter = 2.0 * spec.noise;
        let color = class_color(class, spec.classes).map(|c| c + rng.gen_range(-jitter..=jitter));
        for y in 0..n {
            for x in 0..n {
                if kind.contains(x as f64, y as f64, cx, cy, r) {
                    gt.set(x, y, class as u8);
                    let px = color.map(|c| clamp8(c + rng.gen_range(-spec.noise..=spec.noise)));
                    image.put_pixel(x, y, Rgb(px));
                }
            }
        }
    }

    let mut scribbles = LabelMap::filled(n, n, UNLABELED);
    let mut present = [false; 256];
    for &c in gt.as_slice() {
        present[c as usize] = true;
    }
    for c in (0..spec.classes).filter(|&c| present[c]) {
        scribble(&gt, c as u8, n as usize / 2, &mut rng, &mut scribbles);
    }
    SyntheticImage {
        name: format!("img_{index:04}"),
        image,
        ground_truth: gt,
        scribbles,
    }
}

/// Generates shape images on a textured background with dense ground
/// truth and one class-pure scribble per present class.
pub fn synthesize(spec: &SyntheticSpec) -> Result<Vec<SyntheticImage>> {
    if !(2..=21).contains(&spec.classes) {
        return Err(Error::InvalidArgument(format!("classes must be in 2..=21, got {}", spec.classes)));
    }
    if spec.size < 32 {
        return Err(Error::InvalidArgument(format!("size must be at least 32, got {}", spec.size)));
    }
    if spec.images == 0 {
        return Err(Error::InvalidArgument("need at least one image".into()));
    }
    Ok((0..spec.images).map(|i| one_image(spec, i)).collect())
}

/// Writes a synthetic dataset (images, ground truth, scribbles, manifest)
/// to `out_dir` and returns the manifest path.
pub fn gen_synthetic_dataset(spec: &SyntheticSpec, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = out_dir.as_ref();
    let data = synthesize(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut images = Vec::new();
    let mut gts = Vec::new();
    let mut weak = Vec::new();
    for d in &data {
        let (i, g, w) = (format!("{}.png", d.name), format!("{}_gt.png", d.name), format!("{}_scribble.png", d.name));
        save_rgb(&d.image, dir.join(&i))?;
        save_label_png(&d.ground_truth, dir.join(&g))?;
        save_label_png(&d.scribbles, dir.join(&w))?;
        images.push(i);
        gts.push(Some(g));
        weak.push(Some(w));
    }
    let manifest = dir.join("manifest.json");
    write_manifest(&manifest, &images, &gts, &weak, spec.classes)?;
    Ok(manifest)
}
