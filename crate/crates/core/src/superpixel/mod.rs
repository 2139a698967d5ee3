//! Superpixel segmentation and everything that moves data between pixels
//! and superpixel nodes.

mod color;
mod connectivity;
mod features;
mod pooling;
mod slic;
mod weak;

pub use color::{hue, rgb_to_lab};
pub use connectivity::enforce_connectivity;
pub use features::{builtin_feature_extract, BUILTIN_CHANNELS};
pub use pooling::pool_features;
pub use slic::{slic_segment, SlicParams};
pub use weak::{weak_labels_to_nodes, WeakNodeLabels};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense per-pixel superpixel assignment.
///
/// Every pixel carries a label in `[0, node_count)`, every label occurs,
/// and each superpixel is 4-connected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperpixelMap {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    node_count: usize,
}

impl SuperpixelMap {
    /// Wraps labels that are already compact (`[0, node_count)`, all used).
    pub fn from_labels(width: u32, height: u32, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width as usize * height as usize || labels.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for a {width}x{height} superpixel map",
                labels.len()
            )));
        }
        let node_count = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let mut seen = vec![false; node_count];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("superpixel labels are not compact".into()));
        }
        Ok(Self {
            width,
            height,
            labels,
            node_count,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.labels[(y * self.width + x) as usize]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.node_count];
        for &l in &self.labels {
            s[l as usize] += 1;
        }
        s
    }

    /// Mean `(x, y)` pixel position of each superpixel.
    pub fn centroids(&self) -> Vec<(f64, f64)> {
        let mut acc = vec![(0.0, 0.0, 0usize); self.node_count];
        for y in 0..self.height {
            for x in 0..self.width {
                let a = &mut acc[self.get(x, y) as usize];
                a.0 += x as f64;
                a.1 += y as f64;
                a.2 += 1;
            }
        }
        acc.into_iter()
            .map(|(sx, sy, n)| (sx / n as f64, sy / n as f64))
            .collect()
    }

    /// Number of 4-connected components per label; 1 everywhere for a valid map.
    pub fn component_counts(&self) -> Vec<usize> {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut seen = vec![false; w * h];
        let mut counts = vec![0; self.node_count];
        let mut stack = Vec::new();
        for start in 0..w * h {
            if seen[start] {
                continue;
            }
            let l = self.labels[start];
            counts[l as usize] += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(p) = stack.pop() {
                let (x, y) = (p % w, p / w);
                for q in neighbors4(x, y, w, h) {
                    if !seen[q] && self.labels[q] == l {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        counts
    }
}

/// Indices of the in-bounds 4-neighbors of `(x, y)`.
pub(crate) fn neighbors4(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let mut out = [usize::MAX; 4];
    if x > 0 {
        out[0] = y * w + x - 1;
    }
    if x + 1 < w {
        out[1] = y * w + x + 1;
    }
    if y > 0 {
        out[2] = (y - 1) * w + x;
    }
    if y + 1 < h {
        out[3] = (y + 1) * w + x;
    }
    out.into_iter().filter(|&q| q != usize::MAX)
}
