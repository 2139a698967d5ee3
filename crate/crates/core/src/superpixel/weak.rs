use serde::{Deserialize, Serialize};

use super::SuperpixelMap;
use crate::error::{Error, Result};
use crate::raster::{LabelMap, UNLABELED};

/// Per-node weak class, `None` where no weak signal touches the node.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WeakNodeLabels(pub Vec<Option<u8>>);

impl WeakNodeLabels {
    pub fn unlabeled(n: usize) -> Self {
        Self(vec![None; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labeled_count(&self) -> usize {
        self.0.iter().filter(|l| l.is_some()).count()
    }

    pub fn get(&self, i: usize) -> Option<u8> {
        self.0[i]
    }

    /// Concatenates per-image labels in order.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a WeakNodeLabels>) -> Self {
        Self(parts.into_iter().flat_map(|p| p.0.iter().copied()).collect())
    }
}

/// Projects pixel annotations onto superpixels by majority vote.
///
/// Ties go to the lowest class index; nodes without annotated pixels stay
/// unlabeled.
pub fn weak_labels_to_nodes(annotation: &LabelMap, spmap: &SuperpixelMap) -> Result<WeakNodeLabels> {
    if annotation.dims() != (spmap.width(), spmap.height()) {
        return Err(Error::dims(
            "weak_labels_to_nodes",
            (annotation.height() as usize, annotation.width() as usize),
            (spmap.height() as usize, spmap.width() as usize),
        ));
    }
    let mut votes = vec![[0u32; 255]; spmap.node_count()];
    for (&a, &node) in annotation.as_slice().iter().zip(spmap.labels()) {
        if a != UNLABELED {
            votes[node as usize][a as usize] += 1;
        }
    }
    let labels = votes
        .iter()
        .map(|v| {
            let (mut best, mut count) = (None, 0);
            for (c, &n) in v.iter().enumerate() {
                if n > count {
                    best = Some(c as u8);
                    count = n;
                }
            }
            best
        })
        .collect();
    Ok(WeakNodeLabels(labels))
}
