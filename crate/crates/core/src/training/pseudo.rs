use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;
use crate::raster::LabelMap;
use crate::superpixel::{SuperpixelMap, WeakNodeLabels};

/// Per-node class: the weak label where one exists, else the row argmax
/// (lowest class on ties).
pub fn node_classes(logp: &DenseMatrix, weak: &WeakNodeLabels) -> Result<Vec<u8>> {
    if logp.rows() != weak.len() {
        return Err(Error::dims("node_classes", logp.shape(), (weak.len(), logp.cols())));
    }
    if logp.cols() > 255 {
        return Err(Error::InvalidArgument("at most 255 classes fit a label map".into()));
    }
    Ok(logp
        .argmax_rows()
        .into_iter()
        .zip(&weak.0)
        .map(|(a, w)| w.unwrap_or(a as u8))
        .collect())
}

/// Paints each image's superpixels with their node classes. Nodes are
/// numbered image by image in the order of `spmaps`.
pub fn project_to_pixels(classes: &[u8], spmaps: &[SuperpixelMap]) -> Result<Vec<LabelMap>> {
    let total: usize = spmaps.iter().map(|s| s.node_count()).sum();
    if classes.len() != total {
        return Err(Error::InvalidArgument(format!(
            "{} node classes for {total} superpixels",
            classes.len()
        )));
    }
    let mut offset = 0;
    spmaps
        .iter()
        .map(|sp| {
            let data = sp.labels().iter().map(|&l| classes[offset + l as usize]).collect();
            offset += sp.node_count();
            LabelMap::new(sp.width(), sp.height(), data)
        })
        .collect()
}

pub fn generate_pseudo_labels(
    logp: &DenseMatrix,
    weak: &WeakNodeLabels,
    spmaps: &[SuperpixelMap],
) -> Result<Vec<LabelMap>> {
    project_to_pixels(&node_classes(logp, weak)?, spmaps)
}
