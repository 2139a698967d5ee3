use super::SuperpixelMap;
use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;
use crate::raster::FeatureMap;

/// Average-pools a feature map over superpixel regions.
///
/// The superpixel map is resampled to the feature grid by nearest neighbor.
/// A node whose region disappears under resampling takes the features of
/// the cell under its centroid.
pub fn pool_features(features: &FeatureMap, spmap: &SuperpixelMap) -> Result<DenseMatrix> {
    let (c, hf, wf) = (features.channels(), features.height(), features.width());
    if c == 0 || hf == 0 || wf == 0 {
        return Err(Error::InvalidArgument("feature map is empty".into()));
    }
    let (w, h) = (spmap.width() as usize, spmap.height() as usize);
    if hf > h || wf > w {
        return Err(Error::InvalidArgument(format!(
            "feature grid {hf}x{wf} is larger than the {h}x{w} image"
        )));
    }

    let nodes = spmap.node_count();
    let mut out = DenseMatrix::zeros(nodes, c);
    let mut counts = vec![0usize; nodes];
    for fy in 0..hf {
        let y = (((fy as f64 + 0.5) * h as f64 / hf as f64) as usize).min(h - 1);
        for fx in 0..wf {
            let x = (((fx as f64 + 0.5) * w as f64 / wf as f64) as usize).min(w - 1);
            let node = spmap.get(x as u32, y as u32) as usize;
            counts[node] += 1;
            let row = out.row_mut(node);
            for (ch, v) in row.iter_mut().enumerate() {
                *v += features.get(ch, fy, fx);
            }
        }
    }

    let centroids = spmap.centroids();
    for node in 0..nodes {
        let row = out.row_mut(node);
        if counts[node] > 0 {
            let k = counts[node] as f64;
            row.iter_mut().for_each(|v| *v /= k);
        } else {
            let (cx, cy) = centroids[node];
            let fx = ((cx + 0.5) * wf as f64 / w as f64) as usize;
            let fy = ((cy + 0.5) * hf as f64 / h as f64) as usize;
            let (fx, fy) = (fx.min(wf - 1), fy.min(hf - 1));
            for (ch, v) in row.iter_mut().enumerate() {
                *v = features.get(ch, fy, fx);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_column_average() {
        let sp = SuperpixelMap::from_labels(2, 2, vec![0, 1, 0, 1]).unwrap();
        let f = FeatureMap::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = pool_features(&f, &sp).unwrap();
        assert_eq!(x, DenseMatrix::from_rows(&[[2.0], [3.0]]));
    }

    #[test]
    fn constant_map() {
        let sp = SuperpixelMap::from_labels(4, 4, (0..16).map(|p| (p / 8) as u32).collect()).unwrap();
        let f = FeatureMap::new(2, 2, 2, vec![0.7; 8]).unwrap();
        let x = pool_features(&f, &sp).unwrap();
        assert!(x.as_slice().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn identity_pooling() {
        let sp = SuperpixelMap::from_labels(3, 2, (0..6).collect()).unwrap();
        let data: Vec<f64> = (0..12).map(|v| v as f64 * 0.5).collect();
        let f = FeatureMap::new(2, 2, 3, data).unwrap();
        let x = pool_features(&f, &sp).unwrap();
        for node in 0..6 {
            assert_eq!(x.get(node, 0), f.get(0, node / 3, node % 3));
            assert_eq!(x.get(node, 1), f.get(1, node / 3, node % 3));
        }
    }

    #[test]
    fn vanished_region_uses_centroid_cell() {
        // a 1-pixel superpixel at (0,0) in a 4x4 image pooled on a 2x2 grid
        let mut labels = vec![0u32; 16];
        labels[0] = 1;
        let sp = SuperpixelMap::from_labels(4, 4, labels).unwrap();
        let f = FeatureMap::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = pool_features(&f, &sp).unwrap();
        assert_eq!(x.get(1, 0), 1.0);
        assert_eq!(x.get(0, 0), 2.5);
    }

    #[test]
    fn empty_feature_map_is_error() {
        let sp = SuperpixelMap::from_labels(1, 1, vec![0]).unwrap();
        assert!(pool_features(&FeatureMap::zeros(0, 1, 1), &sp).is_err());
    }
}
