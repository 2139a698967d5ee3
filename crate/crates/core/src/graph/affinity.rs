use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, SparseMatrix};
use crate::superpixel::{neighbors4, SuperpixelMap};

/// Where a graph node came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeOrigin {
    pub image: u32,
    pub superpixel: u32,
}

/// Symmetric weighted adjacency with zero diagonal and weights in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinityGraph {
    pub adjacency: SparseMatrix,
    pub origins: Vec<NodeOrigin>,
}

impl SparseAffinityGraph {
    pub fn node_count(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn empty(origins: Vec<NodeOrigin>) -> Self {
        let n = origins.len();
        Self {
            adjacency: SparseMatrix::zeros(n, n),
            origins,
        }
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency.triplets().filter(|&(i, j, _)| i < j).collect()
    }

    fn from_undirected(n: usize, weighted: &[(usize, usize, f64)], origins: Vec<NodeOrigin>) -> Result<Self> {
        let trip = weighted
            .iter()
            .flat_map(|&(i, j, w)| [(i, j, w), (j, i, w)]);
        Ok(Self {
            adjacency: SparseMatrix::from_triplets(n, n, trip)?,
            origins,
        })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Gaussian affinities `exp(−‖x_i − x_j‖² / σ²)` where σ is the mean
/// Euclidean edge length over the given edge set. When σ is zero every
/// weight is 1. Weights are floored at the smallest positive normal `f64`
/// so that an edge never vanishes.
pub fn gaussian_weights(edges: &[(usize, usize)], embeds: &DenseMatrix) -> Vec<(usize, usize, f64)> {
    if edges.is_empty() {
        return Vec::new();
    }
    let dists: Vec<f64> = edges
        .iter()
        .map(|&(i, j)| sq_dist(embeds.row(i), embeds.row(j)).sqrt())
        .collect();
    let sigma = dists.iter().sum::<f64>() / edges.len() as f64;
    edges
        .iter()
        .zip(&dists)
        .map(|(&(i, j), &d)| {
            let w = if sigma > 0.0 {
                (-(d * d) / (sigma * sigma)).exp().max(f64::MIN_POSITIVE)
            } else {
                1.0
            };
            (i, j, w)
        })
        .collect()
}

/// Region-adjacency graph over the superpixels of several images.
///
/// Nodes are numbered image by image in the order given. Two superpixels of
/// the same image are joined when some pair of 4-adjacent pixels carries
/// their two labels. No edge ever crosses images, so the adjacency is
/// block diagonal.
pub fn build_spatial_graph(
    spmaps: &[&SuperpixelMap],
    image_ids: &[usize],
    feats: &DenseMatrix,
) -> Result<SparseAffinityGraph> {
    if spmaps.len() != image_ids.len() {
        return Err(Error::InvalidArgument("one image id per superpixel map required".into()));
    }
    let total: usize = spmaps.iter().map(|m| m.node_count()).sum();
    if feats.rows() != total {
        return Err(Error::dims("build_spatial_graph", (total, feats.cols()), feats.shape()));
    }
    let mut origins = Vec::with_capacity(total);
    let mut pairs = Vec::new();
    let mut offset = 0;
    for (m, &img) in spmaps.iter().zip(image_ids) {
        let (w, h) = (m.width() as usize, m.height() as usize);
        let labels = m.labels();
        let mut local = Vec::new();
        for p in 0..w * h {
            let a = labels[p];
            // right and down neighbors cover every adjacent pair once
            for q in neighbors4(p % w, p / w, w, h).filter(|&q| q > p) {
                let b = labels[q];
                if a != b {
                    local.push((a.min(b) as usize + offset, a.max(b) as usize + offset));
                }
            }
        }
        local.sort_unstable();
        local.dedup();
        pairs.extend(local);
        origins.extend((0..m.node_count()).map(|s| NodeOrigin {
            image: img as u32,
            superpixel: s as u32,
        }));
        offset += m.node_count();
    }
    let weighted = gaussian_weights(&pairs, feats);
    SparseAffinityGraph::from_undirected(total, &weighted, origins)
}

/// The `k` nearest other nodes of `i`, nearest first; ties go to the lower
/// index.
fn nearest(embeds: &DenseMatrix, i: usize, k: usize) -> Vec<usize> {
    let xi = embeds.row(i);
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for j in 0..embeds.rows() {
        if j == i {
            continue;
        }
        let d = sq_dist(xi, embeds.row(j));
        if best.len() == k && d >= best[k - 1].0 {
            continue;
        }
        let pos = best.partition_point(|&(bd, bj)| bd < d || (bd == d && bj < j));
        best.insert(pos, (d, j));
        best.truncate(k);
    }
    best.into_iter().map(|(_, j)| j).collect()
}

/// Exact k-nearest-neighbor graph, symmetrized by union.
///
/// Every node links to its `k` nearest distinct nodes by Euclidean
/// distance; an undirected edge exists when either direction picked it.
/// Weights come from [`gaussian_weights`] over the undirected edge set.
pub fn build_knn_graph(
    embeds: &DenseMatrix,
    k: usize,
    origins: Vec<NodeOrigin>,
) -> Result<SparseAffinityGraph> {
    let n = embeds.rows();
    if n < 2 || k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k-NN needs 1 <= k < N, got k={k}, N={n}"
        )));
    }
    if origins.len() != n {
        return Err(Error::InvalidArgument("one origin per node required".into()));
    }
    let picks: Vec<Vec<usize>> = (0..n).into_par_iter().map(|i| nearest(embeds, i, k)).collect();
    let mut pairs: Vec<(usize, usize)> = picks
        .iter()
        .enumerate()
        .flat_map(|(i, js)| js.iter().map(move |&j| (i.min(j), i.max(j))))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let weighted = gaussian_weights(&pairs, embeds);
    SparseAffinityGraph::from_undirected(n, &weighted, origins)
}

/// Directed k-NN picks, exposed for inspection and tests.
pub fn knn_picks(embeds: &DenseMatrix, k: usize) -> Vec<Vec<usize>> {
    (0..embeds.rows()).map(|i| nearest(embeds, i, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origins(n: usize) -> Vec<NodeOrigin> {
        (0..n)
            .map(|s| NodeOrigin {
                image: 0,
                superpixel: s as u32,
            })
            .collect()
    }

    #[test]
    fn gaussian_closed_form() {
        let x = DenseMatrix::from_rows(&[[0.0], [1.0], [3.0], [6.0]]);
        let w = gaussian_weights(&[(0, 1), (1, 3), (2, 3)], &x);
        // distances 1, 5, 3 -> sigma 3
        let expect = [(-1.0f64 / 9.0).exp(), (-25.0f64 / 9.0).exp(), (-1.0f64).exp()];
        for (got, want) in w.iter().zip(expect) {
            assert!((got.2 - want).abs() < 1e-15);
        }
        let x = DenseMatrix::from_rows(&[[0.0], [1.0], [3.0], [6.0]]);
        let w = gaussian_weights(&[(0, 1), (1, 3)], &x);
        assert!(w.iter().all(|e| e.2 > 0.0 && e.2 <= 1.0));
    }

    #[test]
    fn gaussian_distances_one_two_three() {
        let x = DenseMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let w = gaussian_weights(&[(0, 1), (0, 2), (0, 3)], &x);
        let want = [(-0.25f64).exp(), (-1.0f64).exp(), (-2.25f64).exp()];
        for (g, e) in w.iter().zip(want) {
            assert!((g.2 - e).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_zero_sigma() {
        let x = DenseMatrix::filled(3, 2, 4.0);
        let w = gaussian_weights(&[(0, 1), (1, 2)], &x);
        assert!(w.iter().all(|e| e.2 == 1.0));
    }

    #[test]
    fn coincident_endpoints_weigh_one() {
        let x = DenseMatrix::from_rows(&[[0.0], [0.0], [5.0]]);
        let w = gaussian_weights(&[(0, 1), (1, 2)], &x);
        assert_eq!(w[0].2, 1.0);
    }

    #[test]
    fn spatial_single_superpixel_has_no_edges() {
        let sp = SuperpixelMap::from_labels(3, 3, vec![0; 9]).unwrap();
        let g = build_spatial_graph(&[&sp], &[0], &DenseMatrix::zeros(1, 2)).unwrap();
        assert_eq!(g.adjacency.nnz(), 0);
    }

    #[test]
    fn spatial_halves() {
        let sp = SuperpixelMap::from_labels(4, 2, vec![0, 0, 1, 1, 0, 0, 1, 1]).unwrap();
        let x = DenseMatrix::from_rows(&[[0.0], [1.0]]);
        let g = build_spatial_graph(&[&sp], &[0], &x).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert!(g.adjacency.is_symmetric());
        // a single edge has length σ, so its weight is exp(-1)
        assert_eq!(g.adjacency.get(0, 1), (-1f64).exp());
    }

    #[test]
    fn spatial_four_pixel_cycle() {
        let sp = SuperpixelMap::from_labels(2, 2, vec![0, 1, 2, 3]).unwrap();
        let g = build_spatial_graph(&[&sp], &[0], &DenseMatrix::zeros(4, 1)).unwrap();
        let e: Vec<_> = g.edges().iter().map(|&(i, j, _)| (i, j)).collect();
        assert_eq!(e, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn spatial_is_block_diagonal() {
        let a = SuperpixelMap::from_labels(2, 1, vec![0, 1]).unwrap();
        let b = SuperpixelMap::from_labels(2, 1, vec![0, 1]).unwrap();
        let g = build_spatial_graph(&[&a, &b], &[4, 9], &DenseMatrix::zeros(4, 1)).unwrap();
        for (i, j, _) in g.adjacency.triplets() {
            assert_eq!(g.origins[i].image, g.origins[j].image);
        }
        assert_eq!(g.origins[2].image, 9);
        assert_eq!(g.edges().len(), 2);
    }

    #[test]
    fn knn_collinear() {
        let x = DenseMatrix::from_rows(&[[0.0], [1.0], [3.0]]);
        assert_eq!(knn_picks(&x, 1), vec![vec![1], vec![0], vec![1]]);
        let g = build_knn_graph(&x, 1, origins(3)).unwrap();
        let e: Vec<_> = g.edges().iter().map(|&(i, j, _)| (i, j)).collect();
        assert_eq!(e, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_identical_points() {
        let x = DenseMatrix::filled(4, 3, 1.5);
        assert_eq!(knn_picks(&x, 2), vec![vec![1, 2], vec![0, 2], vec![0, 1], vec![0, 1]]);
        let g = build_knn_graph(&x, 2, origins(4)).unwrap();
        assert!(g.adjacency.triplets().all(|(_, _, w)| w == 1.0));
    }

    #[test]
    fn knn_rejects_bad_k() {
        let x = DenseMatrix::zeros(3, 1);
        assert!(build_knn_graph(&x, 3, origins(3)).is_err());
        assert!(build_knn_graph(&x, 0, origins(3)).is_err());
    }
}
