use serde::{Deserialize, Serialize};

use super::affinity::SparseAffinityGraph;
use crate::error::{Error, Result};
use crate::numeric::SparseMatrix;

/// How spatial and k-NN neighborhoods become hyperedges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyperedgeMode {
    /// One hyperedge per node: the node plus its spatial and k-NN
    /// neighbors.
    #[default]
    PerNode,
    /// Every affinity edge becomes a 2-node hyperedge; isolated nodes get a
    /// singleton hyperedge of weight 1.
    Pairwise,
}

/// Incidence `H` (N×M, 0/1), hyperedge weights `W`, node degrees
/// `D_h(i) = Σ_e W(e)·H(i,e)` and hyperedge degrees `B(e) = Σ_i H(i,e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    pub incidence: SparseMatrix,
    pub edge_weights: Vec<f64>,
    pub node_degrees: Vec<f64>,
    pub edge_degrees: Vec<f64>,
}

impl Hypergraph {
    /// Builds from incidence and weights, deriving both degree vectors.
    pub fn new(incidence: SparseMatrix, edge_weights: Vec<f64>) -> Result<Self> {
        let (n, m) = incidence.shape();
        if edge_weights.len() != m {
            return Err(Error::dims("hypergraph", (n, m), (edge_weights.len(), 1)));
        }
        if incidence.triplets().any(|(_, _, v)| v != 1.0) {
            return Err(Error::InvalidArgument("incidence entries must be 1".into()));
        }
        if edge_weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("hyperedge weights must be positive".into()));
        }
        let node_degrees = (0..n)
            .map(|i| incidence.row(i).0.iter().map(|&e| edge_weights[e]).sum())
            .collect();
        let mut edge_degrees = vec![0.0; m];
        for (_, e, _) in incidence.triplets() {
            edge_degrees[e] += 1.0;
        }
        if edge_degrees.iter().any(|&b| b < 1.0) {
            return Err(Error::InvalidArgument("empty hyperedge".into()));
        }
        Ok(Self {
            incidence,
            edge_weights,
            node_degrees,
            edge_degrees,
        })
    }

    pub fn node_count(&self) -> usize {
        self.incidence.rows()
    }

    pub fn edge_count(&self) -> usize {
        self.incidence.cols()
    }

    /// Members of every hyperedge, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let t = self.incidence.transpose();
        (0..t.rows()).map(|e| t.row(e).0.to_vec()).collect()
    }
}

/// Merges the sorted neighbor lists of `i` in two graphs; the weight of a
/// node present in both is the larger of the two.
fn merged_neighbors(a: &SparseMatrix, b: &SparseMatrix, i: usize) -> Vec<(usize, f64)> {
    let (ac, av) = a.row(i);
    let (bc, bv) = b.row(i);
    let (mut p, mut q) = (0, 0);
    let mut out = Vec::with_capacity(ac.len() + bc.len());
    while p < ac.len() || q < bc.len() {
        if q == bc.len() || (p < ac.len() && ac[p] < bc[q]) {
            out.push((ac[p], av[p]));
            p += 1;
        } else if p == ac.len() || bc[q] < ac[p] {
            out.push((bc[q], bv[q]));
            q += 1;
        } else {
            out.push((ac[p], av[p].max(bv[q])));
            p += 1;
            q += 1;
        }
    }
    out
}

/// Lifts a spatial graph and a k-NN graph over the same nodes into a
/// hypergraph.
///
/// In [`HyperedgeMode::PerNode`] hyperedge `e_i = {i} ∪ N_spatial(i) ∪
/// N_knn(i)`, weighted by the mean affinity between `i` and the other
/// members (the larger weight where both graphs link them), or 1 for a
/// singleton.
pub fn build_hypergraph(
    spatial: &SparseAffinityGraph,
    knn: &SparseAffinityGraph,
    mode: HyperedgeMode,
) -> Result<Hypergraph> {
    let n = spatial.node_count();
    if knn.node_count() != n || spatial.origins != knn.origins {
        return Err(Error::InvalidArgument(
            "spatial and k-NN graphs cover different node sets".into(),
        ));
    }
    let (a, b) = (&spatial.adjacency, &knn.adjacency);
    match mode {
        HyperedgeMode::PerNode => {
            let mut trip = Vec::new();
            let mut weights = Vec::with_capacity(n);
            for i in 0..n {
                let nb = merged_neighbors(a, b, i);
                let w = if nb.is_empty() {
                    1.0
                } else {
                    nb.iter().map(|x| x.1).sum::<f64>() / nb.len() as f64
                };
                weights.push(w);
                trip.push((i, i, 1.0));
                trip.extend(nb.iter().map(|&(j, _)| (j, i, 1.0)));
            }
            Hypergraph::new(SparseMatrix::from_triplets(n, n, trip)?, weights)
        }
        HyperedgeMode::Pairwise => {
            let mut trip = Vec::new();
            let mut weights = Vec::new();
            let mut covered = vec![false; n];
            for i in 0..n {
                for (j, w) in merged_neighbors(a, b, i) {
                    if j > i {
                        let e = weights.len();
                        trip.push((i, e, 1.0));
                        trip.push((j, e, 1.0));
                        weights.push(w);
                        covered[i] = true;
                        covered[j] = true;
                    }
                }
            }
            for (i, _) in covered.iter().enumerate().filter(|(_, c)| !**c) {
                trip.push((i, weights.len(), 1.0));
                weights.push(1.0);
            }
            let m = weights.len();
            Hypergraph::new(SparseMatrix::from_triplets(n, m, trip)?, weights)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::affinity::NodeOrigin;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> SparseAffinityGraph {
        let origins = (0..n)
            .map(|s| NodeOrigin {
                image: 0,
                superpixel: s as u32,
            })
            .collect();
        let trip = edges.iter().flat_map(|&(i, j, w)| [(i, j, w), (j, i, w)]);
        SparseAffinityGraph {
            adjacency: SparseMatrix::from_triplets(n, n, trip).unwrap(),
            origins,
        }
    }

    #[test]
    fn empty_graphs_give_singletons() {
        let g = graph(3, &[]);
        let h = build_hypergraph(&g, &g, HyperedgeMode::PerNode).unwrap();
        assert_eq!(h.incidence, SparseMatrix::identity(3));
        assert_eq!(h.edge_weights, vec![1.0; 3]);
        assert_eq!(h.edge_degrees, vec![1.0; 3]);
        assert_eq!(h.node_degrees, vec![1.0; 3]);
    }

    #[test]
    fn single_spatial_edge() {
        let s = graph(2, &[(0, 1, 0.5)]);
        let k = graph(2, &[]);
        let h = build_hypergraph(&s, &k, HyperedgeMode::PerNode).unwrap();
        assert_eq!(h.members(), vec![vec![0, 1], vec![0, 1]]);
        assert_eq!(h.edge_weights, vec![0.5, 0.5]);
        assert_eq!(h.edge_degrees, vec![2.0, 2.0]);
        assert_eq!(h.node_degrees, vec![1.0, 1.0]);
    }

    #[test]
    fn overlapping_edges_take_max_weight() {
        let s = graph(3, &[(0, 1, 0.2)]);
        let k = graph(3, &[(0, 1, 0.6), (0, 2, 0.4)]);
        let h = build_hypergraph(&s, &k, HyperedgeMode::PerNode).unwrap();
        assert_eq!(h.members()[0], vec![0, 1, 2]);
        assert!((h.edge_weights[0] - 0.5).abs() < 1e-15);
        assert_eq!(h.edge_weights[2], 0.4);
    }

    #[test]
    fn pairwise_mode_covers_isolated_nodes() {
        let s = graph(4, &[(0, 1, 0.5), (1, 2, 0.25)]);
        let k = graph(4, &[]);
        let h = build_hypergraph(&s, &k, HyperedgeMode::Pairwise).unwrap();
        assert_eq!(h.edge_count(), 3);
        assert_eq!(h.members(), vec![vec![0, 1], vec![1, 2], vec![3]]);
        assert_eq!(h.node_degrees, vec![0.5, 0.75, 0.25, 1.0]);
    }

    #[test]
    fn node_set_mismatch() {
        assert!(build_hypergraph(&graph(2, &[]), &graph(3, &[]), HyperedgeMode::PerNode).is_err());
    }
}
