use std::sync::Arc;

use super::affinity::SparseAffinityGraph;
use super::hypergraph::Hypergraph;
use crate::error::{Error, Result};
use crate::numeric::SparseMatrix;

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` for a graph convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOperator(pub Arc<SparseMatrix>);

/// `D_h^{-1/2} H W B^{-1} Hᵀ D_h^{-1/2}` for a hypergraph convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergraphOperator(pub Arc<SparseMatrix>);

impl GraphOperator {
    pub fn matrix(&self) -> &Arc<SparseMatrix> {
        &self.0
    }
}

impl HypergraphOperator {
    pub fn matrix(&self) -> &Arc<SparseMatrix> {
        &self.0
    }
}

/// Symmetrically normalized adjacency with self loops.
///
/// Entries are computed as `ã_ij / sqrt(d_i · d_j)`, which keeps the
/// result exactly symmetric for a symmetric input.
pub fn normalized_graph_operator(g: &SparseAffinityGraph) -> GraphOperator {
    let a = &g.adjacency;
    let n = a.rows();
    let deg: Vec<f64> = a.row_sums().iter().map(|d| d + 1.0).collect();
    let mut trip = Vec::with_capacity(a.nnz() + n);
    for i in 0..n {
        trip.push((i, i, 1.0 / deg[i]));
        let (cs, vs) = a.row(i);
        for (&j, &v) in cs.iter().zip(vs) {
            trip.push((i, j, v / (deg[i] * deg[j]).sqrt()));
        }
    }
    let m = SparseMatrix::from_triplets(n, n, trip).expect("indices in range");
    GraphOperator(Arc::new(m))
}

/// Normalized hypergraph propagation operator.
///
/// For every pair `(i, j)` the sum `Σ_e W(e)/B(e)` runs over shared
/// hyperedges in ascending order, from either endpoint, so the result is
/// exactly symmetric.
pub fn normalized_hypergraph_operator(hg: &Hypergraph) -> Result<HypergraphOperator> {
    let n = hg.node_count();
    if let Some(i) = hg.node_degrees.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument(format!("node {i} has zero hypergraph degree")));
    }
    if hg.edge_degrees.iter().any(|&b| b < 1.0) {
        return Err(Error::InvalidArgument("empty hyperedge".into()));
    }
    let members = hg.members();
    let scale: Vec<f64> = hg
        .edge_weights
        .iter()
        .zip(&hg.edge_degrees)
        .map(|(w, b)| w / b)
        .collect();
    let inv: Vec<f64> = hg.node_degrees.iter().map(|d| 1.0 / d.sqrt()).collect();

    let mut acc = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_offsets.push(0);
    for i in 0..n {
        for &e in hg.incidence.row(i).0 {
            for &j in &members[e] {
                if acc[j] == 0.0 {
                    touched.push(j);
                }
                acc[j] += scale[e];
            }
        }
        touched.sort_unstable();
        for &j in &touched {
            cols.push(j);
            vals.push(acc[j] * (inv[i] * inv[j]));
            acc[j] = 0.0;
        }
        touched.clear();
        row_offsets.push(cols.len());
    }
    let m = SparseMatrix::from_csr(n, n, row_offsets, cols, vals)?;
    Ok(HypergraphOperator(Arc::new(m)))
}
