mod common;

use common::*;
use hgcn::graph::{build_hypergraph, normalized_graph_operator, normalized_hypergraph_operator, HyperedgeMode, SparseAffinityGraph};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn pairwise_oracle(g: &SparseAffinityGraph) -> DMatrix<f64> {
    // H W B^-1 Hᵀ = (A + D)/2 and D_h = D for 2-node hyperedges
    let a = to_na(&g.adjacency);
    let d = a.column_sum();
    let inner = (&a + DMatrix::from_diagonal(&d)) / 2.0;
    let s = DMatrix::from_diagonal(&d.map(|v| 1.0 / v.sqrt()));
    &s * inner * &s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_operator_matches_dense_formula(seed in any::<u64>(), n in 1usize..30, p in 0.0f64..0.6) {
        let g = random_graph(n, p, &mut rng(seed));
        let op = normalized_graph_operator(&g);
        prop_assert!(op.matrix().is_symmetric());
        prop_assert!(max_abs(&to_na(op.matrix()), &graph_operator_oracle(&g.adjacency)) < 1e-12);
    }

    #[test]
    fn hypergraph_operator_matches_dense_formula(seed in any::<u64>(), n in 1usize..30, m in 1usize..20) {
        let hg = random_hypergraph(n, m, &mut rng(seed));
        let op = normalized_hypergraph_operator(&hg).unwrap();
        let dense = to_na(op.matrix());
        prop_assert!(op.matrix().is_symmetric());
        prop_assert!(max_abs(&dense, &hypergraph_operator_oracle(&hg)) < 1e-12);
        let eig = dense.symmetric_eigen().eigenvalues;
        prop_assert!(eig.min() >= -1e-10, "eigenvalue {}", eig.min());
    }

    #[test]
    fn pairwise_hypergraph_reduces_to_graph(seed in any::<u64>(), n in 2usize..30) {
        let mut g = random_graph(n, 0.3, &mut rng(seed));
        // every node needs an edge so that the pairwise hypergraph has no singletons
        let mut trip: Vec<_> = g.adjacency.triplets().collect();
        for i in 0..n {
            if g.adjacency.row(i).0.is_empty() {
                let j = (i + 1) % n;
                trip.extend([(i, j, 0.5), (j, i, 0.5)]);
            }
        }
        trip.sort_by_key(|&(i, j, _)| (i, j));
        trip.dedup_by_key(|t| (t.0, t.1));
        g.adjacency = hgcn::numeric::SparseMatrix::from_triplets(n, n, trip).unwrap();
        let empty = SparseAffinityGraph::empty(g.origins.clone());
        let hg = build_hypergraph(&g, &empty, HyperedgeMode::Pairwise).unwrap();
        prop_assert!(hg.edge_degrees.iter().all(|&b| b == 2.0));
        let op = normalized_hypergraph_operator(&hg).unwrap();
        prop_assert!(max_abs(&to_na(op.matrix()), &pairwise_oracle(&g)) < 1e-12);
    }

    #[test]
    fn spmm_matches_dense_product(seed in any::<u64>(), n in 1usize..25, f in 1usize..6) {
        let mut r = rng(seed);
        let g = random_graph(n, 0.3, &mut r);
        let x = random_dense(n, f, &mut r);
        let y = g.adjacency.spmm(&x).unwrap();
        let oracle = to_na(&g.adjacency) * dense_to_na(&x);
        prop_assert!(max_abs(&dense_to_na(&y), &oracle) < 1e-12);
        let yt = g.adjacency.spmm_transposed(&x).unwrap();
        let oracle_t = to_na(&g.adjacency).transpose() * dense_to_na(&x);
        prop_assert!(max_abs(&dense_to_na(&yt), &oracle_t) < 1e-12);
    }

    #[test]
    fn matmul_matches_dense_product(seed in any::<u64>(), a in 1usize..12, b in 1usize..12, c in 1usize..12) {
        let mut r = rng(seed);
        let x = random_dense(a, b, &mut r);
        let y = random_dense(b, c, &mut r);
        let z = x.matmul(&y).unwrap();
        prop_assert!(max_abs(&dense_to_na(&z), &(dense_to_na(&x) * dense_to_na(&y))) < 1e-12);
    }
}

#[test]
fn triangle_example() {
    let trip = vec![(0, 1, 1.0), (1, 0, 1.0), (0, 2, 1.0), (2, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)];
    let unit = SparseAffinityGraph {
        adjacency: hgcn::numeric::SparseMatrix::from_triplets(3, 3, trip).unwrap(),
        origins: origins(3),
    };
    let empty = SparseAffinityGraph::empty(origins(3));
    let op = normalized_hypergraph_operator(&build_hypergraph(&unit, &empty, HyperedgeMode::Pairwise).unwrap()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 0.5 } else { 0.25 };
            assert!((op.matrix().get(i, j) - want).abs() < 1e-15);
        }
    }
}
