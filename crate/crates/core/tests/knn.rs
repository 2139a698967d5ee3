mod common;

use common::*;
use hgcn::graph::{build_knn_graph, gaussian_weights, knn_picks};
use hgcn::numeric::DenseMatrix;
use proptest::prelude::*;

fn features(seed: u64, n: usize, f: usize, grid: bool) -> DenseMatrix {
    let mut r = rng(seed);
    let mut x = random_dense(n, f, &mut r);
    if grid {
        // coarse values force distance ties
        x.as_mut_slice().iter_mut().for_each(|v| *v = (*v * 2.0).round());
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn picks_equal_brute_force(seed in any::<u64>(), n in 2usize..120, f in 1usize..5, k in 1usize..12, grid in any::<bool>()) {
        let x = features(seed, n, f, grid);
        let k = k.min(n - 1);
        prop_assert_eq!(knn_picks(&x, k), brute_force_picks(&x, k));
    }

    #[test]
    fn graph_is_symmetric_union(seed in any::<u64>(), n in 2usize..80, k in 1usize..8) {
        let x = features(seed, n, 3, false);
        let k = k.min(n - 1);
        let g = build_knn_graph(&x, k, origins(n)).unwrap();
        let picks = brute_force_picks(&x, k);
        let mut want: Vec<(usize, usize)> = picks
            .iter()
            .enumerate()
            .flat_map(|(i, p)| p.iter().map(move |&j| (i.min(j), i.max(j))))
            .collect();
        want.sort_unstable();
        want.dedup();
        let got: Vec<(usize, usize)> = g.edges().iter().map(|&(i, j, _)| (i, j)).collect();
        prop_assert_eq!(&got, &want);
        prop_assert!(g.adjacency.is_symmetric());
        let weights = gaussian_weights(&want, &x);
        for ((_, _, w), (_, _, o)) in g.edges().iter().zip(&weights) {
            prop_assert!(*w > 0.0 && *w <= 1.0);
            prop_assert_eq!(w, o);
        }
    }
}

#[test]
fn twenty_seeds_up_to_500_nodes() {
    for seed in 0..20 {
        let n = 100 + 20 * seed as usize;
        let x = features(seed, n, 4, seed % 2 == 0);
        assert_eq!(knn_picks(&x, 10), brute_force_picks(&x, 10), "seed {seed}");
    }
}
