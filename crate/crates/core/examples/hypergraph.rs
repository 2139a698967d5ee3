//! Merges a spatial graph and a k-NN graph into a hypergraph in both
//! hyperedge modes and prints the resulting operator sizes.
//!
//! cargo run --example hypergraph -- [k]

use hgcn::graph::{
    build_hypergraph, build_knn_graph, build_spatial_graph, normalized_hypergraph_operator, HyperedgeMode,
};
use hgcn::io::{synthesize, SyntheticSpec};
use hgcn::numeric::DenseMatrix;
use hgcn::superpixel::{builtin_feature_extract, pool_features, slic_segment, SlicParams};

fn main() -> hgcn::Result<()> {
    let k = std::env::args().nth(1).map_or(10, |s| s.parse().expect("k"));
    let data = synthesize(&SyntheticSpec::new(3, 64, 4, 5))?;
    let mut maps = Vec::new();
    let mut feats = Vec::new();
    for d in &data {
        let sp = slic_segment(&d.image, &SlicParams::with_superpixels(50))?;
        feats.push(pool_features(&builtin_feature_extract(&d.image, 2)?, &sp)?);
        maps.push(sp);
    }
    let x = DenseMatrix::vstack(&feats.iter().collect::<Vec<_>>())?;
    let spatial = build_spatial_graph(&maps.iter().collect::<Vec<_>>(), &[0, 1, 2], &x)?;
    let knn = build_knn_graph(&x, k, spatial.origins.clone())?;
    let cross = knn
        .edges()
        .iter()
        .filter(|&&(i, j, _)| knn.origins[i].image != knn.origins[j].image)
        .count();
    println!(
        "{} nodes, {} spatial edges, {} k-NN edges ({cross} across images)",
        x.rows(),
        spatial.edges().len(),
        knn.edges().len()
    );
    for mode in [HyperedgeMode::PerNode, HyperedgeMode::Pairwise] {
        let hg = build_hypergraph(&spatial, &knn, mode)?;
        let op = normalized_hypergraph_operator(&hg)?;
        let sizes: Vec<usize> = hg.members().iter().map(Vec::len).collect();
        println!(
            "{mode:?}: {} hyperedges, largest {}, operator nnz {}",
            hg.edge_count(),
            sizes.iter().max().unwrap(),
            op.matrix().nnz()
        );
    }
    Ok(())
}
