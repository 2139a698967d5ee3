//! Builds the spatial graph of two synthetic images and its normalized
//! operator, then checks symmetry and the spectrum bound on a small case.
//!
//! cargo run --example graph_operators

use hgcn::graph::{build_spatial_graph, normalized_graph_operator, NodeOrigin, SparseAffinityGraph};
use hgcn::io::{synthesize, SyntheticSpec};
use hgcn::numeric::SparseMatrix;
use hgcn::superpixel::{builtin_feature_extract, pool_features, slic_segment, SlicParams};

fn main() -> hgcn::Result<()> {
    let data = synthesize(&SyntheticSpec::new(2, 64, 3, 11))?;
    let mut maps = Vec::new();
    let mut feats = Vec::new();
    for d in &data {
        let sp = slic_segment(&d.image, &SlicParams::with_superpixels(40))?;
        feats.push(pool_features(&builtin_feature_extract(&d.image, 4)?, &sp)?);
        maps.push(sp);
    }
    let x = hgcn::numeric::DenseMatrix::vstack(&feats.iter().collect::<Vec<_>>())?;
    let g = build_spatial_graph(&maps.iter().collect::<Vec<_>>(), &[0, 1], &x)?;
    let cross = g
        .edges()
        .iter()
        .filter(|&&(i, j, _)| g.origins[i].image != g.origins[j].image)
        .count();
    println!("{} nodes, {} edges, {cross} cross-image edges", g.node_count(), g.edges().len());
    let op = normalized_graph_operator(&g);
    println!("operator nnz {}, symmetric {}", op.matrix().nnz(), op.matrix().is_symmetric());

    // unit path 0-1-2: degrees with self loops are 2, 3, 2
    let origins = (0..3).map(|s| NodeOrigin { image: 0, superpixel: s }).collect();
    let adj = SparseMatrix::from_triplets(3, 3, vec![(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)])?;
    let path = normalized_graph_operator(&SparseAffinityGraph { adjacency: adj, origins });
    for r in 0..3 {
        let row: Vec<String> = (0..3).map(|c| format!("{:.4}", path.matrix().get(r, c))).collect();
        println!("  [{}]", row.join(", "));
    }
    Ok(())
}
