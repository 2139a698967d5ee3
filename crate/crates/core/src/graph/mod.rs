//! Dataset partitioning, affinity graphs, hypergraphs and the normalized
//! propagation operators used by the convolution layers.

mod affinity;
mod hypergraph;
mod operator;
mod partition;

pub use affinity::{
    build_knn_graph, build_spatial_graph, gaussian_weights, knn_picks, NodeOrigin,
    SparseAffinityGraph,
};
pub use hypergraph::{build_hypergraph, HyperedgeMode, Hypergraph};
pub use operator::{
    normalized_graph_operator, normalized_hypergraph_operator, GraphOperator, HypergraphOperator,
};
pub use partition::{plan_partition, PartitionPlan};
