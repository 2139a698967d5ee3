//! Weakly-supervised pseudo-label generation over superpixel graphs.
//!
//! Images are cut into SLIC superpixels, each superpixel becomes a node
//! with pooled features, and nodes are linked by spatial adjacency inside
//! an image and by k-nearest-neighbor similarity across images. A classifier
//! is trained in three stages: graph convolutions first, then two rounds
//! of hypergraph convolutions whose hyperedges merge the spatial graph with
//! a k-NN graph built on the previous stage's embeddings. Supervision comes
//! from scribbles or clicks; the output is a dense pseudo-label map per
//! image plus mIoU reports.
//!
//! Module map:
//!
//! - [`numeric`]: dense/sparse kernels, the gradient tape, Adam
//! - [`superpixel`]: SLIC, feature pooling, weak-label projection
//! - [`graph`]: partitioning, affinity graphs, hypergraphs, operators
//! - [`layers`]: convolution layers, batch norm, dropout, MLP head
//! - [`training`]: staged training, scheduler, splits, pseudo-labels
//! - [`io`]: manifests, annotations, binary formats, synthetic data, mIoU
//! - [`cli`]: the `hgcn` command line
//!
//! Runnable walkthroughs live in `examples/`.

// Negated comparisons such as `!(x > 0.0)` are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod graph;
pub mod io;
pub mod layers;
pub mod numeric;
pub mod raster;
pub mod rng;
pub mod superpixel;
pub mod training;

pub use error::{Error, Result};
