//! Dense and sparse kernels, the gradient tape, and Adam.

pub mod adam;
pub mod dense;
pub mod sparse;
pub mod tape;

pub use adam::{adam_step, AdamState, ParamSlot};
pub use dense::{elu, log_softmax_rows, DenseMatrix};
pub use sparse::SparseMatrix;
pub use tape::{BatchStats, Gradients, Tape, Var};
