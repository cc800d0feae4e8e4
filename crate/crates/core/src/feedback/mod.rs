//! Loss construction: expected losses, trajectory sampling, importance-weighted
//! estimators and matrix assembly.

mod loss;
mod matrix;

pub use loss::{
    adaptive_estimator, assemble_adaptive_matrix, assemble_matrix, densify, expected_loss, ix_estimator,
    sample_trajectory, SparseLoss,
};
pub use matrix::{DenseMatrix, LossMatrix, MatrixView};
