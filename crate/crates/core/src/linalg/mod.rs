//! Dense complex linear algebra: vectors, Hermitian matrices and extremal
//! eigensolvers.

mod eigen;
mod factor;
mod matrix;
mod vector;

pub use eigen::{
    leading_eigenpair, leading_eigenpair_with, second_smallest_eigenvalue, second_smallest_eigenvalue_with,
    smallest_eigenpair, smallest_eigenpair_with, spectral_norm, EigenOptions, EigenPair,
};
pub use matrix::{entrywise_sgn, hadamard, ComplexMatrix, HermitianMatrix, RealMatrix};
pub use vector::{sgn, ComplexVector};
pub(crate) use vector::dot;
