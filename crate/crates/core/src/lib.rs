//! Weighted angular synchronization.
//!
//! Recovers a vector of phase factors `x_l = e^{i phi_l}` from noisy
//! observations of a subset of the pairwise products `x_l conj(x_j)`. Three
//! estimators are provided (eigenvector relaxation, torus least squares by
//! the generalized power method, and the semidefinite relaxation), together
//! with the a-priori error bounds and tightness checks that go with them and
//! a seeded experiment harness.

pub mod bounds;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
pub use num_complex::Complex64;
