//! Numerical tools for exact and robust sparse recovery under general
//! sparseness-measure minimization.
//!
//! The crate is organised around the null space of the measurement matrix:
//!
//! * [`measures`]: scalar sparseness measures `F` and the separable cost `J`.
//! * [`subspaces`]: points of the Grassmannian held as orthonormal bases.
//! * [`nsp`]: null space property checks, null space constants and the
//!   perturbed-NSP robustness probe.
//! * [`solver`]: `J`-minimization solvers used to corroborate certificates.
//! * [`width`]: Gaussian widths, escape-through-the-mesh bounds and the
//!   rate/robustness tradeoff.

pub mod error;
pub mod measures;
pub mod nsp;
pub mod rng;
pub mod search;
pub mod solver;
pub mod subspaces;
pub mod support;
pub mod tolerance;
pub mod width;

pub use error::{Error, Result};
pub use measures::{CostFunction, SparsenessMeasure};
pub use subspaces::{MeasurementMatrix, Subspace};
