//! # rse-core
//!
//! Radius of statistical efficiency (RSE) and regularity modulus (REG) for a
//! family of classical estimation problems, together with the Wasserstein and
//! Bures–Wasserstein geometry they rest on.
//!
//! RSE is the Wasserstein-2 distance from a data distribution to the nearest
//! distribution whose Fisher-type matrix is singular. REG is the reciprocal of
//! the smallest eigenvalue of the covariant Hessian at the minimizer.
//!
//! ## Modules
//!
//! - [`measures`]: centered Gaussian and empirical measures, projections, exact discrete W2.
//! - [`spectral`]: PSD matrices, eigensystems, Bures–Wasserstein, orbit and spectral-set distances.
//! - [`problems`]: PCA, quasi-likelihood GLMs, phase retrieval and bilinear sensing.
//! - [`mc_graph`]: rank-one matrix completion through its observation graph.
//! - [`oracles`]: finite-difference Hessians, seeded Monte Carlo, slope and sandwich checks.
//! - [`acceptance`]: the end-to-end verification suite used by tests and the CLI.

#![forbid(unsafe_code)]

pub mod acceptance;
pub mod error;
pub mod linalg;
pub mod mc_graph;
pub mod measures;
pub mod oracles;
pub mod problems;
pub mod spectral;
mod transport;

pub use error::{Error, Result};
pub use linalg::Subspace;
pub use measures::{Coupling, EmpiricalMeasure, GaussianMeasure, Measure};
pub use spectral::{EigenSystem, PsdMatrix};
