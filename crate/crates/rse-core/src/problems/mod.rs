//! The five problem families and their conditioning quantities.

pub mod bilinear;
pub mod pca;
pub mod phase;
pub mod qmle;
pub mod report;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::Subspace;
use crate::mc_graph::ProbMatrix;
use crate::measures::Measure;

pub use bilinear::{bilinear_reg_bounds, bilinear_reg_exact, bilinear_rse, wielandt_claim_check, BilinearRegBounds, WielandtReport};
pub use pca::{pca_reciprocal_identity, pca_reg, pca_rse};
pub use phase::{gauss_g, gauss_h, gauss_phase_bounds_check, phase_reg, phase_rse, GaussPhaseBounds, PhaseReg, PhaseRse};
pub use qmle::{qmle_hessian, qmle_reg, qmle_rse, sparse_tangent, CumulantFunction, QmleReg};
pub use report::{build_report, RegValue, RseReport};

/// Phase retrieval parametrization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    /// `min_β ⅛E(⟨x,β⟩² − y)²` over vectors `β`.
    Factored,
    /// `min_M ½E(⟨xxᵀ, M⟩ − y)²` over rank-one PSD matrices.
    RankOne,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Factored => "factored",
            Self::RankOne => "rank_one",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "factored" => Some(Self::Factored),
            "rank_one" | "rank1" | "rank-one" => Some(Self::RankOne),
            _ => None,
        }
    }
}

/// Multi-start sphere optimization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub random_starts: usize,
    /// Stationarity tolerance, relative to the trace of the data second moment.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Random directions evaluated without local refinement.
    pub probes: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { random_starts: 8, tol: 1e-9, max_iters: 10_000, seed: 0, probes: 64 }
    }
}

/// A fully specified instance of one of the five families.
#[derive(Debug, Clone)]
pub enum ProblemInstance {
    Pca { data: Measure, q: usize },
    Qmle { data_x: Measure, cumulant: CumulantFunction, beta_star: DVector<f64>, tangent: Subspace },
    PhaseRetrieval { data_x: Measure, beta_star: DVector<f64>, formulation: Formulation },
    Bilinear { data_1: Measure, data_2: Measure, beta1_star: DVector<f64>, beta2_star: DVector<f64> },
    MatrixCompletion { probs: ProbMatrix, beta_star: DVector<f64> },
}

fn nonzero(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| *x == 0.0) {
        return Err(Error::InvalidInput(format!("{what} must be nonzero")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn same_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

impl ProblemInstance {
    pub fn family(&self) -> &'static str {
        match self {
            Self::Pca { .. } => "pca",
            Self::Qmle { .. } => "qmle",
            Self::PhaseRetrieval { .. } => "phase_retrieval",
            Self::Bilinear { .. } => "bilinear",
            Self::MatrixCompletion { .. } => "matrix_completion",
        }
    }

    /// Checks the per-family invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Pca { data, q } => {
                if *q == 0 || *q >= data.dim() {
                    return Err(Error::InvalidInput(format!("q = {q} must satisfy 1 <= q <= d-1")));
                }
            }
            Self::Qmle { data_x, beta_star, tangent, .. } => {
                same_dim(data_x.dim(), beta_star.len())?;
                tangent.check_ambient(data_x.dim())?;
                Subspace::new(tangent.basis().clone())?;
                if tangent.dim() == 0 {
                    return Err(Error::InvalidInput("tangent space must be nontrivial".into()));
                }
            }
            Self::PhaseRetrieval { data_x, beta_star, .. } => {
                same_dim(data_x.dim(), beta_star.len())?;
                nonzero(beta_star, "beta_star")?;
            }
            Self::Bilinear { data_1, data_2, beta1_star, beta2_star } => {
                same_dim(data_1.dim(), beta1_star.len())?;
                same_dim(data_2.dim(), beta2_star.len())?;
                nonzero(beta1_star, "beta_star")?;
                nonzero(beta2_star, "beta2_star")?;
            }
            Self::MatrixCompletion { probs, beta_star } => {
                same_dim(probs.dim(), beta_star.len())?;
                nonzero(beta_star, "beta_star")?;
            }
        }
        Ok(())
    }
}
