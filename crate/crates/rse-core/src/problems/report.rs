//! Combined RSE / REG reports with the predicted bounds on their product.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_2_PI, SQRT_2};

use super::bilinear::{bilinear_reg_bounds, bilinear_reg_exact, bilinear_rse};
use super::pca::{pca_reg, pca_rse};
use super::phase::{phase_reg, phase_rse};
use super::qmle::{qmle_reg, qmle_rse};
use super::{Formulation, OptimizerConfig, ProblemInstance};
use crate::error::{Error, Result};
use crate::mc_graph::{self, McMode};
use crate::measures::{distance_to_singular_set, Measure};
use crate::spectral::is_negligible;

/// Relative slack used when checking the product against its predicted bounds.
pub const PRODUCT_TOL: f64 = 1e-9;

/// REG as a value or as an interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegValue {
    Exact(f64),
    Bracket { lower: f64, upper: f64 },
}

impl RegValue {
    pub fn lower(&self) -> f64 {
        match *self {
            Self::Exact(v) => v,
            Self::Bracket { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            Self::Exact(v) => v,
            Self::Bracket { upper, .. } => upper,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.lower().is_infinite()
    }

    pub fn contains(&self, x: f64, rel: f64) -> bool {
        let slack = |v: f64| rel * v.abs();
        x >= self.lower() - slack(self.lower()) && x <= self.upper() + slack(self.upper())
    }
}

/// RSE, REG and their product `RSE^k · REG` with the predicted interval.
#[derive(Debug, Clone, PartialEq)]
pub struct RseReport {
    pub problem: String,
    pub rse: f64,
    pub reg: RegValue,
    /// Where the REG value comes from (`exact`, or the name of the bracket used).
    pub reg_source: String,
    pub exponent: u32,
    pub product: Option<(f64, f64)>,
    pub predicted_bounds: Option<(f64, f64)>,
    pub product_in_bounds: Option<bool>,
    pub ill_posed: bool,
    /// False when a nonconvex or heuristic inner solve was not certified optimal.
    pub certified: bool,
    pub diagnostics: BTreeMap<String, f64>,
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub notes: Vec<String>,
}

impl RseReport {
    fn new(problem: &str, exponent: u32) -> Self {
        Self {
            problem: problem.into(),
            rse: 0.0,
            reg: RegValue::Exact(f64::INFINITY),
            reg_source: "exact".into(),
            exponent,
            product: None,
            predicted_bounds: None,
            product_in_bounds: None,
            ill_posed: false,
            certified: true,
            diagnostics: BTreeMap::new(),
            vectors: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn finish(mut self) -> Self {
        if self.ill_posed {
            self.rse = 0.0;
            self.reg = RegValue::Exact(f64::INFINITY);
            self.product = None;
            self.product_in_bounds = None;
            return self;
        }
        let p = self.rse.powi(self.exponent as i32);
        let product = (p * self.reg.lower(), p * self.reg.upper());
        self.product = Some(product);
        if let Some((lo, hi)) = self.predicted_bounds {
            if lo.is_finite() && hi.is_finite() && product.0.is_finite() && product.1.is_finite() {
                let ok = product.0 >= lo * (1.0 - PRODUCT_TOL) && product.1 <= hi * (1.0 + PRODUCT_TOL);
                self.product_in_bounds = Some(ok);
            }
        }
        self
    }

    fn diag(&mut self, key: &str, v: f64) {
        self.diagnostics.insert(key.into(), v);
    }

    fn vector(&mut self, key: &str, v: &nalgebra::DVector<f64>) {
        self.vectors.insert(key.into(), v.iter().copied().collect());
    }
}

fn eigenvalues(r: &mut RseReport, key: &str, m: &Measure) {
    let s = m.second_moment();
    r.vectors.insert(key.into(), s.eigenvalues().iter().copied().collect());
}

/// Computes the full report for one instance.
pub fn build_report(instance: &ProblemInstance, opt: &OptimizerConfig, mc_mode: McMode) -> Result<RseReport> {
    instance.validate()?;
    match instance {
        ProblemInstance::Pca { data, q } => {
            let mut r = RseReport::new("pca", 1);
            eigenvalues(&mut r, "eigenvalues", data);
            let reg = pca_reg(data, *q)?;
            r.ill_posed = reg.is_infinite();
            r.rse = pca_rse(data, *q)?;
            r.reg = RegValue::Exact(reg);
            let lam = data.second_moment();
            let (a, b) = (lam.eigenvalues()[*q - 1].max(0.0), lam.eigenvalues()[*q].max(0.0));
            let id = 1.0 / (SQRT_2 * (a.sqrt() + b.sqrt()));
            r.predicted_bounds = Some((id, id));
            r.diag("lambda_q", a);
            r.diag("lambda_q_plus_1", b);
            Ok(r.finish())
        }
        ProblemInstance::Qmle { data_x, cumulant, beta_star, tangent } => {
            let mut r = RseReport::new("qmle", 2);
            eigenvalues(&mut r, "eigenvalues", data_x);
            let (rse, v) = distance_to_singular_set(data_x, tangent)?;
            r.rse = qmle_rse(data_x, tangent)?;
            debug_assert_eq!(r.rse, rse);
            r.vector("min_direction", &v);
            r.diag("lambda_min_compressed", rse * rse);
            match qmle_reg(data_x, *cumulant, beta_star, tangent) {
                Ok(q) => {
                    r.reg = RegValue::Exact(q.reg);
                    r.predicted_bounds = Some((q.c_lb, q.c_ub));
                    r.diag("c_lb", q.c_lb);
                    r.diag("c_ub", q.c_ub);
                    r.diag("lambda_min_hessian", q.lambda_min_hessian);
                    r.diag("reg_bracket_lower", q.bracket.0);
                    r.diag("reg_bracket_upper", q.bracket.1);
                }
                Err(Error::IllPosed(_)) => r.ill_posed = true,
                Err(e) => return Err(e),
            }
            if is_negligible(rse * rse, data_x.second_moment().trace()) {
                r.ill_posed = true;
            }
            Ok(r.finish())
        }
        ProblemInstance::PhaseRetrieval { data_x, beta_star, formulation } => {
            let mut r = RseReport::new("phase_retrieval", 2);
            eigenvalues(&mut r, "eigenvalues", data_x);
            let reg = phase_reg(data_x, beta_star, *formulation)?;
            let rse = phase_rse(data_x, beta_star, opt)?;
            r.rse = rse.rse;
            r.certified = rse.certified;
            r.vector("min_direction", &rse.direction);
            r.diag("lambda_min_sigma_hat", reg.lambda_min);
            r.diag("c_lb", reg.c_lb);
            r.diag("c_ub", reg.c_ub);
            r.ill_posed = reg.is_ill_posed();
            match (*formulation, reg.exact) {
                (Formulation::Factored, Some(v)) => r.reg = RegValue::Exact(v),
                _ => {
                    r.reg = RegValue::Bracket { lower: reg.bracket.0, upper: reg.bracket.1 };
                    r.reg_source = "curvature_bracket".into();
                }
            }
            if let Measure::Gaussian(g) = data_x {
                let q = g.covariance().quad(beta_star);
                r.predicted_bounds = Some((reg.c_lb * (1.0 - FRAC_2_PI) / (3.0 * q), reg.c_ub / q));
            } else {
                r.notes.push("no predicted product bounds for empirical data".into());
            }
            if !rse.certified {
                r.notes.push("sphere minimization not certified; rse is an upper bound".into());
            }
            Ok(r.finish())
        }
        ProblemInstance::Bilinear { data_1, data_2, beta1_star, beta2_star } => {
            let mut r = RseReport::new("bilinear", 2);
            eigenvalues(&mut r, "eigenvalues_1", data_1);
            eigenvalues(&mut r, "eigenvalues_2", data_2);
            r.rse = bilinear_rse(data_1, data_2)?;
            let b = bilinear_reg_bounds(data_1, data_2, beta1_star, beta2_star)?;
            r.ill_posed = b.reg.0.is_infinite();
            r.reg = RegValue::Bracket { lower: b.reg.0, upper: b.reg.1 };
            r.reg_source = "condition_number_bracket".into();
            r.diag("gamma_1", b.gamma1);
            r.diag("gamma_2", b.gamma2);
            r.diag("kappa_1", b.kappa1);
            r.diag("kappa_2", b.kappa2);
            if !r.ill_posed {
                r.diag("reg_tangent_hessian", bilinear_reg_exact(data_1, data_2, beta1_star, beta2_star)?);
                let m = r.rse * r.rse;
                let u = b.inverse.1;
                let c = (b.kappa1 * b.kappa2 + 1.0) / 2.0;
                r.predicted_bounds = Some((m / u, c * m / u));
            }
            Ok(r.finish())
        }
        ProblemInstance::MatrixCompletion { probs, beta_star } => {
            let mut r = RseReport::new("matrix_completion", 2);
            let a1 = mc_graph::is_well_posed(probs, beta_star)?;
            r.ill_posed = !a1.well_posed;
            let rse = mc_graph::mc_rse(probs, beta_star, mc_mode)?;
            r.rse = rse.rse;
            r.certified = rse.certified;
            let reg = mc_graph::mc_reg(probs, beta_star)?;
            r.reg = RegValue::Bracket { lower: reg.bracket.0, upper: reg.bracket.1 };
            r.reg_source = "tangent_norm_bracket".into();
            r.diag("lambda_min", reg.lambda_min);
            r.diag("rse_squared", rse.rse_sq);
            r.diag("unobserved_mass", probs.unobserved_mass());
            r.diag("removed_pairs", rse.removed.len() as f64);
            r.notes.push(format!("mode: {}", rse.mode.name()));
            r.notes.push("no predicted product bounds for matrix completion".into());
            Ok(r.finish())
        }
    }
}
