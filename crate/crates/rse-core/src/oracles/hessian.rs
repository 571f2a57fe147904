//! Covariant Hessians by central differences along retraction curves.
//!
//! Each family supplies a parameter space, a curve `w ↦ φ(w)` through the
//! minimizer (`φ(0) = f(β★)`) and the metric `G` the curve induces at `w = 0`.
//! At a critical point the second derivative along any curve with velocity `ξ`
//! is the covariant Hessian `∇²f[ξ, ξ]`, so `REG⁻¹ = λ_min(H, G)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Subspace};
use crate::measures::Measure;
use crate::problems::{Formulation, ProblemInstance};

/// Base step of the central second difference.
pub const FD_STEP: f64 = 1e-4;
/// `λ_min(H, G)` below this fraction of the Hessian scale counts as singular.
const SINGULAR_REL: f64 = 1e-7;

/// Finite-difference REG with the pencil it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericReg {
    pub reg: f64,
    pub lambda_min: f64,
    pub hessian: DMatrix<f64>,
    pub metric: DMatrix<f64>,
}

/// Richardson-extrapolated second directional derivative of `phi` at 0 along `w`.
fn second_derivative(phi: &dyn Fn(&DVector<f64>) -> f64, w: &DVector<f64>, f0: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> {
        let (p, m) = (phi(&(w * h)), phi(&(w * -h)));
        if !p.is_finite() || !m.is_finite() {
            return Err(Error::Numerical("objective is not finite along the curve".into()));
        }
        Ok((p - 2.0 * f0 + m) / (h * h))
    };
    let (coarse, fine) = (d(FD_STEP)?, d(FD_STEP / 2.0)?);
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `H_ij` from second differences; off-diagonals by polarization.
pub fn numeric_hessian(phi: &dyn Fn(&DVector<f64>) -> f64, n: usize) -> Result<DMatrix<f64>> {
    let f0 = phi(&DVector::zeros(n));
    if !f0.is_finite() {
        return Err(Error::Numerical("objective is not finite at the minimizer".into()));
    }
    let e = |i: usize| {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    };
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = second_derivative(phi, &e(i), f0)?;
        for j in 0..i {
            let plus = second_derivative(phi, &(e(i) + e(j)), f0)?;
            let minus = second_derivative(phi, &(e(i) - e(j)), f0)?;
            let v = (plus - minus) / 4.0;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

type Curve = Box<dyn Fn(&DVector<f64>) -> f64>;

fn pca_curve(data: &Measure, q: usize) -> Result<(Curve, DMatrix<f64>)> {
    let d = data.dim();
    let sigma = data.second_moment();
    let vecs = sigma.eigen().vectors.clone();
    let u = vecs.columns(0, q).into_owned();
    let uperp = vecs.columns(q, d - q).into_owned();
    let s = sigma.entries().clone();
    let n = (d - q) * q;
    let phi = move |w: &DVector<f64>| {
        let c = DMatrix::from_column_slice(d - q, q, w.as_slice());
        let m = &u + &uperp * c;
        let gram = m.transpose() * &m;
        let Some(inv) = gram.try_inverse() else { return f64::NAN };
        let r = &m * inv * m.transpose();
        -(r * &s).trace()
    };
    // ‖d(UUᵀ)‖_F² = 2‖C‖_F².
    Ok((Box::new(phi), DMatrix::identity(n, n) * 2.0))
}

fn qmle_curve(
    data: &Measure,
    h: crate::problems::CumulantFunction,
    beta: &DVector<f64>,
    tangent: &Subspace,
) -> Result<(Curve, DMatrix<f64>)> {
    let k = tangent.dim();
    let t = tangent.basis().clone();
    let beta = beta.clone();
    let phi: Curve = match data {
        Measure::Gaussian(g) => {
            if h != crate::problems::CumulantFunction::Linear {
                return Err(Error::Unsupported("Gaussian data only with the linear cumulant".into()));
            }
            let s = g.covariance().entries().clone();
            Box::new(move |w: &DVector<f64>| {
                let b = &beta + &t * w;
                0.5 * b.dot(&(&s * &b)) - beta.dot(&(&s * &b))
            })
        }
        Measure::Empirical(e) => {
            let pts = e.points().clone();
            let wts = e.weights().clone();
            let theta0 = &pts * &beta;
            for (i, &th) in theta0.iter().enumerate() {
                if wts[i] > 0.0 && !h.in_domain(th) {
                    return Err(Error::CumulantDomain { index: i, theta: th });
                }
            }
            Box::new(move |w: &DVector<f64>| {
                let b = &beta + &t * w;
                let theta = &pts * &b;
                (0..pts.nrows())
                    .filter(|&i| wts[i] > 0.0)
                    .map(|i| wts[i] * (h.h(theta[i]) - h.h1(theta0[i]) * theta[i]))
                    .sum()
            })
        }
    };
    Ok((phi, DMatrix::identity(k, k)))
}

/// `E[(⟨x,w⟩⟨x,2β+w⟩)²]`, the factored residual `E(⟨x,β+w⟩² − ⟨x,β⟩²)²` without cancellation.
fn phase_residual(data: &Measure, beta: &DVector<f64>) -> Curve {
    let beta = beta.clone();
    match data {
        Measure::Gaussian(g) => {
            let s = g.covariance().entries().clone();
            Box::new(move |w: &DVector<f64>| {
                let q = &beta * 2.0 + w;
                let (sw, sq) = (&s * w, &s * &q);
                w.dot(&sw) * q.dot(&sq) + 2.0 * w.dot(&sq).powi(2)
            })
        }
        Measure::Empirical(e) => {
            let pts = e.points().clone();
            let wts = e.weights().clone();
            Box::new(move |w: &DVector<f64>| {
                let q = &beta * 2.0 + w;
                let (a, b) = (&pts * w, &pts * &q);
                (0..pts.nrows()).map(|i| wts[i] * (a[i] * b[i]).powi(2)).sum()
            })
        }
    }
}

fn curve_for(problem: &ProblemInstance) -> Result<(Curve, DMatrix<f64>)> {
    match problem {
        ProblemInstance::Pca { data, q } => pca_curve(data, *q),
        ProblemInstance::Qmle { data_x, cumulant, beta_star, tangent } => qmle_curve(data_x, *cumulant, beta_star, tangent),
        ProblemInstance::PhaseRetrieval { data_x, beta_star, formulation } => {
            let r = phase_residual(data_x, beta_star);
            let d = data_x.dim();
            match formulation {
                Formulation::Factored => Ok((Box::new(move |w: &DVector<f64>| r(w) / 8.0), DMatrix::identity(d, d))),
                Formulation::RankOne => {
                    let g = DMatrix::identity(d, d) * (2.0 * beta_star.norm_squared()) + beta_star * beta_star.transpose() * 2.0;
                    Ok((Box::new(move |w: &DVector<f64>| r(w) / 2.0), g))
                }
            }
        }
        ProblemInstance::Bilinear { data_1, data_2, beta1_star, beta2_star } => {
            let d1 = beta1_star.len();
            let comp = Subspace::orthogonal_to(beta2_star)?;
            let bperp = comp.basis().clone();
            let (s1, s2) = (data_1.second_moment().entries().clone(), data_2.second_moment().entries().clone());
            let (b1, b2) = (beta1_star.clone(), beta2_star.clone());
            let m0 = &b1 * b2.transpose();
            let k = comp.dim();
            let phi = move |p: &DVector<f64>| {
                let w = p.rows(0, d1).into_owned();
                let v = &bperp * p.rows(d1, k);
                let delta = (&b1 + w) * (&b2 + v).transpose() - &m0;
                0.5 * (delta.transpose() * &s1 * &delta * &s2).trace()
            };
            let mut g = DMatrix::zeros(d1 + k, d1 + k);
            for i in 0..d1 {
                g[(i, i)] = beta2_star.norm_squared();
            }
            for i in d1..d1 + k {
                g[(i, i)] = beta1_star.norm_squared();
            }
            Ok((Box::new(phi), g))
        }
        ProblemInstance::MatrixCompletion { probs, beta_star } => {
            let p = probs.entries().clone();
            let b = beta_star.clone();
            let phi = move |w: &DVector<f64>| {
                let delta = &b * w.transpose() + w * b.transpose() + w * w.transpose();
                0.5 * p.component_mul(&delta.component_mul(&delta)).sum()
            };
            let phi_m = crate::mc_graph::phi_matrix(beta_star);
            Ok((Box::new(phi), linalg::symmetrize(&(phi_m.transpose() * phi_m))))
        }
    }
}

/// `1/λ_min(H, G)` with `H` the finite-difference Hessian along the family's curve.
pub fn numeric_reg(problem: &ProblemInstance) -> Result<NumericReg> {
    problem.validate()?;
    let (phi, metric) = curve_for(problem)?;
    let n = metric.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("trivial parameter space".into()));
    }
    let hessian = linalg::symmetrize(&numeric_hessian(phi.as_ref(), n)?);
    let (lam, _) = linalg::generalized_min_eig(&hessian, &metric)?;
    let scale = (0..n).map(|i| hessian[(i, i)].abs() / metric[(i, i)]).fold(0.0_f64, f64::max);
    if lam <= SINGULAR_REL * scale || scale == 0.0 {
        return Err(Error::IllPosed(format!("finite-difference Hessian is singular (λ_min = {lam:e})")));
    }
    Ok(NumericReg { reg: 1.0 / lam, lambda_min: lam, hessian, metric })
}
