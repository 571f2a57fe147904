//! Quasi-maximum-likelihood estimation for exponential-family GLMs,
//! `min_{β ∈ M} E[h(⟨x,β⟩) − y⟨x,β⟩]`, on a manifold with tangent space `T` at `β★`.
//!
//! `RSE = √λ_min(Σ|_T)` and `c_lb ≤ REG · λ_min(Σ|_T) ≤ c_ub`, where `c_lb`, `c_ub`
//! bound `1/h″(⟨x,β★⟩)` over the support.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Subspace};
use crate::measures::{distance_to_singular_set, Measure};
use crate::spectral::{compression, is_negligible, PsdMatrix};

/// Gamma requires `⟨x,β★⟩ < −GAMMA_MARGIN` on every support point.
pub const GAMMA_MARGIN: f64 = 1e-9;

/// Cumulant (log-partition) function of a GLM family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CumulantFunction {
    Linear,
    Logistic,
    Poisson,
    Gamma,
}

impl CumulantFunction {
    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Logistic => "logistic",
            Self::Poisson => "poisson",
            Self::Gamma => "gamma",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "gaussian" => Some(Self::Linear),
            "logistic" | "bernoulli" => Some(Self::Logistic),
            "poisson" => Some(Self::Poisson),
            "gamma" => Some(Self::Gamma),
            _ => None,
        }
    }

    pub fn in_domain(self, theta: f64) -> bool {
        match self {
            Self::Gamma => theta < -GAMMA_MARGIN,
            _ => theta.is_finite(),
        }
    }

    pub fn h(self, t: f64) -> f64 {
        match self {
            Self::Linear => 0.5 * t * t,
            Self::Logistic => {
                if t > 0.0 {
                    t + (-t).exp().ln_1p()
                } else {
                    t.exp().ln_1p()
                }
            }
            Self::Poisson => t.exp(),
            Self::Gamma => -(-t).ln(),
        }
    }

    pub fn h1(self, t: f64) -> f64 {
        match self {
            Self::Linear => t,
            Self::Logistic => 1.0 / (1.0 + (-t).exp()),
            Self::Poisson => t.exp(),
            Self::Gamma => -1.0 / t,
        }
    }

    pub fn h2(self, t: f64) -> f64 {
        match self {
            Self::Linear => 1.0,
            Self::Logistic => {
                let e = (-t.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Self::Poisson => t.exp(),
            Self::Gamma => 1.0 / (t * t),
        }
    }
}

fn check_beta(m: &Measure, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: beta.len() });
    }
    Ok(())
}

/// `θ_i = ⟨x_i, β★⟩` on the support (positive weights), checked against the domain.
fn support_thetas(m: &Measure, h: CumulantFunction, beta: &DVector<f64>) -> Result<Vec<(usize, f64)>> {
    match m {
        Measure::Empirical(e) => {
            let mut out = Vec::with_capacity(e.len());
            for i in 0..e.len() {
                if e.weights()[i] <= 0.0 {
                    continue;
                }
                let theta = e.point(i).dot(beta);
                if !h.in_domain(theta) {
                    return Err(Error::CumulantDomain { index: i, theta });
                }
                out.push((i, theta));
            }
            Ok(out)
        }
        Measure::Gaussian(_) => Err(Error::Unsupported(format!(
            "Gaussian data only with the linear cumulant (got {})",
            h.name()
        ))),
    }
}

/// `H = E[h″(⟨x,β★⟩) xxᵀ]`.
pub fn qmle_hessian(m: &Measure, h: CumulantFunction, beta_star: &DVector<f64>) -> Result<PsdMatrix> {
    check_beta(m, beta_star)?;
    if let (Measure::Gaussian(g), CumulantFunction::Linear) = (m, h) {
        return Ok(g.covariance().clone());
    }
    let Measure::Empirical(e) = m else {
        return Err(Error::Unsupported(format!("Gaussian data only with the linear cumulant (got {})", h.name())));
    };
    let thetas = support_thetas(m, h, beta_star)?;
    let mut curv = vec![0.0; e.len()];
    for &(i, t) in &thetas {
        curv[i] = h.h2(t);
    }
    let pts = e.points();
    let scaled = DMatrix::from_fn(e.len(), e.dim(), |i, j| pts[(i, j)] * (e.weights()[i] * curv[i]));
    PsdMatrix::new(linalg::symmetrize(&(pts.transpose() * scaled)))
}

/// `√λ_min(Σ_μ|_T)`.
pub fn qmle_rse(m: &Measure, tangent: &Subspace) -> Result<f64> {
    Ok(distance_to_singular_set(m, tangent)?.0)
}

/// Exact REG with the `[c_lb, c_ub]/λ_min(Σ|_T)` bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct QmleReg {
    pub reg: f64,
    pub lambda_min_hessian: f64,
    pub lambda_min_sigma: f64,
    pub c_lb: f64,
    pub c_ub: f64,
    pub bracket: (f64, f64),
}

/// `REG = 1/λ_min(H|_T)` together with the curvature bracket.
pub fn qmle_reg(m: &Measure, h: CumulantFunction, beta_star: &DVector<f64>, tangent: &Subspace) -> Result<QmleReg> {
    check_beta(m, beta_star)?;
    tangent.check_ambient(m.dim())?;
    if tangent.dim() == 0 {
        return Err(Error::InvalidInput("tangent space must be nontrivial".into()));
    }
    let hess = qmle_hessian(m, h, beta_star)?;
    let (c_lb, c_ub) = match (m, h) {
        (_, CumulantFunction::Linear) => (1.0, 1.0),
        _ => {
            let thetas = support_thetas(m, h, beta_star)?;
            thetas.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &(_, t)| {
                let c = 1.0 / h.h2(t);
                (lo.min(c), hi.max(c))
            })
        }
    };
    let hc = compression(&hess, tangent)?;
    let sc = compression(&m.second_moment(), tangent)?;
    let lh = hc.lambda_min();
    if is_negligible(lh, hess.trace()) {
        return Err(Error::IllPosed("Hessian compression is singular".into()));
    }
    let ls = sc.lambda_min();
    let reg = 1.0 / lh;
    let bracket = (c_lb / ls, c_ub / ls);
    let slack = 1e-9 * reg;
    if reg < bracket.0 - slack || reg > bracket.1 + slack {
        return Err(Error::Numerical(format!("REG {reg} outside [{}, {}]", bracket.0, bracket.1)));
    }
    Ok(QmleReg { reg, lambda_min_hessian: lh, lambda_min_sigma: ls, c_lb, c_ub, bracket })
}

/// `span{e_i : β★_i ≠ 0}`.
pub fn sparse_tangent(beta_star: &DVector<f64>) -> Result<Subspace> {
    let idx: Vec<usize> = beta_star.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(i, _)| i).collect();
    if idx.is_empty() {
        return Err(Error::InvalidInput("β★ is the zero vector".into()));
    }
    Subspace::coordinates(beta_star.len(), &idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::EmpiricalMeasure;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn cumulant_derivatives_match_finite_differences() {
        for h in [CumulantFunction::Linear, CumulantFunction::Logistic, CumulantFunction::Poisson, CumulantFunction::Gamma] {
            for &t in &[-2.5, -0.7, -0.1] {
                let e = 1e-6;
                let d1 = (h.h(t + e) - h.h(t - e)) / (2.0 * e);
                let d2 = (h.h1(t + e) - h.h1(t - e)) / (2.0 * e);
                assert!((d1 - h.h1(t)).abs() < 1e-6 * h.h2(t).max(1.0), "{h:?}");
                assert!((d2 - h.h2(t)).abs() < 1e-6 * h.h2(t).max(1.0), "{h:?}");
            }
        }
        assert_eq!(CumulantFunction::Logistic.h2(0.0), 0.25);
        assert!((CumulantFunction::Logistic.h2(40.0) - 40f64.exp() / (1.0 + 40f64.exp()).powi(2)).abs() < 1e-30);
    }

    #[test]
    fn hessian_examples() {
        let g = Measure::gaussian(PsdMatrix::diag(&[9.0, 1.0]).unwrap());
        let h = qmle_hessian(&g, CumulantFunction::Linear, &dv(&[1.0, 2.0])).unwrap();
        assert_eq!(h.entries(), g.second_moment().entries());

        let x = EmpiricalMeasure::from_rows(&[vec![1.0, 2.0]], None).unwrap();
        let m = Measure::from(x);
        let h = qmle_hessian(&m, CumulantFunction::Logistic, &dv(&[2.0, -1.0])).unwrap();
        assert_eq!(h.entries(), &DMatrix::from_row_slice(2, 2, &[0.25, 0.5, 0.5, 1.0]));

        let p = Measure::from(EmpiricalMeasure::from_rows(&[vec![1.0, 0.0]], None).unwrap());
        let h = qmle_hessian(&p, CumulantFunction::Poisson, &dv(&[0.0, 0.0])).unwrap();
        assert_eq!(h.entries(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn gamma_domain_enforced() {
        let m = Measure::from(EmpiricalMeasure::from_rows(&[vec![1.0], vec![-1.0]], None).unwrap());
        let err = qmle_hessian(&m, CumulantFunction::Gamma, &dv(&[1.0])).unwrap_err();
        assert!(matches!(err, Error::CumulantDomain { index: 0, .. }));
        let g = Measure::gaussian(PsdMatrix::identity(1));
        assert!(matches!(qmle_hessian(&g, CumulantFunction::Gamma, &dv(&[1.0])), Err(Error::Unsupported(_))));
    }

    #[test]
    fn rse_examples() {
        let g = Measure::gaussian(PsdMatrix::diag(&[9.0, 1.0]).unwrap());
        assert_eq!(qmle_rse(&g, &Subspace::full(2)).unwrap(), 1.0);
        let beta = dv(&[0.0, 3.0, 0.0, -2.0]);
        let g = Measure::gaussian(PsdMatrix::diag(&[1.0, 2.0, 3.0, 4.0]).unwrap());
        let r = qmle_rse(&g, &sparse_tangent(&beta).unwrap()).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        let s = Measure::gaussian(PsdMatrix::diag(&[1.0, 0.0]).unwrap());
        assert_eq!(qmle_rse(&s, &Subspace::full(2)).unwrap(), 0.0);
    }

    #[test]
    fn reg_examples() {
        let g = Measure::gaussian(PsdMatrix::diag(&[9.0, 1.0]).unwrap());
        let r = qmle_reg(&g, CumulantFunction::Linear, &dv(&[1.0, 1.0]), &Subspace::full(2)).unwrap();
        assert_eq!(r.reg, 1.0);
        assert_eq!(r.bracket, (1.0, 1.0));

        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let m = Measure::from(EmpiricalMeasure::from_rows(&pts, None).unwrap());
        let narrow = qmle_reg(&m, CumulantFunction::Logistic, &dv(&[0.0, 1.0]), &Subspace::full(2)).unwrap();
        let wide = qmle_reg(&m, CumulantFunction::Logistic, &dv(&[0.0, 6.0]), &Subspace::full(2)).unwrap();
        assert!(wide.c_ub > narrow.c_ub);
        assert_eq!(wide.c_lb, 4.0);

        let s = Measure::gaussian(PsdMatrix::diag(&[1.0, 0.0]).unwrap());
        assert!(matches!(
            qmle_reg(&s, CumulantFunction::Linear, &dv(&[1.0, 0.0]), &Subspace::full(2)),
            Err(Error::IllPosed(_))
        ));
    }

    #[test]
    fn sparse_tangent_examples() {
        let t = sparse_tangent(&dv(&[0.0, 3.0, 0.0, -2.0])).unwrap();
        assert_eq!(t, Subspace::coordinates(4, &[1, 3]).unwrap());
        assert_eq!(sparse_tangent(&dv(&[1.0, 2.0])).unwrap(), Subspace::full(2));
        assert_eq!(sparse_tangent(&dv(&[1.0, 0.0])).unwrap(), Subspace::coordinates(2, &[0]).unwrap());
        assert!(sparse_tangent(&dv(&[0.0, 0.0])).is_err());
    }
}
