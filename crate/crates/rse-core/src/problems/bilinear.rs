//! Bilinear sensing, `y = x₁ᵀ β₁★ β₂★ᵀ x₂` with independent factors `x₁ ∼ μ`, `x₂ ∼ ν`.
//!
//! `RSE = min{√λ_min(Σ₁), √λ_min(Σ₂)}`. REG is bracketed by a Wielandt-type
//! inequality and computed exactly from the Hessian `Δ ↦ tr(ΔᵀΣ₁ΔΣ₂)` on the
//! tangent space `{w β̂₂ᵀ + β̂₁ vᵀ : v ⊥ β̂₂}` of the rank-one manifold.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{random, Subspace};
use crate::measures::Measure;
use crate::spectral::PsdMatrix;

/// `min{√λ_min(Σ₁), √λ_min(Σ₂)}`.
pub fn bilinear_rse(m1: &Measure, m2: &Measure) -> Result<f64> {
    let a = m1.second_moment().lambda_min().max(0.0);
    let b = m2.second_moment().lambda_min().max(0.0);
    Ok(a.min(b).sqrt())
}

/// The REG bracket with the quantities it is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearRegBounds {
    pub gamma1: f64,
    pub gamma2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// `[2u/(κ₁κ₂+1), u]` with `u = min{γ₂λ_min(Σ₁), γ₁λ_min(Σ₂)}`.
    pub inverse: (f64, f64),
    /// `[1/u, (κ₁κ₂+1)/(2u)]`.
    pub reg: (f64, f64),
}

fn check(m: &Measure, beta: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    if beta.len() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: beta.len() });
    }
    if !(beta.norm() > 0.0) || beta.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} must be a nonzero finite vector")));
    }
    Ok(beta.normalize())
}

/// REG bracket from `γ_i = ⟨Σ_i β̂_i, β̂_i⟩` and the condition numbers `κ_i`.
pub fn bilinear_reg_bounds(m1: &Measure, m2: &Measure, beta1: &DVector<f64>, beta2: &DVector<f64>) -> Result<BilinearRegBounds> {
    let b1 = check(m1, beta1, "β₁★")?;
    let b2 = check(m2, beta2, "β₂★")?;
    let (s1, s2) = (m1.second_moment(), m2.second_moment());
    let (gamma1, gamma2) = (s1.quad(&b1), s2.quad(&b2));
    if s1.is_numerically_singular() || s2.is_numerically_singular() {
        return Ok(BilinearRegBounds {
            gamma1,
            gamma2,
            kappa1: s1.condition_number(),
            kappa2: s2.condition_number(),
            inverse: (0.0, 0.0),
            reg: (f64::INFINITY, f64::INFINITY),
        });
    }
    let (kappa1, kappa2) = (s1.condition_number(), s2.condition_number());
    let u = (gamma2 * s1.lambda_min()).min(gamma1 * s2.lambda_min());
    let c = kappa1 * kappa2 + 1.0;
    Ok(BilinearRegBounds { gamma1, gamma2, kappa1, kappa2, inverse: (2.0 * u / c, u), reg: (1.0 / u, c / (2.0 * u)) })
}

/// Hessian of `tr(ΔᵀΣ₁ΔΣ₂)` in orthonormal tangent coordinates `(w, v)`.
pub(crate) fn bilinear_tangent_hessian(s1: &DMatrix<f64>, s2: &DMatrix<f64>, b1: &DVector<f64>, b2: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (d1, d2) = (b1.len(), b2.len());
    let comp = Subspace::orthogonal_to(b2)?;
    let mut basis: Vec<DMatrix<f64>> = Vec::with_capacity(d1 + d2 - 1);
    for i in 0..d1 {
        let mut e = DVector::zeros(d1);
        e[i] = 1.0;
        basis.push(&e * b2.transpose());
    }
    for k in 0..comp.dim() {
        basis.push(b1 * comp.basis().column(k).transpose());
    }
    let n = basis.len();
    let images: Vec<DMatrix<f64>> = basis.iter().map(|d| s1 * d * s2).collect();
    let mut h = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = basis[a].dot(&images[b]);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    Ok(h)
}

/// Exact REG: `1/λ_min` of the tangent Hessian; `+∞` when either factor is singular.
pub fn bilinear_reg_exact(m1: &Measure, m2: &Measure, beta1: &DVector<f64>, beta2: &DVector<f64>) -> Result<f64> {
    let b1 = check(m1, beta1, "β₁★")?;
    let b2 = check(m2, beta2, "β₂★")?;
    let (s1, s2) = (m1.second_moment(), m2.second_moment());
    let h = bilinear_tangent_hessian(s1.entries(), s2.entries(), &b1, &b2)?;
    let hp = PsdMatrix::new(h)?;
    if hp.is_numerically_singular() || s1.is_numerically_singular() || s2.is_numerically_singular() {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / hp.lambda_min())
}

/// Outcome of the Wielandt-type inequality check.
#[derive(Debug, Clone, PartialEq)]
pub struct WielandtReport {
    pub kappa: f64,
    /// `2/(κ²+1)`.
    pub factor: f64,
    pub trials: usize,
    /// Smallest `‖Ax+Ay‖² − factor·(‖Ax‖²+‖Ay‖²)`, relative to the right side.
    pub min_relative_margin: f64,
    pub witness_ratio: f64,
    pub witness_error: f64,
    pub inequality_holds: bool,
    pub witness_equal: bool,
}

impl WielandtReport {
    pub fn holds(&self) -> bool {
        self.inequality_holds && self.witness_equal
    }
}

/// Checks `‖Ax+Ay‖² ≥ 2/(κ(A)²+1)·(‖Ax‖²+‖Ay‖²)` on random orthogonal unit pairs and
/// equality at `x = (u₁+u_n)/√2`, `y = (u_n−u₁)/√2`.
pub fn wielandt_claim_check(a: &PsdMatrix, trials: usize, seed: u64) -> Result<WielandtReport> {
    let d = a.dim();
    if d < 2 {
        return Err(Error::InvalidInput("need dimension at least 2 for orthogonal pairs".into()));
    }
    if a.is_numerically_singular() {
        return Err(Error::IllPosed("A must be nonsingular".into()));
    }
    let kappa = a.condition_number();
    let factor = 2.0 / (kappa * kappa + 1.0);
    let am = a.entries();
    let measure = |x: &DVector<f64>, y: &DVector<f64>| {
        let (ax, ay) = (am * x, am * y);
        ((&ax + &ay).norm_squared(), ax.norm_squared() + ay.norm_squared())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    for _ in 0..trials {
        let x = random::unit_vector(&mut rng, d);
        let mut y = random::gaussian_vector(&mut rng, d);
        y -= &x * x.dot(&y);
        let y = y.normalize();
        let (lhs, rhs) = measure(&x, &y);
        min_margin = min_margin.min((lhs - factor * rhs) / rhs);
    }
    let vecs = &a.eigen().vectors;
    let (u1, un) = (vecs.column(0).into_owned(), vecs.column(d - 1).into_owned());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&u1 + &un) * s;
    let y = (&un - &u1) * s;
    let (lhs, rhs) = measure(&x, &y);
    let witness_ratio = lhs / rhs;
    let witness_error = (witness_ratio - factor).abs();
    Ok(WielandtReport {
        kappa,
        factor,
        trials,
        min_relative_margin: min_margin,
        witness_ratio,
        witness_error,
        inequality_holds: trials == 0 || min_margin >= -1e-12,
        witness_equal: witness_error <= 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(diag: &[f64]) -> Measure {
        Measure::gaussian(PsdMatrix::diag(diag).unwrap())
    }

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn rse_examples() {
        assert_eq!(bilinear_rse(&g(&[4.0, 1.0]), &g(&[9.0, 4.0])).unwrap(), 1.0);
        assert_eq!(bilinear_rse(&g(&[4.0, 0.0]), &g(&[9.0, 4.0])).unwrap(), 0.0);
        assert_eq!(bilinear_rse(&g(&[1.0, 1.0]), &g(&[1.0, 1.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn bracket_examples() {
        let e1 = dv(&[3.0, 0.0]);
        let b = bilinear_reg_bounds(&g(&[4.0, 1.0]), &g(&[9.0, 4.0]), &e1, &e1).unwrap();
        assert_eq!((b.gamma1, b.gamma2, b.kappa1, b.kappa2), (4.0, 9.0, 4.0, 2.25));
        assert!((b.inverse.0 - 1.8).abs() < 1e-15 && b.inverse.1 == 9.0);
        let exact = bilinear_reg_exact(&g(&[4.0, 1.0]), &g(&[9.0, 4.0]), &e1, &e1).unwrap();
        assert!((exact - 1.0 / 9.0).abs() < 1e-15);

        let b = bilinear_reg_bounds(&g(&[1.0, 1.0]), &g(&[1.0, 1.0]), &dv(&[1.0, 2.0]), &dv(&[0.5, 0.5])).unwrap();
        assert!((b.inverse.0 - 1.0).abs() < 1e-15 && (b.inverse.1 - 1.0).abs() < 1e-15);

        let (b1, b2) = (dv(&[1.0, 0.3]), dv(&[-0.2, 1.0, 0.5]));
        let (m1, m2) = (g(&[4.0, 1.5]), g(&[2.0, 3.0, 0.7]));
        let ab = bilinear_reg_bounds(&m1, &m2, &b1, &b2).unwrap();
        let ba = bilinear_reg_bounds(&m2, &m1, &b2, &b1).unwrap();
        assert_eq!(ab.inverse, ba.inverse);
        let ea = bilinear_reg_exact(&m1, &m2, &b1, &b2).unwrap();
        let eb = bilinear_reg_exact(&m2, &m1, &b2, &b1).unwrap();
        assert!((ea - eb).abs() < 1e-12 * ea);
        assert!(ea >= ab.reg.0 * (1.0 - 1e-12) && ea <= ab.reg.1 * (1.0 + 1e-12));

        let b = bilinear_reg_bounds(&g(&[1.0, 0.0]), &g(&[1.0, 1.0]), &e1, &e1).unwrap();
        assert_eq!(b.reg.0, f64::INFINITY);
    }

    #[test]
    fn wielandt_examples() {
        let r = wielandt_claim_check(&PsdMatrix::identity(3), 200, 1).unwrap();
        assert!(r.holds() && r.factor == 1.0 && r.min_relative_margin.abs() < 1e-12);
        let r = wielandt_claim_check(&PsdMatrix::diag(&[2.0, 1.0]).unwrap(), 10, 2).unwrap();
        assert!(r.witness_error < 1e-12 && (r.factor - 0.4).abs() < 1e-15);
        let r = wielandt_claim_check(&PsdMatrix::diag(&[5.0, 1.0]).unwrap(), 500, 3).unwrap();
        assert!(r.holds() && r.min_relative_margin >= 0.0);
    }
}
