//! Principal subspace estimation: `max_{R ∈ Gr(q,d)} E‖Rx‖²`.
//!
//! Ill-posed exactly when `λ_q = λ_{q+1}`, with `REG⁻¹ = λ_q − λ_{q+1}` and
//! `RSE = (√λ_q − √λ_{q+1})/√2`.

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::spectral::is_negligible;

fn eigen_pair(m: &Measure, q: usize) -> Result<(f64, f64, f64)> {
    let d = m.dim();
    if q == 0 || q >= d {
        return Err(Error::InvalidInput(format!("q = {q} must satisfy 1 <= q <= d-1 = {}", d.saturating_sub(1))));
    }
    let s = m.second_moment();
    let lam = s.eigenvalues();
    Ok((lam[q - 1].max(0.0), lam[q].max(0.0), s.trace()))
}

/// `1/(λ_q − λ_{q+1})`, or `+∞` when the gap is negligible relative to the trace.
pub fn pca_reg(m: &Measure, q: usize) -> Result<f64> {
    let (a, b, tr) = eigen_pair(m, q)?;
    let gap = a - b;
    Ok(if is_negligible(gap, tr) { f64::INFINITY } else { 1.0 / gap })
}

/// `(√λ_q − √λ_{q+1})/√2`, evaluated as `(λ_q − λ_{q+1})/(√2(√λ_q + √λ_{q+1}))`.
pub fn pca_rse(m: &Measure, q: usize) -> Result<f64> {
    let (a, b, tr) = eigen_pair(m, q)?;
    let gap = a - b;
    if is_negligible(gap, tr) {
        return Ok(0.0);
    }
    Ok(std::f64::consts::FRAC_1_SQRT_2 * (gap / (a.sqrt() + b.sqrt())))
}

/// Returns `1/(√2(√λ_q + √λ_{q+1}))` after checking it equals `pca_rse · pca_reg`.
pub fn pca_reciprocal_identity(m: &Measure, q: usize) -> Result<f64> {
    let (a, b, _) = eigen_pair(m, q)?;
    let reg = pca_reg(m, q)?;
    if !reg.is_finite() {
        return Err(Error::IllPosed(format!("λ_{q} = λ_{}", q + 1)));
    }
    let rhs = 1.0 / (std::f64::consts::SQRT_2 * (a.sqrt() + b.sqrt()));
    let lhs = pca_rse(m, q)? * reg;
    if (lhs - rhs).abs() > 1e-10 {
        return Err(Error::Numerical(format!("reciprocal identity off by {:e}", lhs - rhs)));
    }
    Ok(rhs)
}
