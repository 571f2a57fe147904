//! PSD matrix geometry.
//!
//! Bures–Wasserstein, Procrustes and orbit distances between second-moment
//! matrices, plus spectral functions of measures. A spectral function depends
//! only on the eigenvalues `λ(Σ_μ)`, and its Wasserstein Moreau envelope reduces
//! to a Hellinger-geometry envelope on the eigenvalue vector:
//!
//! ```text
//! F_ρ(μ) = f_ρ(λ(Σ_μ)),   f_ρ(x) = min_u f(u) + ‖√x − √u‖² / (2ρ)
//! ```
//!
//! ## Eigenvalue ties
//!
//! Within a repeated eigenvalue the eigenvectors are chosen by Gram–Schmidt of
//! the eigenspace projector applied to `e_1, e_2, …` in index order. Simple
//! eigenvectors are signed so that their largest-magnitude entry is positive.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Subspace};
use crate::measures::Measure;

/// Symmetry tolerance, relative to `max(1, max|a_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Negative eigenvalues above `−PSD_CLIP_TOL·max(1, λ_max)` are clipped to zero.
pub const PSD_CLIP_TOL: f64 = 1e-10;
/// Relative gap below which neighbouring eigenvalues are treated as tied.
pub const TIE_TOL: f64 = 1e-11;

/// Sorted symmetric eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    /// Nonincreasing eigenvalues.
    pub values: DVector<f64>,
    /// Orthogonal matrix whose columns are the matching eigenvectors.
    pub vectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Eigenvector of the smallest eigenvalue.
    pub fn min_vector(&self) -> DVector<f64> {
        self.vectors.column(self.dim() - 1).into_owned()
    }

    /// `U diag(φ(λ)) Uᵀ`.
    pub fn map(&self, phi: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d = self.dim();
        let scaled = DMatrix::from_fn(d, d, |i, j| self.vectors[(i, j)] * phi(self.values[j]));
        linalg::symmetrize(&(scaled * self.vectors.transpose()))
    }
}

/// Eigendecomposition of a symmetric matrix, sorted nonincreasingly with the
/// deterministic tie rule described in the module docs.
pub fn eigensystem(a: &DMatrix<f64>) -> Result<EigenSystem> {
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::NotSquare(r, c));
    }
    let scale = linalg::max_abs(a).max(1.0);
    let asym = linalg::max_asymmetry(a);
    if !(asym <= SYMMETRY_TOL * scale) {
        return Err(Error::NotSymmetric(asym));
    }
    if r == 0 {
        return Ok(EigenSystem { values: DVector::zeros(0), vectors: DMatrix::zeros(0, 0) });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let eig = linalg::symmetrize(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = DVector::from_iterator(r, order.iter().map(|&i| eig.eigenvalues[i]));
    let raw: Vec<DVector<f64>> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();

    let tol = TIE_TOL * values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut vectors = DMatrix::zeros(r, r);
    let mut start = 0;
    while start < r {
        let mut end = start + 1;
        while end < r && values[end - 1] - values[end] <= tol {
            end += 1;
        }
        if end - start == 1 {
            let mut v = raw[start].clone();
            let mut imax = 0;
            for i in 1..r {
                if v[i].abs() > v[imax].abs() {
                    imax = i;
                }
            }
            if v[imax] < 0.0 {
                v.neg_mut();
            }
            vectors.set_column(start, &v);
        } else {
            let block = &raw[start..end];
            let project = |e: &DVector<f64>| {
                let mut out = DVector::zeros(r);
                for q in block {
                    out.axpy(q.dot(e), q, 1.0);
                }
                out
            };
            let mut chosen = linalg::standard_basis_completion(r, &[], end - start, project);
            if chosen.len() < end - start {
                // Numerically unreachable; keep the solver's own basis.
                chosen = block.to_vec();
            }
            for (k, v) in chosen.iter().enumerate() {
                vectors.set_column(start + k, v);
            }
        }
        start = end;
    }
    Ok(EigenSystem { values, vectors })
}

/// Symmetric positive-semidefinite matrix with a cached eigensystem.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    entries: DMatrix<f64>,
    eig: EigenSystem,
}

impl PsdMatrix {
    /// Validates symmetry and semidefiniteness; clips tiny negative eigenvalues.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let mut eig = eigensystem(&entries)?;
        let mut entries = linalg::symmetrize(&entries);
        if eig.dim() == 0 {
            return Ok(Self { entries, eig });
        }
        let floor = -PSD_CLIP_TOL * eig.lambda_max().abs().max(1.0);
        let lmin = eig.lambda_min();
        if lmin < floor {
            return Err(Error::NotPsd(lmin));
        }
        if lmin < 0.0 {
            for v in eig.values.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            entries = eig.map(|x| x);
        }
        Ok(Self { entries, eig })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare(n, bad.len()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn identity(d: usize) -> Self {
        Self::new(DMatrix::identity(d, d)).expect("identity is PSD")
    }

    pub fn zeros(d: usize) -> Self {
        Self::new(DMatrix::zeros(d, d)).expect("zero matrix is PSD")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn eigen(&self) -> &EigenSystem {
        &self.eig
    }

    /// Eigenvalues in nonincreasing order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eig.values
    }

    pub fn lambda_min(&self) -> f64 {
        self.eig.lambda_min()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig.lambda_max()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Principal square root through the clipped eigendecomposition.
    pub fn sqrt(&self) -> DMatrix<f64> {
        self.eig.map(|x| x.max(0.0).sqrt())
    }

    /// `⟨A v, v⟩`.
    pub fn quad(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.entries * v))
    }

    /// Condition number `λ_max/λ_min` (infinite when singular).
    pub fn condition_number(&self) -> f64 {
        let lmin = self.lambda_min();
        if lmin <= 0.0 {
            f64::INFINITY
        } else {
            self.lambda_max() / lmin
        }
    }

    /// `c·A` for `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(Error::InvalidInput(format!("negative PSD scaling {c}")));
        }
        Self::new(&self.entries * c)
    }

    /// `M A Mᵀ`.
    pub fn congruence(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: m.ncols() });
        }
        Self::new(linalg::symmetrize(&(m * &self.entries * m.transpose())))
    }

    /// `true` when `λ_min ≤ 1e-12·tr`, the toolkit-wide ill-posedness threshold.
    pub fn is_numerically_singular(&self) -> bool {
        is_negligible(self.lambda_min(), self.trace())
    }
}

/// Ill-posedness threshold: `x ≤ 1e-12 · scale` (everything is negligible at zero scale).
pub fn is_negligible(x: f64, scale: f64) -> bool {
    x <= ILL_POSED_REL * scale.abs()
}

/// Gaps and eigenvalues below this fraction of the trace are treated as zero.
pub const ILL_POSED_REL: f64 = 1e-12;

fn same_dim(a: &PsdMatrix, b: &PsdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

/// `W2(N(0,A), N(0,B)) = √tr(A + B − 2(A^{1/2} B A^{1/2})^{1/2})`.
pub fn bures_wasserstein(a: &PsdMatrix, b: &PsdMatrix) -> Result<f64> {
    same_dim(a, b)?;
    // tr (A^{1/2} B A^{1/2})^{1/2} as the nuclear norm of B^{1/2} A^{1/2}, which avoids
    // square roots of tiny eigenvalues.
    let cross: f64 = (b.sqrt() * a.sqrt()).singular_values().sum();
    let sq = a.trace() + b.trace() - 2.0 * cross;
    Ok(sq.max(0.0).sqrt())
}

/// `min_{U ∈ O(d)} ‖A^{1/2} − B^{1/2} U‖_F`, with `U` the polar factor of `B^{1/2} A^{1/2}`.
pub fn procrustes_distance(a: &PsdMatrix, b: &PsdMatrix) -> Result<f64> {
    same_dim(a, b)?;
    if a.dim() == 0 {
        return Ok(0.0);
    }
    let x = a.sqrt();
    let y = b.sqrt();
    let svd = (y.transpose() * &x).svd(true, true);
    let (w, vt) = match (svd.u, svd.v_t) {
        (Some(w), Some(vt)) => (w, vt),
        _ => return Err(Error::Numerical("SVD failed in Procrustes problem".into())),
    };
    let u = w * vt;
    Ok((x - y * u).norm())
}

/// `‖√λ(A) − √s‖₂` where `s` is sorted nonincreasingly first.
pub fn orbit_distance(a: &PsdMatrix, spectrum: &[f64]) -> Result<f64> {
    if spectrum.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: spectrum.len() });
    }
    let s = clip_spectrum(spectrum)?;
    Ok(hellinger(a.eigenvalues().as_slice(), &s))
}

/// Nearest point of the orbit `{U diag(s) Uᵀ}` to `A`.
pub fn nearest_orbit_point(a: &PsdMatrix, spectrum: &[f64]) -> Result<PsdMatrix> {
    if spectrum.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: spectrum.len() });
    }
    let s = clip_spectrum(spectrum)?;
    let e = a.eigen();
    let d = a.dim();
    let m = DMatrix::from_fn(d, d, |i, j| e.vectors[(i, j)] * s[j]) * e.vectors.transpose();
    PsdMatrix::new(linalg::symmetrize(&m))
}

fn clip_spectrum(spectrum: &[f64]) -> Result<Vec<f64>> {
    let top = spectrum.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut s = Vec::with_capacity(spectrum.len());
    for &v in spectrum {
        if !v.is_finite() || v < -PSD_CLIP_TOL * top {
            return Err(Error::InvalidInput(format!("negative spectrum entry {v}")));
        }
        s.push(v.max(0.0));
    }
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Hellinger distance `‖√x − √y‖₂` between nonnegative vectors.
pub fn hellinger(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let t = a.max(0.0).sqrt() - b.max(0.0).sqrt();
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

/// Permutation sorting `x` nonincreasingly (ties by index).
fn desc_order(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[j].total_cmp(&x[i]).then(i.cmp(&j)));
    order
}

/// A permutation-invariant function on `R^d_+` with its Hellinger proximal map.
pub trait SymmetricFunction: Send + Sync {
    /// `f(x)`, possibly `+∞`.
    fn eval(&self, x: &[f64]) -> f64;

    /// A minimizer of `f(u) + ‖√x − √u‖²/(2ρ)`, or `None` when unavailable.
    fn hellinger_prox(&self, x: &[f64], rho: f64) -> Option<Vec<f64>>;

    /// Whether `f` is the indicator of a set (then the prox is a projection).
    fn is_indicator(&self) -> bool {
        false
    }
}

/// Indicator of `G_q = {v : v_(q) = v_(q+1)}` on order statistics (1-based `q`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualAdjacent {
    pub q: usize,
}

impl SymmetricFunction for EqualAdjacent {
    fn eval(&self, x: &[f64]) -> f64 {
        if self.q == 0 || self.q >= x.len() {
            return f64::INFINITY;
        }
        let mut s = x.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        let (a, b) = (s[self.q - 1], s[self.q]);
        if (a - b).abs() <= 1e-12 * a.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Averages `√x_(q)` and `√x_(q+1)`. Sorting first keeps the pooled value
    /// between its neighbours, so no further pooling is required. When `x_(q−1) = x_(q)`
    /// or `x_(q+1) = x_(q+2)` the projection is not unique; this one is returned.
    fn hellinger_prox(&self, x: &[f64], _rho: f64) -> Option<Vec<f64>> {
        if self.q == 0 || self.q >= x.len() {
            return None;
        }
        let order = desc_order(x);
        let mut roots: Vec<f64> = order.iter().map(|&i| x[i].max(0.0).sqrt()).collect();
        let avg = 0.5 * (roots[self.q - 1] + roots[self.q]);
        roots[self.q - 1] = avg;
        roots[self.q] = avg;
        let mut out = vec![0.0; x.len()];
        for (k, &i) in order.iter().enumerate() {
            out[i] = roots[k] * roots[k];
        }
        Some(out)
    }

    fn is_indicator(&self) -> bool {
        true
    }
}

/// Indicator of a fixed orbit `{permutations of s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedOrbit {
    spectrum: Vec<f64>,
}

impl FixedOrbit {
    pub fn new(spectrum: &[f64]) -> Result<Self> {
        Ok(Self { spectrum: clip_spectrum(spectrum)? })
    }
}

impl SymmetricFunction for FixedOrbit {
    fn eval(&self, x: &[f64]) -> f64 {
        if x.len() != self.spectrum.len() {
            return f64::INFINITY;
        }
        let mut s = x.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        let close = s
            .iter()
            .zip(&self.spectrum)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
        if close {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn hellinger_prox(&self, x: &[f64], _rho: f64) -> Option<Vec<f64>> {
        if x.len() != self.spectrum.len() {
            return None;
        }
        let order = desc_order(x);
        let mut out = vec![0.0; x.len()];
        for (k, &i) in order.iter().enumerate() {
            out[i] = self.spectrum[k];
        }
        Some(out)
    }

    fn is_indicator(&self) -> bool {
        true
    }
}

/// Indicator of `{0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroSet;

impl SymmetricFunction for ZeroSet {
    fn eval(&self, x: &[f64]) -> f64 {
        if x.iter().all(|&v| v == 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn hellinger_prox(&self, x: &[f64], _rho: f64) -> Option<Vec<f64>> {
        Some(vec![0.0; x.len()])
    }

    fn is_indicator(&self) -> bool {
        true
    }
}

/// `f(x) = Σ x_i`, i.e. the trace. Its prox is `x/(1+2ρ)²` coordinatewise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norm;

impl SymmetricFunction for L1Norm {
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs()).sum()
    }

    fn hellinger_prox(&self, x: &[f64], rho: f64) -> Option<Vec<f64>> {
        let s = 1.0 / (1.0 + 2.0 * rho);
        Some(x.iter().map(|&v| v.max(0.0) * s * s).collect())
    }
}

/// `f ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroFunction;

impl SymmetricFunction for ZeroFunction {
    fn eval(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn hellinger_prox(&self, x: &[f64], _rho: f64) -> Option<Vec<f64>> {
        Some(x.to_vec())
    }
}

/// `min_{v ∈ G} ‖√λ(Σ_μ) − √v‖₂` for an indicator `f = ι_G`.
pub fn spectral_set_distance(m: &Measure, f: &dyn SymmetricFunction) -> Result<f64> {
    if !f.is_indicator() {
        return Err(Error::Unsupported("spectral_set_distance needs an indicator function".into()));
    }
    let lam: Vec<f64> = m.second_moment().eigenvalues().iter().copied().collect();
    let p = f
        .hellinger_prox(&lam, 1.0)
        .ok_or_else(|| Error::Unsupported("no Hellinger projection for this set".into()))?;
    Ok(hellinger(&lam, &p))
}

/// `f_ρ(λ(Σ_μ))`, the Wasserstein Moreau envelope of the spectral function.
pub fn moreau_envelope_spectral(m: &Measure, f: &dyn SymmetricFunction, rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidInput(format!("envelope parameter must be positive, got {rho}")));
    }
    let lam: Vec<f64> = m.second_moment().eigenvalues().iter().copied().collect();
    let p = f
        .hellinger_prox(&lam, rho)
        .ok_or_else(|| Error::Unsupported("no Hellinger prox for this function".into()))?;
    let dist = hellinger(&lam, &p);
    Ok(f.eval(&p) + dist * dist / (2.0 * rho))
}

/// Compression `BᵀAB` of `A` to the subspace with orthonormal basis `B`.
pub fn compression(a: &PsdMatrix, k: &Subspace) -> Result<PsdMatrix> {
    k.check_ambient(a.dim())?;
    Subspace::new(k.basis().clone())?;
    let b = k.basis();
    PsdMatrix::new(linalg::symmetrize(&(b.transpose() * a.entries() * b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::GaussianMeasure;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eigensystem_examples() {
        let e = eigensystem(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(e.vectors, DMatrix::identity(3, 3));

        let e = eigensystem(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
        assert_eq!(e.values.as_slice(), &[4.0, 1.0]);
        assert!(close(e.vectors[(1, 0)], 1.0, 1e-15) && close(e.vectors[(0, 1)], 1.0, 1e-15));

        let e = eigensystem(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!(close(e.values[0], 3.0, 1e-14) && close(e.values[1], 1.0, 1e-14));
    }

    #[test]
    fn eigensystem_rejects_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(eigensystem(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn ties_follow_standard_basis() {
        // diag(2, 5, 2): the tied eigenspace span{e1, e3} must come out as (e1, e3).
        let e = eigensystem(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 5.0, 2.0]))).unwrap();
        assert_eq!(e.values.as_slice(), &[5.0, 2.0, 2.0]);
        assert!(close(e.vectors[(0, 1)], 1.0, 1e-14));
        assert!(close(e.vectors[(2, 2)], 1.0, 1e-14));
    }

    #[test]
    fn psd_clipping_and_rejection() {
        let a = PsdMatrix::diag(&[1.0, -5e-11]).unwrap();
        assert_eq!(a.lambda_min(), 0.0);
        assert!(matches!(PsdMatrix::diag(&[1.0, -1e-6]), Err(Error::NotPsd(_))));
    }

    #[test]
    fn bures_examples() {
        let a = PsdMatrix::diag(&[4.0, 1.0]).unwrap();
        assert!(close(bures_wasserstein(&a, &a).unwrap(), 0.0, 1e-7));
        let one = bures_wasserstein(&PsdMatrix::diag(&[4.0]).unwrap(), &PsdMatrix::diag(&[1.0]).unwrap()).unwrap();
        assert!(close(one, 1.0, 1e-14));
        let b = PsdMatrix::diag(&[1.0, 4.0]).unwrap();
        assert!(close(bures_wasserstein(&a, &b).unwrap(), 2f64.sqrt(), 1e-14));
    }

    #[test]
    fn procrustes_examples() {
        let a = PsdMatrix::diag(&[9.0]).unwrap();
        let b = PsdMatrix::diag(&[4.0]).unwrap();
        assert!(close(procrustes_distance(&a, &b).unwrap(), 1.0, 1e-14));
        let c = PsdMatrix::diag(&[4.0, 1.0]).unwrap();
        assert!(close(procrustes_distance(&c, &c).unwrap(), 0.0, 1e-14));
    }

    #[test]
    fn procrustes_matches_rotation_grid() {
        // (diag(4,0), diag(0,4)): search all rotations and reflections on a fine grid.
        let a = PsdMatrix::diag(&[4.0, 0.0]).unwrap();
        let b = PsdMatrix::diag(&[0.0, 4.0]).unwrap();
        let (x, y) = (a.sqrt(), b.sqrt());
        let mut best = f64::INFINITY;
        for k in 0..20_000 {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 20_000.0;
            let (c, s) = (t.cos(), t.sin());
            for u in [
                DMatrix::from_row_slice(2, 2, &[c, -s, s, c]),
                DMatrix::from_row_slice(2, 2, &[c, s, s, -c]),
            ] {
                best = best.min((&x - &y * u).norm());
            }
        }
        assert!(close(best, 8f64.sqrt(), 1e-9));
        assert!(close(procrustes_distance(&a, &b).unwrap(), best, 1e-9));
        assert!(close(bures_wasserstein(&a, &b).unwrap(), best, 1e-9));
    }

    #[test]
    fn orbit_examples() {
        let a = PsdMatrix::diag(&[4.0, 1.0]).unwrap();
        assert!(close(orbit_distance(&a, &[1.0, 4.0]).unwrap(), 0.0, 1e-15));
        assert!(close(orbit_distance(&a, &[1.0, 1.0]).unwrap(), 1.0, 1e-15));
        assert!(close(orbit_distance(&a, &[4.0, 4.0]).unwrap(), 1.0, 1e-15));
        assert!(orbit_distance(&a, &[1.0, -1.0]).is_err());
    }

    #[test]
    fn spectral_set_examples() {
        let m = Measure::Gaussian(GaussianMeasure::new(PsdMatrix::diag(&[4.0, 1.0]).unwrap()));
        let d = spectral_set_distance(&m, &EqualAdjacent { q: 1 }).unwrap();
        assert!(close(d, 1.0 / 2f64.sqrt(), 1e-15));
        let tied = Measure::Gaussian(GaussianMeasure::new(PsdMatrix::diag(&[2.0, 2.0]).unwrap()));
        assert_eq!(spectral_set_distance(&tied, &EqualAdjacent { q: 1 }).unwrap(), 0.0);
        let z = spectral_set_distance(&m, &ZeroSet).unwrap();
        assert!(close(z, 5f64.sqrt(), 1e-15));
        assert!(spectral_set_distance(&m, &L1Norm).is_err());
    }

    #[test]
    fn envelope_examples() {
        let m = Measure::Gaussian(GaussianMeasure::new(PsdMatrix::diag(&[4.0, 1.0]).unwrap()));
        let e = moreau_envelope_spectral(&m, &EqualAdjacent { q: 1 }, 1.0).unwrap();
        assert!(close(e, 0.25, 1e-15));
        assert_eq!(moreau_envelope_spectral(&m, &ZeroFunction, 0.7).unwrap(), 0.0);
        let small = moreau_envelope_spectral(&m, &L1Norm, 1e-9).unwrap();
        assert!(close(small, 5.0, 1e-7));
        assert!(moreau_envelope_spectral(&m, &L1Norm, 0.0).is_err());
    }

    #[test]
    fn compression_examples() {
        let a = PsdMatrix::diag(&[9.0, 4.0, 1.0]).unwrap();
        let c = compression(&a, &Subspace::coordinates(3, &[0, 2]).unwrap()).unwrap();
        assert_eq!(c.entries(), &DMatrix::from_diagonal(&DVector::from_vec(vec![9.0, 1.0])));
        let a = PsdMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let k = Subspace::line(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!(close(compression(&a, &k).unwrap().entries()[(0, 0)], 3.0, 1e-14));
        assert_eq!(compression(&a, &Subspace::full(2)).unwrap().entries(), a.entries());
    }

    #[test]
    fn permutation_invariance_of_shipped_functions() {
        let x = [3.0, 1.0, 2.0, 2.0];
        let perms = [[0, 1, 2, 3], [3, 2, 1, 0], [1, 3, 0, 2]];
        let fs: Vec<Box<dyn SymmetricFunction>> = vec![
            Box::new(EqualAdjacent { q: 2 }),
            Box::new(EqualAdjacent { q: 1 }),
            Box::new(FixedOrbit::new(&[1.0, 2.0, 2.0, 3.0]).unwrap()),
            Box::new(ZeroSet),
            Box::new(L1Norm),
        ];
        for f in &fs {
            let base = f.eval(&x);
            for p in &perms {
                let y: Vec<f64> = p.iter().map(|&i| x[i]).collect();
                assert_eq!(f.eval(&y), base);
            }
        }
    }
}
