//! Dense linear-algebra helpers shared by every module: subspaces given by
//! orthonormal bases, symmetric-matrix utilities, generalized eigenvalues and
//! seeded random matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance on `‖BᵀB − I‖_max` for a basis to count as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Largest entrywise asymmetry `max |a_ij − a_ji|`.
pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// `(A + Aᵀ)/2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub(crate) fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Gram–Schmidt of `e_1, e_2, …` in index order against the span of `fixed`,
/// after applying `project` to each standard basis vector. Returns up to `count`
/// new orthonormal vectors.
///
/// A candidate is accepted when its residual exceeds `0.5/√d`. Some residual
/// always reaches `1/√d` while the target space is not exhausted, so one pass
/// suffices.
pub(crate) fn standard_basis_completion<F>(
    d: usize,
    fixed: &[DVector<f64>],
    count: usize,
    project: F,
) -> Vec<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let threshold = 0.5 / (d.max(1) as f64).sqrt();
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(count);
    for k in 0..d {
        if chosen.len() == count {
            break;
        }
        let mut w = project(&DVector::from_fn(d, |i, _| if i == k { 1.0 } else { 0.0 }));
        for _ in 0..2 {
            for q in fixed.iter().chain(chosen.iter()) {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let norm = w.norm();
        if norm > threshold {
            chosen.push(w / norm);
        }
    }
    chosen
}

/// A linear subspace of `R^d` represented by an orthonormal basis (`d × k`).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps a basis whose columns must be orthonormal within [`ORTHONORMAL_TOL`].
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let k = basis.ncols();
        if k > 0 {
            let gram = basis.transpose() * &basis;
            let dev = max_abs(&(gram - DMatrix::<f64>::identity(k, k)));
            if !(dev <= ORTHONORMAL_TOL) {
                return Err(Error::NotOrthonormal(dev));
            }
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes `vectors` (modified Gram–Schmidt, dropping dependent ones).
    pub fn span(d: usize, vectors: &[DVector<f64>]) -> Result<Self> {
        let scale = vectors.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for v in vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
            let mut w = v.clone();
            for _ in 0..2 {
                for q in &cols {
                    let c = q.dot(&w);
                    w.axpy(-c, q, 1.0);
                }
            }
            let n = w.norm();
            if n > 1e-10 * scale.max(f64::MIN_POSITIVE) {
                cols.push(w / n);
            }
        }
        Ok(Self::from_columns(d, &cols))
    }

    fn from_columns(d: usize, cols: &[DVector<f64>]) -> Self {
        let mut basis = DMatrix::zeros(d, cols.len());
        for (j, c) in cols.iter().enumerate() {
            basis.set_column(j, c);
        }
        Self { basis }
    }

    pub fn full(d: usize) -> Self {
        Self { basis: DMatrix::identity(d, d) }
    }

    pub fn zero(d: usize) -> Self {
        Self { basis: DMatrix::zeros(d, 0) }
    }

    /// `span{e_i : i ∈ indices}` (0-based, sorted and deduplicated).
    pub fn coordinates(d: usize, indices: &[usize]) -> Result<Self> {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i >= d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad + 1 });
        }
        let mut basis = DMatrix::zeros(d, idx.len());
        for (j, &i) in idx.iter().enumerate() {
            basis[(i, j)] = 1.0;
        }
        Ok(Self { basis })
    }

    /// The line spanned by a nonzero vector.
    pub fn line(v: &DVector<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput("line through the zero vector".into()));
        }
        Ok(Self::from_columns(v.len(), &[v / n]))
    }

    /// The hyperplane `v⊥`.
    pub fn orthogonal_to(v: &DVector<f64>) -> Result<Self> {
        Ok(Self::line(v)?.complement())
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthogonal projector `BBᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Orthogonal complement, completed deterministically from the standard basis.
    pub fn complement(&self) -> Self {
        let d = self.ambient_dim();
        let fixed: Vec<DVector<f64>> = self.basis.column_iter().map(|c| c.into_owned()).collect();
        let cols = standard_basis_completion(d, &fixed, d - self.dim(), |e| e.clone());
        Self::from_columns(d, &cols)
    }

    pub(crate) fn check_ambient(&self, d: usize) -> Result<()> {
        if self.ambient_dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.ambient_dim() });
        }
        Ok(())
    }
}

/// Smallest eigenpair of the pencil `H v = λ G v` with `G` positive definite.
pub fn generalized_min_eig(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = h.nrows();
    if h.ncols() != n || g.nrows() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.nrows() });
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty pencil".into()));
    }
    let chol = symmetrize(g)
        .cholesky()
        .ok_or_else(|| Error::Numerical("metric matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let reduced = symmetrize(&(&l_inv * symmetrize(h) * l_inv.transpose()));
    let eig = reduced.symmetric_eigen();
    let (mut imin, mut vmin) = (0, f64::INFINITY);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < vmin {
            vmin = v;
            imin = i;
        }
    }
    let y = eig.eigenvectors.column(imin).into_owned();
    let v = l_inv.transpose() * y;
    let nv = v.norm();
    Ok((vmin, v / nv))
}

/// Seeded random vectors and matrices for tests, corpora and sampling.
pub mod random {
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<f64> {
        DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
    }

    pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<f64> {
        loop {
            let v = gaussian_vector(rng, d);
            let n = v.norm();
            if n > 1e-8 {
                return v / n;
            }
        }
    }

    /// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
    pub fn orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
        let qr = gaussian_matrix(rng, d, d).qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..d {
            if r[(j, j)] < 0.0 {
                let mut col = q.column_mut(j);
                col.neg_mut();
            }
        }
        q
    }

    /// `Q diag(λ) Qᵀ` with Haar `Q` and eigenvalues log-uniform in `[lo, hi]`.
    pub fn psd_with_spectrum_range<R: Rng + ?Sized>(rng: &mut R, d: usize, lo: f64, hi: f64) -> DMatrix<f64> {
        let q = orthogonal(rng, d);
        let (a, b) = (lo.ln(), hi.ln());
        let lam = DVector::from_fn(d, |_, _| (a + (b - a) * rng.random::<f64>()).exp());
        let m = &q * DMatrix::from_diagonal(&lam) * q.transpose();
        super::symmetrize(&m)
    }

    /// Wishart-like PSD matrix `GGᵀ/k`, possibly rank deficient when `k < d`.
    pub fn wishart<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> DMatrix<f64> {
        let g = gaussian_matrix(rng, d, k);
        super::symmetrize(&(&g * g.transpose() / k.max(1) as f64))
    }
}
