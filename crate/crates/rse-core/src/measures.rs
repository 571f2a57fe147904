//! Centered probability measures on `R^d`.
//!
//! A [`Measure`] is either a Gaussian `N(0, Σ)` or a weighted point cloud. Both
//! expose the second-moment matrix `Σ_μ = E[xxᵀ]`, pushforwards under linear maps
//! and orthogonal projections, and (for point clouds) the exact W2 distance.
//!
//! Measures are centered by contract. [`EmpiricalMeasure::with_centering`] can
//! subtract the weighted mean, but nothing recenters silently.
//!
//! ## CSV format
//!
//! One sample per row, comma separated. A header row is detected when any field
//! fails to parse as a number; a final header column named `weight` supplies the
//! weights, otherwise the samples are uniform.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Subspace};
use crate::spectral::{self, PsdMatrix};
use crate::transport;

/// Weights whose sum is within this of 1 are renormalized; beyond it they are rejected.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;
/// Largest `n·m` accepted by [`w2_discrete_exact`].
pub const TRANSPORT_SIZE_LIMIT: usize = 1_000_000;

/// Weighted point cloud; points are the rows of an `n × d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: DMatrix<f64>,
    weights: DVector<f64>,
}

impl EmpiricalMeasure {
    pub fn new(points: DMatrix<f64>, weights: DVector<f64>) -> Result<Self> {
        let (n, d) = points.shape();
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!("empirical measure needs n, d >= 1 (got {n}x{d})")));
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample coordinate".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidWeights(format!("weight {i} is {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { points, weights: weights / total })
    }

    pub fn uniform(points: DMatrix<f64>) -> Result<Self> {
        let n = points.nrows();
        Self::new(points, DVector::from_element(n, 1.0 / n.max(1) as f64))
    }

    pub fn from_rows(rows: &[Vec<f64>], weights: Option<&[f64]>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
        }
        let points = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        match weights {
            Some(w) => Self::new(points, DVector::from_column_slice(w)),
            None => Self::uniform(points),
        }
    }

    /// Builds the measure and, when `center` is set, subtracts the weighted mean.
    pub fn with_centering(points: DMatrix<f64>, weights: DVector<f64>, center: bool) -> Result<Self> {
        let m = Self::new(points, weights)?;
        if !center {
            return Ok(m);
        }
        let mean = m.mean();
        let mut pts = m.points.clone();
        for mut row in pts.row_iter_mut() {
            row -= mean.transpose();
        }
        Ok(Self { points: pts, weights: m.weights })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }

    /// Weighted mean `E[x]`.
    pub fn mean(&self) -> DVector<f64> {
        self.points.transpose() * &self.weights
    }

    /// `Σ w_i x_i x_iᵀ`.
    pub fn second_moment(&self) -> PsdMatrix {
        let scaled = DMatrix::from_fn(self.len(), self.dim(), |i, j| self.points[(i, j)] * self.weights[i]);
        let s = linalg::symmetrize(&(self.points.transpose() * scaled));
        PsdMatrix::new(s).expect("weighted Gram matrix is PSD")
    }

    /// Pushforward under `x ↦ Mx` (weights unchanged).
    pub fn pushforward_linear(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: m.ncols() });
        }
        Self::new(&self.points * m.transpose(), self.weights.clone())
    }

    /// Pushforward under an arbitrary map applied to each point.
    pub fn pushforward_map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let images: Vec<DVector<f64>> = (0..self.len()).map(|i| f(&self.point(i))).collect();
        let d = images[0].len();
        if images.iter().any(|x| x.len() != d) {
            return Err(Error::InvalidInput("map images have inconsistent dimensions".into()));
        }
        let pts = DMatrix::from_fn(self.len(), d, |i, j| images[i][j]);
        Self::new(pts, self.weights.clone())
    }

    /// Same support, new weights.
    pub fn reweighted(&self, weights: DVector<f64>) -> Result<Self> {
        Self::new(self.points.clone(), weights)
    }

    /// Parses the CSV format described in the module docs.
    pub fn from_csv_reader<R: Read>(reader: R, center: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut weight_col = false;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("line {}: {e}", line + 1)))?;
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(vals) => rows.push(vals),
                Err(_) if line == 0 && rows.is_empty() => {
                    weight_col = rec.iter().next_back().is_some_and(|h| h.eq_ignore_ascii_case("weight"));
                }
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", line + 1))),
            }
        }
        if rows.is_empty() {
            return Err(Error::Parse("no samples".into()));
        }
        let width = rows[0].len();
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(Error::Parse(format!("row {} has a different number of fields", i + 1)));
        }
        let d = if weight_col { width - 1 } else { width };
        let pts = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        let weights = if weight_col {
            DVector::from_iterator(rows.len(), rows.iter().map(|r| r[width - 1]))
        } else {
            DVector::from_element(rows.len(), 1.0 / rows.len() as f64)
        };
        Self::with_centering(pts, weights, center)
    }

    /// Writes points with a header `x1,…,xd,weight`.
    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("x{j}")).collect();
        header.push("weight".into());
        wtr.write_record(&header).map_err(|e| Error::Parse(e.to_string()))?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.points.row(i).iter().map(|x| format!("{x:?}")).collect();
            rec.push(format!("{:?}", self.weights[i]));
            wtr.write_record(&rec).map_err(|e| Error::Parse(e.to_string()))?;
        }
        wtr.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Centered Gaussian `N(0, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    covariance: PsdMatrix,
}

impl GaussianMeasure {
    pub fn new(covariance: PsdMatrix) -> Self {
        Self { covariance }
    }

    pub fn standard(d: usize) -> Self {
        Self::new(PsdMatrix::identity(d))
    }

    pub fn covariance(&self) -> &PsdMatrix {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }
}

/// A centered measure: Gaussian or empirical.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Empirical(EmpiricalMeasure),
    Gaussian(GaussianMeasure),
}

impl From<EmpiricalMeasure> for Measure {
    fn from(m: EmpiricalMeasure) -> Self {
        Measure::Empirical(m)
    }
}

impl From<GaussianMeasure> for Measure {
    fn from(m: GaussianMeasure) -> Self {
        Measure::Gaussian(m)
    }
}

impl Measure {
    pub fn gaussian(cov: PsdMatrix) -> Self {
        Measure::Gaussian(GaussianMeasure::new(cov))
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::Empirical(e) => e.dim(),
            Measure::Gaussian(g) => g.dim(),
        }
    }

    pub fn second_moment(&self) -> PsdMatrix {
        match self {
            Measure::Empirical(e) => e.second_moment(),
            Measure::Gaussian(g) => g.covariance.clone(),
        }
    }

    /// Pushforward under `x ↦ Mx`.
    pub fn pushforward_linear(&self, m: &DMatrix<f64>) -> Result<Measure> {
        match self {
            Measure::Empirical(e) => Ok(Measure::Empirical(e.pushforward_linear(m)?)),
            Measure::Gaussian(g) => Ok(Measure::gaussian(g.covariance.congruence(m)?)),
        }
    }

    /// Pushforward under `x ↦ cx`.
    pub fn scaled(&self, c: f64) -> Result<Measure> {
        let d = self.dim();
        self.pushforward_linear(&(DMatrix::<f64>::identity(d, d) * c))
    }

    /// The Gaussian with the same second moment.
    pub fn gaussian_surrogate(&self) -> Measure {
        Measure::gaussian(self.second_moment())
    }
}

/// A transport plan between two discrete measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub plan: DMatrix<f64>,
}

impl Coupling {
    /// Checks nonnegativity and both marginals within `1e-9`.
    pub fn validate(&self, a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<()> {
        if self.plan.nrows() != a.len() || self.plan.ncols() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len() * b.len(), got: self.plan.len() });
        }
        if self.plan.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidInput("coupling has negative mass".into()));
        }
        for i in 0..a.len() {
            if (self.plan.row(i).sum() - a.weights[i]).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("row marginal {i} violated")));
            }
        }
        for j in 0..b.len() {
            if (self.plan.column(j).sum() - b.weights[j]).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("column marginal {j} violated")));
            }
        }
        Ok(())
    }
}

/// `Σ_μ`.
pub fn second_moment(m: &Measure) -> PsdMatrix {
    m.second_moment()
}

/// `(P_K)#μ`.
pub fn pushforward_projection(m: &Measure, k: &Subspace) -> Result<Measure> {
    k.check_ambient(m.dim())?;
    let p = k.projector();
    match m {
        Measure::Empirical(e) => Ok(Measure::Empirical(e.pushforward_linear(&p)?)),
        Measure::Gaussian(g) => Ok(Measure::gaussian(PsdMatrix::new(linalg::symmetrize(
            &(&p * g.covariance.entries() * &p),
        ))?)),
    }
}

fn squared_distances(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        let mut s = 0.0;
        for k in 0..a.dim() {
            let t = a.points[(i, k)] - b.points[(j, k)];
            s += t * t;
        }
        s
    })
}

/// Exact W2 distance and an optimal coupling.
pub fn w2_discrete_with_coupling(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<(f64, Coupling)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let (n, m) = (a.len(), b.len());
    if n.saturating_mul(m) > TRANSPORT_SIZE_LIMIT {
        return Err(Error::LimitExceeded(format!("transport problem of size {n}x{m}")));
    }
    let cost = squared_distances(a, b);
    let uniform = |w: &DVector<f64>| {
        let t = 1.0 / w.len() as f64;
        w.iter().all(|&x| (x - t).abs() <= 1e-15)
    };
    let plan = if n == m && n > 1 && uniform(&a.weights) && uniform(&b.weights) {
        let perm = transport::assignment(&cost)?;
        let mut plan = DMatrix::zeros(n, n);
        for (i, &j) in perm.iter().enumerate() {
            plan[(i, j)] = a.weights[i];
        }
        plan
    } else {
        transport::transport_simplex(a.weights.as_slice(), b.weights.as_slice(), &cost)?
    };
    let total = plan.component_mul(&cost).sum();
    Ok((total.max(0.0).sqrt(), Coupling { plan }))
}

/// Exact W2 distance between two weighted point clouds.
pub fn w2_discrete_exact(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    w2_discrete_with_coupling(a, b).map(|(d, _)| d)
}

/// `tr(Σ_μ|_K) = W2²(μ, (P_{K⊥})#μ)`.
pub fn trace_projection_distance(m: &Measure, k: &Subspace) -> Result<f64> {
    k.check_ambient(m.dim())?;
    if k.dim() == 0 {
        return Ok(0.0);
    }
    let b = k.basis();
    Ok((b.transpose() * m.second_moment().entries() * b).trace().max(0.0))
}

/// `(√λ_min(Σ_μ|_K), v)` with `v ∈ K` a unit minimal eigenvector of the compression.
pub fn distance_to_singular_set(m: &Measure, k: &Subspace) -> Result<(f64, DVector<f64>)> {
    k.check_ambient(m.dim())?;
    if k.dim() == 0 {
        return Err(Error::InvalidInput("subspace must be nontrivial".into()));
    }
    let c = spectral::compression(&m.second_moment(), k)?;
    let w = c.eigen().min_vector();
    let v = k.basis() * w;
    let v = &v / v.norm();
    Ok((c.lambda_min().max(0.0).sqrt(), v))
}
