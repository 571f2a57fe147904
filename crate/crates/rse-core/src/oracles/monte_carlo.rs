//! Seeded Monte Carlo, smooth feature maps, the slope lower bound and the
//! sandwich check.
//!
//! Sample `k` is drawn from block `k / MC_BLOCK`; block `b` uses a ChaCha20
//! stream keyed by `(seed, b)`. Blocks are reduced in parallel and merged in
//! block order, so results do not depend on the thread count.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{EmpiricalMeasure, GaussianMeasure, Measure};

/// Samples per substream.
pub const MC_BLOCK: usize = 4096;

/// Mean estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    /// Sample standard deviation over `√samples`.
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Sample count and seed for Monte Carlo fallbacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 0 }
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Running (count, mean, M2) with Chan's merge.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n / n, m2: self.m2 + o.m2 + d * d * self.n * o.n / n }
    }
}

/// Draws block `b` of a Gaussian stream (`x = Σ^{1/2} z`), up to `count` samples.
fn gaussian_block(root: &DMatrix<f64>, seed: u64, block: usize, count: usize) -> Vec<DVector<f64>> {
    let d = root.nrows();
    let mut rng = block_rng(seed, block);
    (0..count)
        .map(|_| {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            root * z
        })
        .collect()
}

/// Plain Monte Carlo estimate of `E f(x)`, `x ∼ m`.
pub fn mc_expectation<F>(f: F, m: &GaussianMeasure, samples: usize, seed: u64) -> Result<McEstimate>
where
    F: Fn(&DVector<f64>) -> f64 + Sync,
{
    if samples < 2 {
        return Err(Error::InvalidInput("Monte Carlo needs at least 2 samples".into()));
    }
    let root = m.covariance().sqrt();
    let blocks = samples.div_ceil(MC_BLOCK);
    let partial: Vec<Result<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut acc = Moments::default();
            for (k, x) in gaussian_block(&root, seed, b, count).iter().enumerate() {
                let v = f(x);
                if !v.is_finite() {
                    return Err(Error::NonFinite((b * MC_BLOCK + k) as u64));
                }
                acc.push(v);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Moments::default();
    for p in partial {
        total = total.merge(p?);
    }
    let var = (total.m2 / (total.n - 1.0)).max(0.0);
    Ok(McEstimate { value: total.mean, stderr: (var / total.n).sqrt(), samples, seed })
}

/// `n` i.i.d. draws from `m` as a uniform empirical measure (Gaussian: the block
/// stream above; empirical: weighted resampling keyed the same way).
pub fn draw_samples(m: &Measure, n: usize, seed: u64) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let d = m.dim();
    let blocks = n.div_ceil(MC_BLOCK);
    let rows: Vec<Vec<DVector<f64>>> = match m {
        Measure::Gaussian(g) => {
            let root = g.covariance().sqrt();
            (0..blocks).into_par_iter().map(|b| gaussian_block(&root, seed, b, MC_BLOCK.min(n - b * MC_BLOCK))).collect()
        }
        Measure::Empirical(e) => {
            let cdf: Vec<f64> = e
                .weights()
                .iter()
                .scan(0.0, |s, w| {
                    *s += w;
                    Some(*s)
                })
                .collect();
            let last = e.len() - 1;
            (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut rng = block_rng(seed, b);
                    (0..MC_BLOCK.min(n - b * MC_BLOCK))
                        .map(|_| {
                            let u: f64 = rng.random::<f64>() * cdf[last];
                            let i = cdf.partition_point(|&c| c <= u).min(last);
                            e.point(i)
                        })
                        .collect()
                })
                .collect()
        }
    };
    let flat: Vec<DVector<f64>> = rows.into_iter().flatten().collect();
    let pts = DMatrix::from_fn(n, d, |i, j| flat[i][j]);
    EmpiricalMeasure::uniform(pts)
}

type VecMap = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type JacMap = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A smooth map `g: R^d → R^k` with an optional analytic Jacobian.
#[derive(Clone)]
pub struct SmoothMapHandle {
    dim_in: usize,
    dim_out: usize,
    g: VecMap,
    jacobian: Option<JacMap>,
    linear: Option<DMatrix<f64>>,
}

impl fmt::Debug for SmoothMapHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMapHandle")
            .field("dim_in", &self.dim_in)
            .field("dim_out", &self.dim_out)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("linear", &self.linear.is_some())
            .finish()
    }
}

impl SmoothMapHandle {
    pub fn new(dim_in: usize, dim_out: usize, g: VecMap, jacobian: Option<JacMap>) -> Self {
        Self { dim_in, dim_out, g, jacobian, linear: None }
    }

    /// `g(x) = Lx`.
    pub fn linear(l: DMatrix<f64>) -> Self {
        let (k, d) = l.shape();
        let a = l.clone();
        let b = l.clone();
        Self {
            dim_in: d,
            dim_out: k,
            g: Arc::new(move |x| &a * x),
            jacobian: Some(Arc::new(move |_| b.clone())),
            linear: Some(l),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::linear(DMatrix::identity(d, d))
    }

    /// `g(x) = ⟨x,β⟩x`, so that `g gᵀ = ⟨x,β⟩² xxᵀ`.
    pub fn phase(beta: &DVector<f64>) -> Self {
        let d = beta.len();
        let (b1, b2) = (beta.clone(), beta.clone());
        Self::new(
            d,
            d,
            Arc::new(move |x| x * x.dot(&b1)),
            Some(Arc::new(move |x| DMatrix::identity(d, d) * x.dot(&b2) + x * b2.transpose())),
        )
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.g)(x)
    }

    /// Central differences with step `1e-6·max(1, ‖x‖)`.
    pub fn fd_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let h = 1e-6 * x.norm().max(1.0);
        let mut j = DMatrix::zeros(self.dim_out, self.dim_in);
        for c in 0..self.dim_in {
            let mut e = DVector::zeros(self.dim_in);
            e[c] = h;
            let col = (self.eval(&(x + &e)) - self.eval(&(x - &e))) / (2.0 * h);
            j.set_column(c, &col);
        }
        j
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.jacobian {
            Some(j) => j(x),
            None => self.fd_jacobian(x),
        }
    }

    /// Largest relative discrepancy between analytic and finite-difference Jacobians.
    pub fn check_jacobian(&self, probes: &[DVector<f64>]) -> f64 {
        let Some(j) = &self.jacobian else { return 0.0 };
        probes
            .iter()
            .map(|x| {
                let (a, f) = (j(x), self.fd_jacobian(x));
                (&a - &f).norm() / a.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    fn check(&self, m: &Measure, u: &DVector<f64>) -> Result<()> {
        if m.dim() != self.dim_in {
            return Err(Error::DimensionMismatch { expected: self.dim_in, got: m.dim() });
        }
        if u.len() != self.dim_out {
            return Err(Error::DimensionMismatch { expected: self.dim_out, got: u.len() });
        }
        if !(u.norm() > 0.0) {
            return Err(Error::InvalidInput("u must be nonzero".into()));
        }
        Ok(())
    }
}

/// `√E‖DF(x)*[uuᵀ]‖²` for `F = g gᵀ`, where `DF(x)*[uuᵀ] = 2⟨u,g(x)⟩ ∇g(x)ᵀu`.
///
/// Exact for empirical measures and for linear `g` under Gaussian data.
pub fn slope_lower_bound(m: &Measure, g: &SmoothMapHandle, u: &DVector<f64>) -> Result<f64> {
    g.check(m, u)?;
    match m {
        Measure::Empirical(e) => {
            let s: f64 = (0..e.len())
                .map(|i| {
                    let x = e.point(i);
                    let t = u.dot(&g.eval(&x));
                    let v = g.jacobian(&x).transpose() * u * (2.0 * t);
                    e.weights()[i] * v.norm_squared()
                })
                .sum();
            Ok(s.sqrt())
        }
        Measure::Gaussian(gm) => {
            let l = g.linear.as_ref().ok_or_else(|| Error::Unsupported("Gaussian slope needs a linear map".into()))?;
            let ltu = l.transpose() * u;
            let var = gm.covariance().quad(&ltu);
            Ok((4.0 * var * ltu.norm_squared()).sqrt())
        }
    }
}

/// `(E⟨u,g⟩², √E[⟨u,g⟩²‖∇gᵀu‖²/‖u‖²], √E⟨u,g⟩²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
}

impl Sandwich {
    /// `mid/rhs`, or 1 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.rhs == 0.0 && self.mid == 0.0 {
            1.0
        } else {
            self.mid / self.rhs
        }
    }
}

/// The three sides of the infinitesimal sandwich condition with exponents ½.
///
/// Empirical measures and linear maps are exact; other Gaussian cases use
/// Monte Carlo with `mc`.
pub fn sandwich_check(m: &Measure, g: &SmoothMapHandle, u: &DVector<f64>, mc: McSettings) -> Result<Sandwich> {
    g.check(m, u)?;
    let nu2 = u.norm_squared();
    let terms = |x: &DVector<f64>| -> (f64, f64) {
        let t = u.dot(&g.eval(x));
        let jtu = g.jacobian(x).transpose() * u;
        (t * t, t * t * (jtu.norm_squared() / nu2))
    };
    let (lhs, mid_sq) = match (m, &g.linear) {
        (Measure::Empirical(e), _) => (0..e.len()).fold((0.0, 0.0), |(a, b), i| {
            let (p, q) = terms(&e.point(i));
            (a + e.weights()[i] * p, b + e.weights()[i] * q)
        }),
        (Measure::Gaussian(gm), Some(l)) => {
            let ltu = l.transpose() * u;
            let var = gm.covariance().quad(&ltu);
            (var, var * (ltu.norm_squared() / nu2))
        }
        (Measure::Gaussian(gm), None) => {
            let a = mc_expectation(|x| terms(x).0, gm, mc.samples, mc.seed)?;
            let b = mc_expectation(|x| terms(x).1, gm, mc.samples, mc.seed)?;
            (a.value, b.value)
        }
    };
    Ok(Sandwich { lhs, mid: mid_sq.max(0.0).sqrt(), rhs: lhs.max(0.0).sqrt() })
}
