//! Phase retrieval, `y = ⟨x,β★⟩²`.
//!
//! `RSE² = min_{‖v‖=1} E[⟨x,β̂★⟩² ∧ ⟨x,v⟩²]` with `β̂★ = β★/‖β★‖`, and
//! `c_lb ≤ REG · λ_min(Σ̂) ≤ c_ub` for `Σ̂ = E[⟨x,β★⟩² xxᵀ]`.
//!
//! For Gaussian data the inner expectation has the closed form [`gauss_h`]; the
//! sphere problem is solved by multi-start projected gradient descent. For
//! empirical data the objective is
//!
//! ```text
//! F(v) = Σ_i w_i min(a_i, ⟨x_i,v⟩²) = min_S [vᵀΣ_S v + Σ_{i∉S} w_i a_i]
//! ```
//!
//! so alternating between the active set `S = {i : ⟨x_i,v⟩² < a_i}` and the
//! minimal eigenvector of `Σ_S = Σ_{i∈S} w_i x_i x_iᵀ` never increases `F`.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Formulation, OptimizerConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, random};
use crate::measures::{EmpiricalMeasure, Measure};
use crate::spectral::{eigensystem, is_negligible, PsdMatrix};

const UNIT_TOL: f64 = 1e-9;
/// Data-driven warm starts are added up to this many support points.
pub const DATA_START_LIMIT: usize = 256;
/// Up to this many support points every active set is tried, which makes the search exact.
pub const EXACT_SUPPORT_LIMIT: usize = 12;

fn check_unit(v: &DVector<f64>, what: &str) -> Result<()> {
    if !((v.norm() - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::InvalidInput(format!("{what} must be a unit vector (norm {})", v.norm())));
    }
    Ok(())
}

fn check_beta(m: &Measure, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: beta.len() });
    }
    if !(beta.norm() > 0.0) || beta.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("β★ must be a nonzero finite vector".into()));
    }
    Ok(())
}

/// Flips `v` so that its largest-magnitude entry is positive.
pub(crate) fn canonical_sign(mut v: DVector<f64>) -> DVector<f64> {
    let mut imax = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[imax].abs() {
            imax = i;
        }
    }
    if !v.is_empty() && v[imax] < 0.0 {
        v.neg_mut();
    }
    v
}

/// `Σ̂ = E[⟨x,β⟩² xxᵀ]`; Gaussian data use `⟨Σβ,β⟩Σ + 2Σββᵀ Σ`.
pub fn phase_sigma_hat(m: &Measure, beta: &DVector<f64>) -> Result<PsdMatrix> {
    if beta.len() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: beta.len() });
    }
    match m {
        Measure::Gaussian(g) => {
            let s = g.covariance().entries();
            let sb = s * beta;
            let q = beta.dot(&sb);
            PsdMatrix::new(linalg::symmetrize(&(s * q + &sb * sb.transpose() * 2.0)))
        }
        Measure::Empirical(e) => {
            let pts = e.points();
            let t = pts * beta;
            let scaled = DMatrix::from_fn(e.len(), e.dim(), |i, j| pts[(i, j)] * (e.weights()[i] * t[i] * t[i]));
            PsdMatrix::new(linalg::symmetrize(&(pts.transpose() * scaled)))
        }
    }
}

/// Value and Euclidean gradient in `v` of `h_Σ(u, v)`; `su = Σu`, `a = ⟨Σu,u⟩`.
fn gauss_h_parts(s: &DMatrix<f64>, su: &DVector<f64>, a: f64, v: &DVector<f64>, want_grad: bool) -> (f64, DVector<f64>) {
    let sv = s * v;
    let b = v.dot(&sv);
    let c = su.dot(v);
    let s1 = (a + b + 2.0 * c).max(0.0);
    let s2 = (a + b - 2.0 * c).max(0.0);
    let c12 = a - b;
    let p = s1 * s2;
    let tiny = 1e-30 * (a + b) * (a + b);
    let upper = a.min(b);
    if !(p > tiny) {
        let g = if want_grad { sv.clone() } else { DVector::zeros(0) };
        return (upper.max(0.0), g);
    }
    let dd = (p - c12 * c12).max(0.0);
    let r = (c12 / p.sqrt()).clamp(-1.0, 1.0);
    let e = FRAC_2_PI * (dd.sqrt() + c12 * r.asin());
    let h = (0.5 * (a + b) - 0.5 * e).clamp(0.0, upper.max(0.0));
    if !want_grad {
        return (h, DVector::zeros(0));
    }
    // ∂E/∂c12 = (2/π) asin r, ∂E/∂P = (2/π) √D/(2P).
    let dp = (su + &sv) * (2.0 * s2) + (&sv - su) * (2.0 * s1);
    let de = &sv * (-2.0 * r.asin()) + dp * (dd.sqrt() / (2.0 * p));
    let g = &sv - de * (0.5 * FRAC_2_PI);
    (h, g)
}

/// `E[min(⟨x,u⟩², ⟨x,v⟩²)]` for `x ∼ N(0,Σ)`.
pub fn gauss_h(sigma: &PsdMatrix, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    dims(sigma, u, v)?;
    check_unit(u, "u")?;
    check_unit(v, "v")?;
    let s = sigma.entries();
    let su = s * u;
    Ok(gauss_h_parts(s, &su, u.dot(&su), v, false).0)
}

/// `E[⟨x,u⟩²⟨x,v⟩²] = ⟨Σu,u⟩⟨Σv,v⟩ + 2⟨Σu,v⟩²` for `x ∼ N(0,Σ)`.
pub fn gauss_g(sigma: &PsdMatrix, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    dims(sigma, u, v)?;
    check_unit(u, "u")?;
    check_unit(v, "v")?;
    let s = sigma.entries();
    let su = s * u;
    let c = su.dot(v);
    Ok(u.dot(&su) * v.dot(&(s * v)) + 2.0 * c * c)
}

fn dims(sigma: &PsdMatrix, u: &DVector<f64>, v: &DVector<f64>) -> Result<()> {
    for w in [u, v] {
        if w.len() != sigma.dim() {
            return Err(Error::DimensionMismatch { expected: sigma.dim(), got: w.len() });
        }
    }
    Ok(())
}

/// Result of one local descent on the unit sphere.
#[derive(Debug, Clone)]
pub(crate) struct SphereOutcome {
    pub value: f64,
    pub point: DVector<f64>,
    pub certified: bool,
}

/// Projected gradient descent on the sphere with Barzilai–Borwein steps and
/// Armijo backtracking. Stops when the Riemannian gradient norm is ≤ `gtol`.
pub(crate) fn sphere_descent<F>(f: &F, start: &DVector<f64>, gtol: f64, max_iters: usize, step0: f64) -> SphereOutcome
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let riem = |g: &DVector<f64>, v: &DVector<f64>| g - v * g.dot(v);
    let mut v = start.normalize();
    let (mut fv, g) = f(&v);
    let mut gr = riem(&g, &v);
    let mut t = step0;
    for _ in 0..max_iters {
        let gn2 = gr.norm_squared();
        if gn2.sqrt() <= gtol {
            return SphereOutcome { value: fv, point: v, certified: true };
        }
        let mut accepted = None;
        let mut step = t;
        for _ in 0..80 {
            let cand = (&v - &gr * step).normalize();
            let (fc, gc) = f(&cand);
            if fc <= fv - 1e-4 * step * gn2 {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((vn, fnew, gnew)) = accepted else {
            // No sufficient decrease at any resolvable step: the gradient is below noise.
            return SphereOutcome { value: fv, point: v, certified: false };
        };
        let grn = riem(&gnew, &vn);
        let s = &vn - &v;
        let y = &grn - &gr;
        let sy = s.dot(&y);
        t = if sy > 0.0 { (s.norm_squared() / sy).clamp(step0 * 1e-8, step0 * 1e8) } else { step * 2.0 };
        v = vn;
        fv = fnew;
        gr = grn;
    }
    let certified = gr.norm() <= gtol;
    SphereOutcome { value: fv, point: v, certified }
}

/// Minimizer of the phase-retrieval sphere problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRse {
    pub rse: f64,
    pub rse_sq: f64,
    /// Unit minimizing direction `v★`, sign-normalized.
    pub direction: DVector<f64>,
    /// Whether the best start reached stationarity (a fixed point for empirical data).
    pub certified: bool,
    pub starts: usize,
}

fn pick_best(outcomes: Vec<SphereOutcome>) -> SphereOutcome {
    let mut outcomes: Vec<SphereOutcome> = outcomes
        .into_iter()
        .map(|o| SphereOutcome { point: canonical_sign(o.point), ..o })
        .collect();
    outcomes.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then_with(|| {
            a.point.iter().zip(b.point.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    outcomes.swap_remove(0)
}

fn random_directions(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<DVector<f64>> {
    (0..k).map(|_| random::unit_vector(rng, d)).collect()
}

/// `(RSE, v★)`: multi-start minimization of `E[⟨x,β̂★⟩² ∧ ⟨x,v⟩²]` over unit `v`.
///
/// The returned value never exceeds the objective at any start or probe.
pub fn phase_rse(m: &Measure, beta_star: &DVector<f64>, opt: &OptimizerConfig) -> Result<PhaseRse> {
    check_beta(m, beta_star)?;
    let u = beta_star.normalize();
    let d = m.dim();
    let sigma = m.second_moment();
    let best = if d == 1 {
        SphereOutcome { value: sigma.quad(&u), point: u.clone(), certified: true }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
        let mut starts = random_directions(&mut rng, d, opt.random_starts);
        let hat = phase_sigma_hat(m, &u)?;
        for k in 0..d {
            starts.push(hat.eigen().vectors.column(k).into_owned());
        }
        starts.push(sigma.eigen().min_vector());
        let probes = random_directions(&mut rng, d, opt.probes);
        match m {
            Measure::Gaussian(_) => gaussian_search(&sigma, &u, starts, &probes, opt),
            Measure::Empirical(e) => empirical_search(e, &u, starts, &probes, opt)?,
        }
    };
    let rse_sq = best.value.max(0.0);
    Ok(PhaseRse {
        rse: rse_sq.sqrt(),
        rse_sq,
        direction: best.point,
        certified: best.certified,
        starts: if d == 1 { 1 } else { opt.random_starts + d + 2 },
    })
}

/// Moves a start off `±u`, where `h(u, ·)` attains its maximum and is not smooth.
fn nudge(v: &DVector<f64>, u: &DVector<f64>, sigma: &PsdMatrix) -> DVector<f64> {
    let v = v.normalize();
    if v.dot(u).abs() < 1.0 - 1e-8 {
        return v;
    }
    let mut w = sigma.eigen().min_vector();
    w -= u * u.dot(&w);
    if w.norm() < 1e-8 {
        let k = (0..u.len()).min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap_or(0);
        w = DVector::zeros(u.len());
        w[k] = 1.0;
        w -= u * u[k];
    }
    (v + w.normalize() * 1e-3).normalize()
}

fn gaussian_search(
    sigma: &PsdMatrix,
    u: &DVector<f64>,
    mut starts: Vec<DVector<f64>>,
    probes: &[DVector<f64>],
    opt: &OptimizerConfig,
) -> SphereOutcome {
    let s = sigma.entries();
    let su = s * u;
    let a = u.dot(&su);
    let f = |v: &DVector<f64>| gauss_h_parts(s, &su, a, v, true);
    let value = |v: &DVector<f64>| gauss_h_parts(s, &su, a, v, false).0;
    if let Some(p) = probes.iter().min_by(|x, y| value(x).total_cmp(&value(y))) {
        starts.push(p.clone());
    }
    let scale = sigma.trace().max(f64::MIN_POSITIVE);
    let gtol = opt.tol * scale;
    let step0 = 1.0 / scale;
    let outcomes: Vec<SphereOutcome> = starts
        .par_iter()
        .map(|v0| {
            let v0 = nudge(v0, u, sigma);
            let start_value = value(&v0);
            let out = sphere_descent(&f, &v0, gtol, opt.max_iters, step0);
            if out.value <= start_value {
                out
            } else {
                SphereOutcome { value: start_value, point: v0, certified: false }
            }
        })
        .collect();
    pick_best(outcomes)
}

/// `F(v) = Σ w_i min(a_i, ⟨x_i,v⟩²)`.
fn empirical_objective(e: &EmpiricalMeasure, a: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let t = e.points() * v;
    (0..e.len()).map(|i| e.weights()[i] * a[i].min(t[i] * t[i])).sum()
}

/// Majorize–minimize from `v0`; certified when the active set is stable.
fn empirical_mm(e: &EmpiricalMeasure, a: &DVector<f64>, v0: &DVector<f64>, max_iters: usize) -> Result<SphereOutcome> {
    let pts = e.points();
    let w = e.weights();
    let mut v = v0.normalize();
    let mut fv = empirical_objective(e, a, &v);
    let mut active: Vec<bool> = Vec::new();
    for _ in 0..max_iters.max(1) {
        let t = pts * &v;
        let next: Vec<bool> = (0..e.len()).map(|i| t[i] * t[i] < a[i]).collect();
        if next == active {
            return Ok(SphereOutcome { value: fv, point: v, certified: true });
        }
        let scaled = DMatrix::from_fn(e.len(), e.dim(), |i, j| if next[i] { pts[(i, j)] * w[i] } else { 0.0 });
        let sigma_s = linalg::symmetrize(&(pts.transpose() * scaled));
        let cand = eigensystem(&sigma_s)?.min_vector();
        let fc = empirical_objective(e, a, &cand);
        if fc > fv {
            // Only possible through round-off; the current point is a fixed point up to noise.
            return Ok(SphereOutcome { value: fv, point: v, certified: true });
        }
        active = next;
        v = cand;
        fv = fc;
    }
    Ok(SphereOutcome { value: fv, point: v, certified: false })
}

fn best_active_set_direction(e: &EmpiricalMeasure, a: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, d) = (e.len(), e.dim());
    let rank_one: Vec<DMatrix<f64>> = (0..n).map(|i| e.point(i) * e.point(i).transpose() * e.weights()[i]).collect();
    let candidates: Vec<Result<(f64, DVector<f64>)>> = (1u32..1 << n)
        .into_par_iter()
        .map(|mask| {
            let mut sigma_s = DMatrix::zeros(d, d);
            for (i, r) in rank_one.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    sigma_s += r;
                }
            }
            let v = eigensystem(&linalg::symmetrize(&sigma_s))?.min_vector();
            Ok((empirical_objective(e, a, &v), v))
        })
        .collect();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for c in candidates {
        let (f, v) = c?;
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, v));
        }
    }
    Ok(best.map(|(_, v)| v).unwrap_or_else(|| DVector::from_fn(d, |i, _| if i == 0 { 1.0 } else { 0.0 })))
}

fn empirical_search(
    e: &EmpiricalMeasure,
    u: &DVector<f64>,
    mut starts: Vec<DVector<f64>>,
    probes: &[DVector<f64>],
    opt: &OptimizerConfig,
) -> Result<SphereOutcome> {
    let t = e.points() * u;
    let a = t.map(|x| x * x);
    if let Some(p) = probes.iter().min_by(|x, y| empirical_objective(e, &a, x).total_cmp(&empirical_objective(e, &a, y))) {
        starts.push(p.clone());
    }
    if e.len() <= DATA_START_LIMIT {
        // Optimal directions are often orthogonal to some support point.
        let sigma = e.second_moment();
        for i in 0..e.len() {
            let x = e.point(i);
            if e.weights()[i] <= 0.0 || x.norm() == 0.0 {
                continue;
            }
            let k = crate::linalg::Subspace::orthogonal_to(&x)?;
            if k.dim() == 0 {
                continue;
            }
            let c = crate::spectral::compression(&sigma, &k)?;
            starts.push(k.basis() * c.eigen().min_vector());
        }
    }
    if e.len() <= EXACT_SUPPORT_LIMIT {
        // The minimizer is the bottom eigenvector of Σ_S for its own active set S, and
        // F(v_S) ≤ λ_min(Σ_S) + Σ_{i∉S} w_i a_i, so the best v_S is globally optimal.
        starts.push(best_active_set_direction(e, &a)?);
    }
    let outcomes: Vec<Result<SphereOutcome>> = starts.par_iter().map(|v0| empirical_mm(e, &a, v0, opt.max_iters)).collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(pick_best(outcomes))
}

/// `λ_min(Σ̂)` with the REG value or bracket for the chosen formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReg {
    pub lambda_min: f64,
    /// `1/λ_min(Σ̂)` for the factored formulation; `None` for rank-one.
    pub exact: Option<f64>,
    pub c_lb: f64,
    pub c_ub: f64,
    pub bracket: (f64, f64),
}

impl PhaseReg {
    pub fn is_ill_posed(&self) -> bool {
        self.bracket.1.is_infinite()
    }
}

/// REG of phase retrieval; `+∞` when `λ_min(Σ̂) ≤ 1e-12·tr Σ̂`.
pub fn phase_reg(m: &Measure, beta_star: &DVector<f64>, formulation: Formulation) -> Result<PhaseReg> {
    check_beta(m, beta_star)?;
    let hat = phase_sigma_hat(m, beta_star)?;
    let lam = hat.lambda_min().max(0.0);
    let (c_lb, c_ub) = match formulation {
        Formulation::Factored => (1.0, 1.0),
        Formulation::RankOne => {
            let n2 = beta_star.norm_squared();
            (0.5 * n2, n2)
        }
    };
    let inv = if is_negligible(lam, hat.trace()) { f64::INFINITY } else { 1.0 / lam };
    let bracket = (c_lb * inv, c_ub * inv);
    let exact = match formulation {
        Formulation::Factored => Some(inv),
        Formulation::RankOne => None,
    };
    Ok(PhaseReg { lambda_min: lam, exact, c_lb, c_ub, bracket })
}

/// Exact REG of the rank-one formulation: `1/λ_min(4Σ̂, ΦᵀΦ)` with `ΦᵀΦ = 2‖β★‖²I + 2β★β★ᵀ`.
pub fn phase_reg_rank_one_exact(m: &Measure, beta_star: &DVector<f64>) -> Result<f64> {
    check_beta(m, beta_star)?;
    let hat = phase_sigma_hat(m, beta_star)?;
    if is_negligible(hat.lambda_min(), hat.trace()) {
        return Ok(f64::INFINITY);
    }
    let d = m.dim();
    let metric = DMatrix::identity(d, d) * (2.0 * beta_star.norm_squared()) + beta_star * beta_star.transpose() * 2.0;
    let (lam, _) = linalg::generalized_min_eig(&(hat.entries() * 4.0), &metric)?;
    Ok(1.0 / lam)
}

/// Numerical check of the Gaussian sphere bounds for `h_Σ(u,·)` and `g_Σ(u,·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussPhaseBounds {
    pub lambda_min: f64,
    pub quad_u: f64,
    pub min_h: f64,
    pub min_h_direction: DVector<f64>,
    pub min_g: f64,
    pub h_bounds: (f64, f64),
    pub g_bounds: (f64, f64),
    pub h_ok: bool,
    pub g_ok: bool,
    pub certified: bool,
}

impl GaussPhaseBounds {
    pub fn holds(&self) -> bool {
        self.h_ok && self.g_ok
    }
}

/// Minimizes `h_Σ(u,·)` numerically and `g_Σ(u,·)` exactly (a Rayleigh quotient),
/// and checks `(1−2/π)λ_min ≤ min h ≤ λ_min`, `λ_min⟨Σu,u⟩ ≤ min g ≤ 3λ_min⟨Σu,u⟩`.
pub fn gauss_phase_bounds_check(sigma: &PsdMatrix, u: &DVector<f64>, opt: &OptimizerConfig) -> Result<GaussPhaseBounds> {
    if u.len() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: sigma.dim(), got: u.len() });
    }
    check_unit(u, "u")?;
    let m = Measure::gaussian(sigma.clone());
    let r = phase_rse(&m, u, opt)?;
    let lam = sigma.lambda_min().max(0.0);
    let s = sigma.entries();
    let su = s * u;
    let quad_u = u.dot(&su);
    let gmat = PsdMatrix::new(linalg::symmetrize(&(s * quad_u + &su * su.transpose() * 2.0)))?;
    let min_g = gmat.lambda_min().max(0.0);
    let slack = 1e-12 * sigma.trace().max(f64::MIN_POSITIVE);
    let h_bounds = ((1.0 - 2.0 / PI) * lam, lam);
    let g_bounds = (lam * quad_u, 3.0 * lam * quad_u);
    let h_ok = r.rse_sq >= h_bounds.0 - slack && r.rse_sq <= h_bounds.1 + slack;
    let gslack = slack * sigma.trace().max(1.0);
    let g_ok = min_g >= g_bounds.0 - gslack && min_g <= g_bounds.1 + gslack;
    Ok(GaussPhaseBounds {
        lambda_min: lam,
        quad_u,
        min_h: r.rse_sq,
        min_h_direction: r.direction,
        min_g,
        h_bounds,
        g_bounds,
        h_ok,
        g_ok,
        certified: r.certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::EmpiricalMeasure;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn gauss_h_examples() {
        let s = PsdMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let u = dv(&[0.6, 0.8]);
        assert_eq!(gauss_h(&s, &u, &u).unwrap(), s.quad(&u));
        assert_eq!(gauss_h(&s, &u, &(-&u)).unwrap(), s.quad(&u));
        let i = PsdMatrix::identity(2);
        let h = gauss_h(&i, &dv(&[1.0, 0.0]), &dv(&[0.0, 1.0])).unwrap();
        assert!((h - (1.0 - 2.0 / PI)).abs() < 1e-15);
        assert!(gauss_h(&i, &dv(&[2.0, 0.0]), &dv(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn gauss_g_examples() {
        let i = PsdMatrix::identity(2);
        let (e1, e2) = (dv(&[1.0, 0.0]), dv(&[0.0, 1.0]));
        assert_eq!(gauss_g(&i, &e1, &e1).unwrap(), 3.0);
        assert_eq!(gauss_g(&i, &e1, &e2).unwrap(), 1.0);
        let s = PsdMatrix::diag(&[4.0, 1.0]).unwrap();
        assert_eq!(gauss_g(&s, &e1, &e2).unwrap(), 4.0);
    }

    #[test]
    fn gauss_h_gradient_matches_finite_differences() {
        let s = PsdMatrix::from_rows(&[vec![3.0, 1.0, 0.2], vec![1.0, 2.0, -0.4], vec![0.2, -0.4, 1.5]]).unwrap();
        let u = dv(&[1.0, -1.0, 0.5]).normalize();
        let su = s.entries() * &u;
        let a = u.dot(&su);
        let v = dv(&[0.3, 0.9, -0.2]);
        let (_, g) = gauss_h_parts(s.entries(), &su, a, &v, true);
        for k in 0..3 {
            let mut e = DVector::zeros(3);
            e[k] = 1e-6;
            let fp = gauss_h_parts(s.entries(), &su, a, &(&v + &e), false).0;
            let fm = gauss_h_parts(s.entries(), &su, a, &(&v - &e), false).0;
            assert!(((fp - fm) / 2e-6 - g[k]).abs() < 1e-7, "component {k}: {} vs {}", (fp - fm) / 2e-6, g[k]);
        }
    }

    #[test]
    fn rse_examples() {
        let opt = OptimizerConfig::default();
        let r = phase_rse(&Measure::gaussian(PsdMatrix::identity(2)), &dv(&[1.0, 0.0]), &opt).unwrap();
        assert!((r.rse - (1.0 - 2.0 / PI).sqrt()).abs() < 1e-8);
        assert!(r.direction[0].abs() < 1e-4);

        let pts = vec![vec![0.0, 1.0], vec![0.0, -2.0]];
        let flat = Measure::from(EmpiricalMeasure::from_rows(&pts, None).unwrap());
        assert_eq!(phase_rse(&flat, &dv(&[1.0, 0.0]), &opt).unwrap().rse, 0.0);

        let pts = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let cross = Measure::from(EmpiricalMeasure::from_rows(&pts, None).unwrap());
        let r = phase_rse(&cross, &dv(&[1.0, 0.0]), &opt).unwrap();
        assert_eq!(r.rse, 0.0);
        assert!((r.direction[1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reg_examples() {
        let g = Measure::gaussian(PsdMatrix::identity(3));
        let r = phase_reg(&g, &dv(&[1.0, 0.0, 0.0]), Formulation::Factored).unwrap();
        assert_eq!(r.exact, Some(1.0));
        let pts = vec![vec![0.0, 1.0], vec![0.0, -2.0]];
        let flat = Measure::from(EmpiricalMeasure::from_rows(&pts, None).unwrap());
        assert!(phase_reg(&flat, &dv(&[1.0, 0.0]), Formulation::Factored).unwrap().is_ill_posed());
        let beta = dv(&[2.0, 0.0, 0.0]);
        let f = phase_reg(&g, &beta, Formulation::Factored).unwrap();
        let r1 = phase_reg(&g, &beta, Formulation::RankOne).unwrap();
        assert_eq!(f.lambda_min, r1.lambda_min);
        assert_eq!(r1.bracket, (2.0 * f.bracket.0, 4.0 * f.bracket.1));
        let exact = phase_reg_rank_one_exact(&g, &beta).unwrap();
        assert!(exact >= r1.bracket.0 * (1.0 - 1e-12) && exact <= r1.bracket.1 * (1.0 + 1e-12));
    }

    #[test]
    fn bounds_examples() {
        let opt = OptimizerConfig::default();
        let b = gauss_phase_bounds_check(&PsdMatrix::identity(2), &dv(&[1.0, 0.0]), &opt).unwrap();
        assert!(b.holds());
        assert!((b.min_h - (1.0 - 2.0 / PI)).abs() < 1e-10);
        assert!((b.min_g - 1.0).abs() < 1e-15);
        let b = gauss_phase_bounds_check(&PsdMatrix::diag(&[4.0, 1.0]).unwrap(), &dv(&[1.0, 0.0]), &opt).unwrap();
        assert_eq!(b.g_bounds, (4.0, 12.0));
        assert!(b.holds());
    }
}
