//! The end-to-end acceptance suite. Each criterion is a function returning a
//! [`CriterionResult`]; tolerances and runtime budgets are the constants below.

pub mod corpus;

use std::f64::consts::{FRAC_2_PI, SQRT_2};
use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{random, Subspace};
use crate::mc_graph::{maxcut_via_rse, mc_reg, mc_rse, McMode, ProbMatrix};
use crate::measures::{distance_to_singular_set, pushforward_projection, w2_discrete_exact, GaussianMeasure, Measure};
use crate::oracles::brute::{brute_maxcut, brute_mc_rse};
use crate::oracles::{mc_expectation, numeric_reg};
use crate::problems::bilinear::{bilinear_reg_exact, bilinear_rse, wielandt_claim_check};
use crate::problems::pca::{pca_reg, pca_rse};
use crate::problems::phase::{gauss_phase_bounds_check, phase_reg_rank_one_exact, phase_rse};
use crate::problems::qmle::{qmle_reg, qmle_rse};
use crate::problems::report::{build_report, RegValue};
use crate::problems::{CumulantFunction, Formulation, OptimizerConfig, ProblemInstance};
use crate::spectral::{
    bures_wasserstein, nearest_orbit_point, orbit_distance, procrustes_distance, spectral_set_distance, EqualAdjacent,
    FixedOrbit, PsdMatrix,
};

pub const PCA_IDENTITY_TOL: f64 = 1e-10;
pub const SPECTRAL_SET_TOL: f64 = 1e-10;
pub const PROJECTION_TOL: f64 = 1e-8;
pub const BURES_TOL: f64 = 1e-8;
pub const PHASE_CLOSED_FORM_TOL: f64 = 1e-6;
pub const PHASE_MC_SAMPLES: usize = 1_000_000;
pub const PHASE_MC_STDERRS: f64 = 4.0;
pub const QMLE_LINEAR_TOL: f64 = 1e-10;
pub const NUMERIC_REG_REL: f64 = 1e-3;
pub const WITNESS_TOL: f64 = 1e-9;
pub const SCALE_REL: f64 = 1e-9;
pub const MAXCUT_VERTEX_LIMIT: usize = 12;
pub const MC_PAIR_LIMIT: usize = 24;

const BUDGET_1: Duration = Duration::from_secs(5);
const BUDGET_3: Duration = Duration::from_secs(30);
const BUDGET_5: Duration = Duration::from_secs(60);
const BUDGET_7: Duration = Duration::from_secs(60);

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn run(id: u8, title: &'static str, budget: Option<Duration>, body: impl FnOnce() -> Result<(bool, String)>) -> CriterionResult {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match outcome {
        Ok(x) => x,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if elapsed > b {
            passed = false;
            detail.push_str(&format!("; runtime {:.1} s exceeds {} s", elapsed.as_secs_f64(), b.as_secs()));
        }
    }
    CriterionResult { id, title, passed, detail, elapsed }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// 200 random `(Σ, d ≤ 10)` and every `q`.
fn pca_corpus() -> Vec<Measure> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    (0..200)
        .map(|_| {
            let d = rng.random_range(2..=10);
            Measure::gaussian(corpus::random_psd(&mut rng, d))
        })
        .collect()
}

/// PCA reciprocal identity.
pub fn criterion_1() -> CriterionResult {
    run(1, "PCA reciprocal identity", Some(BUDGET_1), || {
        let mut worst = 0.0_f64;
        let mut checks = 0;
        for m in pca_corpus() {
            let lam = m.second_moment().eigenvalues().clone();
            for q in 1..m.dim() {
                let want = 1.0 / (SQRT_2 * (lam[q - 1].sqrt() + lam[q].sqrt()));
                let got = pca_rse(&m, q)? * pca_reg(&m, q)?;
                worst = worst.max((got - want).abs());
                checks += 1;
            }
        }
        Ok((worst <= PCA_IDENTITY_TOL, format!("{checks} (Σ, q) pairs, max error {worst:.2e}")))
    })
}

/// Spectral-set reduction and invariance under the Gaussian surrogate.
pub fn criterion_2() -> CriterionResult {
    run(2, "spectral-set reduction", None, || {
        let mut worst = 0.0_f64;
        for m in pca_corpus() {
            for q in 1..m.dim() {
                let a = pca_rse(&m, q)?;
                let b = spectral_set_distance(&m, &EqualAdjacent { q })?;
                worst = worst.max((a - b).abs());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let mut worst_surrogate = 0.0_f64;
        for _ in 0..50 {
            let d = rng.random_range(2..=6);
            let n = rng.random_range(d..=20);
            let e = Measure::from(corpus::random_empirical(&mut rng, n, d));
            let g = e.gaussian_surrogate();
            let orbit = FixedOrbit::new(&(0..d).map(|_| rng.random_range(0.1..3.0)).collect::<Vec<_>>())?;
            for q in 1..d {
                let f = EqualAdjacent { q };
                worst_surrogate = worst_surrogate.max((spectral_set_distance(&e, &f)? - spectral_set_distance(&g, &f)?).abs());
            }
            worst_surrogate = worst_surrogate.max((spectral_set_distance(&e, &orbit)? - spectral_set_distance(&g, &orbit)?).abs());
        }
        Ok((
            worst <= SPECTRAL_SET_TOL && worst_surrogate <= SPECTRAL_SET_TOL,
            format!("pca_rse vs G_q max error {worst:.2e}; empirical vs Gaussian surrogate max error {worst_surrogate:.2e}"),
        ))
    })
}

/// Exact W2 to the projected pushforward equals `√λ_min(Σ|_K)`.
pub fn criterion_3() -> CriterionResult {
    run(3, "projection oracle", Some(BUDGET_3), || {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let d = rng.random_range(1..=6);
            let n = rng.random_range(1..=40);
            let e = corpus::random_empirical(&mut rng, n, d);
            let k = rng.random_range(1..=d);
            let vs: Vec<DVector<f64>> = (0..k).map(|_| random::gaussian_vector(&mut rng, d)).collect();
            let sub = Subspace::span(d, &vs)?;
            let m = Measure::from(e.clone());
            let (dist, v) = distance_to_singular_set(&m, &sub)?;
            let Measure::Empirical(proj) = pushforward_projection(&m, &Subspace::orthogonal_to(&v)?)? else {
                return Err(Error::Numerical("projection changed the measure kind".into()));
            };
            let w2 = w2_discrete_exact(&e, &proj)?;
            worst = worst.max((w2 - dist).abs());
        }
        Ok((worst <= PROJECTION_TOL, format!("100 measures, max |W2 − √λ_min| {worst:.2e}")))
    })
}

/// Bures–Wasserstein against Procrustes and the orbit distance.
pub fn criterion_4() -> CriterionResult {
    run(4, "Bures-Wasserstein consistency", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        let mut worst_proc = 0.0_f64;
        for _ in 0..200 {
            let d = rng.random_range(1..=8);
            let a = corpus::random_psd(&mut rng, d);
            let b = corpus::random_psd(&mut rng, d);
            worst_proc = worst_proc.max((bures_wasserstein(&a, &b)? - procrustes_distance(&a, &b)?).abs());
        }
        let mut worst_violation = 0.0_f64;
        let mut worst_aligned = 0.0_f64;
        for _ in 0..10 {
            let d = rng.random_range(2..=8);
            let a = corpus::random_psd(&mut rng, d);
            let b = corpus::random_psd(&mut rng, d);
            let spec: Vec<f64> = b.eigenvalues().iter().copied().collect();
            let od = orbit_distance(&a, &spec)?;
            for _ in 0..100 {
                let u = random::orthogonal(&mut rng, d);
                let conj = b.congruence(&u)?;
                worst_violation = worst_violation.max(od - bures_wasserstein(&a, &conj)?);
            }
            let aligned = nearest_orbit_point(&a, &spec)?;
            worst_aligned = worst_aligned.max((bures_wasserstein(&a, &aligned)? - od).abs());
        }
        Ok((
            worst_proc <= BURES_TOL && worst_violation <= BURES_TOL && worst_aligned <= BURES_TOL,
            format!(
                "BW vs Procrustes max error {worst_proc:.2e}; orbit bound max violation {:.2e}; aligned-frame error {worst_aligned:.2e}",
                worst_violation.max(0.0)
            ),
        ))
    })
}

/// Gaussian phase retrieval: closed form, Monte Carlo and the sphere bounds.
pub fn criterion_5() -> CriterionResult {
    run(5, "Gaussian phase retrieval", Some(BUDGET_5), || {
        let opt = OptimizerConfig::default();
        let target = (1.0 - FRAC_2_PI).sqrt();
        let m = Measure::gaussian(PsdMatrix::identity(2));
        let e1 = DVector::from_column_slice(&[1.0, 0.0]);
        let r = phase_rse(&m, &e1, &opt)?;
        let closed_err = (r.rse - target).abs();
        let v = r.direction.clone();
        let est = mc_expectation(
            |x| x[0].powi(2).min(x.dot(&v).powi(2)),
            &GaussianMeasure::standard(2),
            PHASE_MC_SAMPLES,
            5,
        )?;
        let mc_dev = (est.value - target * target).abs() / est.stderr;
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        let mut failures = 0;
        let mut uncertified = 0;
        for _ in 0..100 {
            let d = rng.random_range(1..=6);
            let s = corpus::random_psd(&mut rng, d);
            let u = random::unit_vector(&mut rng, d);
            let rep = gauss_phase_bounds_check(&s, &u, &opt)?;
            failures += usize::from(!rep.holds());
            uncertified += usize::from(!rep.certified);
        }
        Ok((
            closed_err <= PHASE_CLOSED_FORM_TOL && mc_dev <= PHASE_MC_STDERRS && failures == 0,
            format!(
                "RSE {:.9} (error {closed_err:.1e}); MC {:.6} ± {:.1e} at {PHASE_MC_SAMPLES} samples ({mc_dev:.2} stderr); bounds failed on {failures}/100 ({uncertified} uncertified)",
                r.rse, est.value, est.stderr
            ),
        ))
    })
}

/// QMLE product bracket and the linear identity.
pub fn criterion_6() -> CriterionResult {
    run(6, "QMLE product bracket", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(106);
        let mut outside = 0;
        let mut checked = 0;
        for k in 0..100 {
            let d = rng.random_range(2..=5);
            let n = rng.random_range(d + 1..=30);
            let e = corpus::random_empirical(&mut rng, n, d);
            let mut beta = random::gaussian_vector(&mut rng, d);
            // Bound ⟨x,β★⟩ so the curvature range stays moderate.
            let max_t = (0..n).map(|i| e.point(i).dot(&beta).abs()).fold(0.0, f64::max);
            beta *= rng.random_range(0.5..3.0) / max_t.max(1e-12);
            let tangent = if k % 3 == 0 { Subspace::coordinates(d, &(0..d - 1).collect::<Vec<_>>())? } else { Subspace::full(d) };
            let h = if k % 2 == 0 { CumulantFunction::Logistic } else { CumulantFunction::Poisson };
            let m = Measure::from(e);
            let rse = qmle_rse(&m, &tangent)?;
            let q = qmle_reg(&m, h, &beta, &tangent)?;
            let product = rse * rse * q.reg;
            checked += 1;
            if !(q.c_lb <= product && product <= q.c_ub) {
                outside += 1;
            }
        }
        let mut worst_linear = 0.0_f64;
        for _ in 0..20 {
            let d = rng.random_range(1..=5);
            let n = rng.random_range(d..=20);
            let m = Measure::from(corpus::random_empirical(&mut rng, n, d));
            let beta = random::gaussian_vector(&mut rng, d);
            let t = Subspace::full(d);
            let rse = qmle_rse(&m, &t)?;
            let q = qmle_reg(&m, CumulantFunction::Linear, &beta, &t)?;
            worst_linear = worst_linear.max((rse * rse * q.reg - 1.0).abs());
        }
        Ok((
            outside == 0 && worst_linear <= QMLE_LINEAR_TOL,
            format!("{outside}/{checked} logistic/Poisson products outside [c_lb, c_ub]; linear max |product − 1| {worst_linear:.2e}"),
        ))
    })
}

fn support_pairs(p: &ProbMatrix) -> usize {
    p.pairs().len()
}

/// Exact matrix-completion RSE against enumeration, and the MaxCut identity.
pub fn criterion_7() -> CriterionResult {
    run(7, "matrix completion and MaxCut", Some(BUDGET_7), || {
        let mut mc_mismatch = Vec::new();
        let mut mc_checked = 0;
        let mut triangle = f64::NAN;
        for c in corpus::mc_cases() {
            if support_pairs(&c.probs) > MC_PAIR_LIMIT {
                continue;
            }
            let got = mc_rse(&c.probs, &c.beta_star, McMode::Exact)?.rse_sq;
            let want = brute_mc_rse(c.probs.entries(), &c.beta_star)?;
            mc_checked += 1;
            if c.name == "triangle" {
                triangle = got;
            }
            if (got - want).abs() > 1e-12 * want.abs().max(1.0) {
                mc_mismatch.push(format!("{} ({got} vs {want})", c.name));
            }
        }
        let mut cut_mismatch = Vec::new();
        let mut cut_checked = 0;
        for g in corpus::graph_cases() {
            if g.graph.n() > MAXCUT_VERTEX_LIMIT {
                continue;
            }
            let via = maxcut_via_rse(&g.graph)?;
            let brute = brute_maxcut(g.graph.n(), g.graph.edges())?;
            cut_checked += 1;
            if via != brute {
                cut_mismatch.push(format!("{} ({via} vs {brute})", g.name));
            }
        }
        let triangle_ok = (triangle - 1.0 / 3.0).abs() <= 1e-15;
        let mut detail = format!(
            "mc_rse exact vs enumeration: {}/{mc_checked} agree (triangle {triangle:.6}); MaxCut identity: {}/{cut_checked} agree",
            mc_checked - mc_mismatch.len(),
            cut_checked - cut_mismatch.len()
        );
        if !mc_mismatch.is_empty() {
            detail.push_str(&format!("; mc mismatches: {}", mc_mismatch.join(", ")));
        }
        if !cut_mismatch.is_empty() {
            detail.push_str(&format!("; MaxCut mismatches (via RSE vs brute force): {}", cut_mismatch.join(", ")));
        }
        Ok((mc_mismatch.is_empty() && cut_mismatch.is_empty() && triangle_ok, detail))
    })
}

/// The closed-form REG a numeric value should match, when one exists.
fn closed_form_reg(inst: &ProblemInstance) -> Result<Option<f64>> {
    Ok(match inst {
        ProblemInstance::PhaseRetrieval { data_x, beta_star, formulation: Formulation::RankOne } => {
            Some(phase_reg_rank_one_exact(data_x, beta_star)?)
        }
        ProblemInstance::Bilinear { data_1, data_2, beta1_star, beta2_star } => {
            Some(bilinear_reg_exact(data_1, data_2, beta1_star, beta2_star)?)
        }
        ProblemInstance::MatrixCompletion { probs, beta_star } => Some(mc_reg(probs, beta_star)?.exact),
        _ => None,
    })
}

/// Finite-difference REG against the closed forms and brackets.
pub fn criterion_8() -> CriterionResult {
    run(8, "numerical REG oracle", None, || {
        let opt = OptimizerConfig::default();
        let mut failures = Vec::new();
        let mut checked = 0;
        let mut worst = 0.0_f64;
        let mut families = std::collections::BTreeSet::new();
        for (name, inst) in corpus::shipped_instances() {
            let report = build_report(&inst, &opt, McMode::BranchBound)?;
            if report.ill_posed {
                continue;
            }
            let num = numeric_reg(&inst)?.reg;
            checked += 1;
            families.insert(inst.family());
            let ok = match report.reg {
                RegValue::Exact(v) => {
                    worst = worst.max(rel_err(num, v));
                    rel_err(num, v) <= NUMERIC_REG_REL
                }
                RegValue::Bracket { .. } => {
                    let inside = report.reg.contains(num, NUMERIC_REG_REL);
                    match closed_form_reg(&inst)? {
                        Some(v) => {
                            worst = worst.max(rel_err(num, v));
                            inside && rel_err(num, v) <= NUMERIC_REG_REL
                        }
                        None => inside,
                    }
                }
            };
            if !ok {
                failures.push(format!("{name} (numeric {num})"));
            }
        }
        let ok = failures.is_empty() && families.len() == 5;
        let mut detail = format!("{checked} well-posed instances over {} families, max relative error {worst:.2e}", families.len());
        if !failures.is_empty() {
            detail.push_str(&format!("; failures: {}", failures.join(", ")));
        }
        Ok((ok, detail))
    })
}

/// Wielandt-type inequality and its equality witness.
pub fn criterion_9() -> CriterionResult {
    run(9, "bilinear Wielandt claim", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let mut violations = 0;
        let mut worst_witness = 0.0_f64;
        let mut min_margin = f64::INFINITY;
        for k in 0..20 {
            let d = rng.random_range(2..=8);
            let a = corpus::random_psd(&mut rng, d);
            let r = wielandt_claim_check(&a, 1000, 900 + k)?;
            violations += usize::from(!r.inequality_holds);
            worst_witness = worst_witness.max(r.witness_error);
            min_margin = min_margin.min(r.min_relative_margin);
        }
        Ok((
            violations == 0 && worst_witness <= WITNESS_TOL,
            format!("20 matrices x 1000 pairs: {violations} violations, min relative margin {min_margin:.2e}, witness error {worst_witness:.2e}"),
        ))
    })
}

/// Degree-one homogeneity of RSE in the data scaling.
pub fn criterion_10() -> CriterionResult {
    run(10, "scale equivariance", None, || {
        let opt = OptimizerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(110);
        let scales = [0.25, 3.0, -1.7];
        let mut worst = [0.0_f64; 4];
        for _ in 0..10 {
            let d = rng.random_range(2..=5);
            let g = Measure::gaussian(corpus::random_psd(&mut rng, d));
            let n = rng.random_range(d + 1..=12);
            let e = Measure::from(corpus::random_empirical(&mut rng, n, d));
            let beta = random::gaussian_vector(&mut rng, d);
            let t = Subspace::coordinates(d, &[0, d - 1])?;
            let g2 = Measure::gaussian(corpus::random_psd(&mut rng, d + 1));
            for m in [&g, &e] {
                for &c in &scales {
                    let s = m.scaled(c)?;
                    worst[0] = worst[0].max(rel_err(pca_rse(&s, 1)?, c.abs() * pca_rse(m, 1)?));
                    worst[1] = worst[1].max(rel_err(qmle_rse(&s, &t)?, c.abs() * qmle_rse(m, &t)?));
                    worst[2] = worst[2].max(rel_err(phase_rse(&s, &beta, &opt)?.rse, c.abs() * phase_rse(m, &beta, &opt)?.rse));
                    let s2 = g2.scaled(c)?;
                    worst[3] = worst[3].max(rel_err(bilinear_rse(&s, &s2)?, c.abs() * bilinear_rse(m, &g2)?));
                }
            }
        }
        let mut mc_exact = true;
        for c in corpus::mc_cases().into_iter().filter(|c| support_pairs(&c.probs) <= 16) {
            let base = mc_rse(&c.probs, &c.beta_star, McMode::BranchBound)?.rse;
            for &s in &scales {
                let scaled = mc_rse(&c.probs, &(&c.beta_star * s), McMode::BranchBound)?.rse;
                mc_exact &= scaled == base;
            }
        }
        let ok = worst.iter().all(|&w| w <= SCALE_REL) && mc_exact;
        Ok((
            ok,
            format!(
                "max relative error pca {:.1e}, qmle {:.1e}, phase {:.1e}, bilinear {:.1e}; completion invariant under β★ scaling: {mc_exact}",
                worst[0], worst[1], worst[2], worst[3]
            ),
        ))
    })
}

/// All criteria in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ]
}

/// Runs one criterion by number.
pub fn run_one(id: u8) -> Option<CriterionResult> {
    Some(match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        _ => return None,
    })
}
