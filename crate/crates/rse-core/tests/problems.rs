use std::f64::consts::FRAC_2_PI;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rse_core::linalg::random;
use rse_core::mc_graph::McMode;
use rse_core::measures::{distance_to_singular_set, w2_discrete_exact};
use rse_core::oracles::brute::brute_phase_rse_sq;
use rse_core::oracles::{mc_expectation, numeric_reg};
use rse_core::problems::bilinear::{bilinear_reg_bounds, bilinear_reg_exact};
use rse_core::problems::pca::pca_reg;
use rse_core::problems::phase::{gauss_g, gauss_h, phase_reg, phase_rse};
use rse_core::problems::qmle::{qmle_reg, qmle_rse};
use rse_core::problems::report::build_report;
use rse_core::problems::{CumulantFunction, Formulation, OptimizerConfig, ProblemInstance};
use rse_core::{EmpiricalMeasure, GaussianMeasure, Measure, PsdMatrix, Subspace};

fn psd(rng: &mut ChaCha8Rng, d: usize) -> PsdMatrix {
    PsdMatrix::new(random::psd_with_spectrum_range(rng, d, 0.1, 10.0)).unwrap()
}

fn empirical(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmpiricalMeasure {
    let pts = random::gaussian_matrix(rng, n, d);
    let w = DVector::from_fn(n, |_, _| rng.random_range(0.2..1.0));
    let s = w.sum();
    EmpiricalMeasure::new(pts, w / s).unwrap()
}

/// Moves each point to the nearer of `β̂⊥` and `v⊥`.
fn nearest_set_pushforward(e: &EmpiricalMeasure, u: &DVector<f64>, v: &DVector<f64>) -> EmpiricalMeasure {
    let mut pts = e.points().clone();
    for i in 0..e.len() {
        let x = e.point(i);
        let (a, b) = (x.dot(u), x.dot(v));
        let y = if a * a <= b * b { &x - u * a } else { &x - v * b };
        pts.set_row(i, &y.transpose());
    }
    EmpiricalMeasure::new(pts, e.weights().clone()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn empirical_phase_rse_is_the_w2_to_the_nearest_set_pushforward(seed in any::<u64>(), n in 2usize..10, d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = empirical(&mut rng, n, d);
        let beta = random::gaussian_vector(&mut rng, d);
        let r = phase_rse(&Measure::from(e.clone()), &beta, &OptimizerConfig::default()).unwrap();
        let brute = brute_phase_rse_sq(&e, &beta).unwrap();
        prop_assert!((r.rse_sq - brute).abs() < 1e-9 * brute.max(1e-3), "{} vs {}", r.rse_sq, brute);
        let nu = nearest_set_pushforward(&e, &beta.normalize(), &r.direction);
        let w = w2_discrete_exact(&e, &nu).unwrap();
        prop_assert!((w * w - r.rse_sq).abs() < 1e-8);
    }

    #[test]
    fn gaussian_phase_rse_lies_in_its_bracket(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = psd(&mut rng, d);
        let beta = random::gaussian_vector(&mut rng, d);
        let lam = s.lambda_min();
        let r = phase_rse(&Measure::gaussian(s), &beta, &OptimizerConfig::default()).unwrap();
        let slack = 1e-9 * lam.max(1.0);
        prop_assert!(r.rse_sq >= (1.0 - FRAC_2_PI) * lam - slack && r.rse_sq <= lam + slack);
    }

    #[test]
    fn gaussian_phase_product_in_predicted_bounds(seed in any::<u64>(), d in 1usize..5, rank_one in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = psd(&mut rng, d);
        let beta = random::gaussian_vector(&mut rng, d);
        let formulation = if rank_one { Formulation::RankOne } else { Formulation::Factored };
        let inst = ProblemInstance::PhaseRetrieval { data_x: Measure::gaussian(s), beta_star: beta, formulation };
        let rep = build_report(&inst, &OptimizerConfig::default(), McMode::BranchBound).unwrap();
        prop_assert_eq!(rep.product_in_bounds, Some(true));
    }

    #[test]
    fn qmle_rse_is_the_singular_set_distance(seed in any::<u64>(), n in 1usize..15, d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Measure::from(empirical(&mut rng, n, d));
        let k = rng.random_range(1..=d);
        let vs: Vec<DVector<f64>> = (0..k).map(|_| random::gaussian_vector(&mut rng, d)).collect();
        let t = Subspace::span(d, &vs).unwrap();
        prop_assert_eq!(qmle_rse(&m, &t).unwrap(), distance_to_singular_set(&m, &t).unwrap().0);
    }

    #[test]
    fn reg_scales_inversely_with_data(seed in any::<u64>(), d in 2usize..5, c in prop_oneof![-3.0f64..-0.3, 0.3f64..3.0]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Measure::gaussian(psd(&mut rng, d));
        let s = m.scaled(c).unwrap();
        let beta = random::gaussian_vector(&mut rng, d);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        prop_assert!(rel(pca_reg(&s, 1).unwrap(), pca_reg(&m, 1).unwrap() / (c * c)) < 1e-9);
        let t = Subspace::full(d);
        let q0 = qmle_reg(&m, CumulantFunction::Linear, &beta, &t).unwrap().reg;
        let q1 = qmle_reg(&s, CumulantFunction::Linear, &beta, &t).unwrap().reg;
        prop_assert!(rel(q1, q0 / (c * c)) < 1e-9);
        let p0 = phase_reg(&m, &beta, Formulation::Factored).unwrap().exact.unwrap();
        let p1 = phase_reg(&s, &beta, Formulation::Factored).unwrap().exact.unwrap();
        prop_assert!(rel(p1, p0 / c.powi(4)) < 1e-9);
    }

    #[test]
    fn bilinear_exact_reg_within_bracket(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m1, m2) = (Measure::gaussian(psd(&mut rng, d1)), Measure::gaussian(psd(&mut rng, d2)));
        let (b1, b2) = (random::gaussian_vector(&mut rng, d1), random::gaussian_vector(&mut rng, d2));
        let br = bilinear_reg_bounds(&m1, &m2, &b1, &b2).unwrap();
        let exact = bilinear_reg_exact(&m1, &m2, &b1, &b2).unwrap();
        prop_assert!(exact >= br.reg.0 * (1.0 - 1e-9) && exact <= br.reg.1 * (1.0 + 1e-9));
        let swapped = bilinear_reg_bounds(&m2, &m1, &b2, &b1).unwrap();
        prop_assert!((swapped.reg.0 - br.reg.0).abs() <= 1e-12 * br.reg.0 && (swapped.reg.1 - br.reg.1).abs() <= 1e-12 * br.reg.1);
    }

    #[test]
    fn numeric_reg_matches_pca_and_qmle(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = psd(&mut rng, d);
        let m = Measure::gaussian(s);
        let q = rng.random_range(1..d);
        let want = pca_reg(&m, q).unwrap();
        let got = numeric_reg(&ProblemInstance::Pca { data: m.clone(), q }).unwrap().reg;
        prop_assert!((got - want).abs() <= 1e-3 * want);
        let beta = random::gaussian_vector(&mut rng, d);
        let t = Subspace::full(d);
        let want = qmle_reg(&m, CumulantFunction::Linear, &beta, &t).unwrap().reg;
        let inst = ProblemInstance::Qmle { data_x: m, cumulant: CumulantFunction::Linear, beta_star: beta, tangent: t };
        prop_assert!((numeric_reg(&inst).unwrap().reg - want).abs() <= 1e-3 * want);
    }
}

#[test]
fn gauss_closed_forms_match_monte_carlo() {
    let s = PsdMatrix::from_rows(&[vec![2.0, 0.5, 0.1], vec![0.5, 1.0, -0.3], vec![0.1, -0.3, 0.8]]).unwrap();
    let g = GaussianMeasure::new(s.clone());
    let u = DVector::from_column_slice(&[1.0, 0.5, -0.2]).normalize();
    let v = DVector::from_column_slice(&[-0.3, 1.0, 0.4]).normalize();
    let h = gauss_h(&s, &u, &v).unwrap();
    let est = mc_expectation(|x| x.dot(&u).powi(2).min(x.dot(&v).powi(2)), &g, 1_000_000, 21).unwrap();
    assert!((est.value - h).abs() <= 4.0 * est.stderr, "h: {} vs {h}", est.value);
    let gg = gauss_g(&s, &u, &v).unwrap();
    let est = mc_expectation(|x| (x.dot(&u) * x.dot(&v)).powi(2), &g, 1_000_000, 22).unwrap();
    assert!((est.value - gg).abs() <= 4.0 * est.stderr, "g: {} vs {gg}", est.value);
}

#[test]
fn phase_rse_examples() {
    let opt = OptimizerConfig::default();
    let rows = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
    let e = Measure::from(EmpiricalMeasure::from_rows(&rows, None).unwrap());
    let r = phase_rse(&e, &DVector::from_column_slice(&[1.0, 0.0]), &opt).unwrap();
    assert!(r.rse < 1e-12);
    let inside = Measure::from(EmpiricalMeasure::from_rows(&[vec![0.0, 1.0], vec![0.0, 3.0]], None).unwrap());
    assert_eq!(phase_rse(&inside, &DVector::from_column_slice(&[1.0, 0.0]), &opt).unwrap().rse, 0.0);
}
