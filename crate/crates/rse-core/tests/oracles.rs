use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rse_core::linalg::random;
use rse_core::oracles::{
    draw_samples, mc_expectation, robustness_neighborhood_check, sandwich_check, slope_lower_bound, McSettings,
    NeighborhoodCheck, PerturbationFamily, SmoothMapHandle,
};
use rse_core::{EmpiricalMeasure, GaussianMeasure, Measure, PsdMatrix};

fn empirical(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmpiricalMeasure {
    let pts = random::gaussian_matrix(rng, n, d);
    let w = DVector::from_fn(n, |_, _| rng.random_range(0.2..1.0));
    let s = w.sum();
    EmpiricalMeasure::new(pts, w / s).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn monte_carlo_is_bit_reproducible_across_thread_counts() {
    let g = GaussianMeasure::new(PsdMatrix::from_rows(&[vec![1.5, 0.2, 0.0], vec![0.2, 1.0, 0.3], vec![0.0, 0.3, 0.5]]).unwrap());
    let f = |x: &DVector<f64>| x[0].powi(2).min((x[1] + x[2]).powi(2));
    for samples in [2, 4095, 4096, 4097, 50_000] {
        let a = in_pool(1, || mc_expectation(f, &g, samples, 17).unwrap());
        let b = in_pool(3, || mc_expectation(f, &g, samples, 17).unwrap());
        let c = in_pool(8, || mc_expectation(f, &g, samples, 17).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.value.to_bits(), c.value.to_bits());
        assert_eq!(a.stderr.to_bits(), c.stderr.to_bits());
    }
    let m = Measure::from(g);
    let a = in_pool(1, || draw_samples(&m, 9000, 3).unwrap());
    let b = in_pool(6, || draw_samples(&m, 9000, 3).unwrap());
    assert_eq!(a, b);
}

#[test]
fn prefix_of_a_stream_is_stable() {
    let g = GaussianMeasure::standard(2);
    let m = Measure::from(g);
    let long = draw_samples(&m, 6000, 5).unwrap();
    let short = draw_samples(&m, 100, 5).unwrap();
    assert_eq!(long.points().rows(0, 100), short.points().rows(0, 100));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn slope_of_the_identity_map(seed in any::<u64>(), n in 1usize..20, d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = empirical(&mut rng, n, d);
        let u = random::unit_vector(&mut rng, d);
        let want = 2.0 * e.second_moment().quad(&u).max(0.0).sqrt();
        let got = slope_lower_bound(&Measure::from(e), &SmoothMapHandle::identity(d), &u).unwrap();
        prop_assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn slope_is_homogeneous(seed in any::<u64>(), n in 1usize..20, d in 1usize..5, c in 0.1f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = Measure::from(empirical(&mut rng, n, d));
        let u = random::unit_vector(&mut rng, d);
        let g = SmoothMapHandle::identity(d);
        let a = slope_lower_bound(&e, &g, &u).unwrap();
        let b = slope_lower_bound(&e.scaled(c).unwrap(), &g, &u).unwrap();
        prop_assert!((b - c * a).abs() < 1e-10 * b.max(1.0));
    }

    #[test]
    fn sandwich_is_exact_for_the_identity(seed in any::<u64>(), n in 1usize..20, d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = Measure::from(empirical(&mut rng, n, d));
        let u = random::unit_vector(&mut rng, d);
        let s = sandwich_check(&e, &SmoothMapHandle::identity(d), &u, McSettings::default()).unwrap();
        // Both square roots are taken of the same sum, so they agree bitwise.
        prop_assert_eq!(s.mid, s.rhs);
        prop_assert!((s.rhs * s.rhs - s.lhs).abs() <= 4.0 * f64::EPSILON * s.lhs);
    }

    #[test]
    fn robustness_bound_holds_for_pca(seed in any::<u64>(), frac in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(2..5);
        let s = PsdMatrix::new(random::psd_with_spectrum_range(&mut rng, d, 0.5, 10.0)).unwrap();
        let m = Measure::gaussian(s);
        let rse = rse_core::problems::pca::pca_rse(&m, 1).unwrap();
        prop_assume!(rse > 1e-6);
        let setup = NeighborhoodCheck { components: 1, radius: frac * rse, exponent: 1.0, constant: 1.0, samples: 50, seed };
        for fam in [PerturbationFamily::CovariancePerturbation, PerturbationFamily::Scaling] {
            let r = robustness_neighborhood_check(fam, &m, &setup).unwrap();
            prop_assert!(r.max_w2 <= setup.radius);
            if r.hypothesis_violations == 0 {
                prop_assert!(r.all_within_bound);
            }
        }
    }
}

#[test]
fn phase_map_sandwich_ratio_is_finite() {
    let m = Measure::gaussian(PsdMatrix::identity(2));
    let beta = DVector::from_column_slice(&[1.0, 0.0]);
    let g = SmoothMapHandle::phase(&beta);
    let u = DVector::from_column_slice(&[0.0, 1.0]);
    let s = sandwich_check(&m, &g, &u, McSettings { samples: 200_000, seed: 4 }).unwrap();
    // E[x1² x2²] = 1 and E[x1² x2² (x1² + x2²)] = 6 for standard normals.
    assert!((s.lhs - 1.0).abs() < 0.05);
    assert!((s.mid - 6f64.sqrt()).abs() < 0.2);
    assert!(s.ratio().is_finite());
}
