use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rse_core::measures::{w2_discrete_exact, w2_discrete_with_coupling};
use rse_core::EmpiricalMeasure;

fn line_measure(xs: &[f64], ws: &[f64]) -> EmpiricalMeasure {
    EmpiricalMeasure::new(DMatrix::from_column_slice(xs.len(), 1, xs), DVector::from_column_slice(ws)).unwrap()
}

/// W2² on the line through the quantile functions: integrate (F⁻¹ − G⁻¹)² piecewise.
fn quantile_w2_sq(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    b.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let step = ra.min(rb);
        total += step * (a[i].0 - b[j].0).powi(2);
        ra -= step;
        rb -= step;
        if ra <= 1e-15 {
            i += 1;
            if i < a.len() {
                ra = a[i].1;
            }
        }
        if rb <= 1e-15 {
            j += 1;
            if j < b.len() {
                rb = b[j].1;
            }
        }
    }
    total
}

fn normalized(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_dimensional_w2_matches_quantile_coupling(seed in any::<u64>(), n in 1usize..12, m in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ys: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (wa, wb) = (normalized(&mut rng, n), normalized(&mut rng, m));
        let a = line_measure(&xs, &wa);
        let b = line_measure(&ys, &wb);
        let want = quantile_w2_sq(
            &xs.iter().copied().zip(wa.iter().copied()).collect::<Vec<_>>(),
            &ys.iter().copied().zip(wb.iter().copied()).collect::<Vec<_>>(),
        );
        let got = w2_discrete_exact(&a, &b).unwrap();
        prop_assert!((got * got - want).abs() < 1e-10, "{} vs {}", got * got, want);
    }

    #[test]
    fn uniform_equal_size_uses_a_permutation(seed in any::<u64>(), n in 2usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let w = vec![1.0 / n as f64; n];
        let (a, b) = (line_measure(&xs, &w), line_measure(&ys, &w));
        let mut sx = xs.clone();
        let mut sy = ys.clone();
        sx.sort_by(f64::total_cmp);
        sy.sort_by(f64::total_cmp);
        let want: f64 = sx.iter().zip(&sy).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n as f64;
        let (d, c) = w2_discrete_with_coupling(&a, &b).unwrap();
        c.validate(&a, &b).unwrap();
        prop_assert!((d * d - want).abs() < 1e-10);
    }

    #[test]
    fn w2_is_a_metric_on_samples(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mk = |rng: &mut ChaCha8Rng| {
            let n = rng.random_range(1..8);
            let pts = DMatrix::from_fn(n, d, |_, _| rng.random_range(-2.0..2.0));
            let w = normalized(rng, n);
            EmpiricalMeasure::new(pts, DVector::from_vec(w)).unwrap()
        };
        let (a, b, c) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
        let ab = w2_discrete_exact(&a, &b).unwrap();
        let ba = w2_discrete_exact(&b, &a).unwrap();
        let bc = w2_discrete_exact(&b, &c).unwrap();
        let ac = w2_discrete_exact(&a, &c).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(w2_discrete_exact(&a, &a).unwrap() < 1e-7);
    }
}
