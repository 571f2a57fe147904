//! Shipped instances: worked examples for every family, matrix-completion
//! supports and small graphs. Random members are seeded and fixed.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{random, Subspace};
use crate::mc_graph::{maxcut_instance, ProbMatrix, SimpleGraph};
use crate::measures::{EmpiricalMeasure, Measure};
use crate::problems::{CumulantFunction, Formulation, ProblemInstance};
use crate::spectral::PsdMatrix;

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn gauss(diag: &[f64]) -> Measure {
    Measure::gaussian(PsdMatrix::diag(diag).expect("valid diagonal"))
}

fn empirical(rows: &[Vec<f64>], w: Option<&[f64]>) -> Measure {
    Measure::from(EmpiricalMeasure::from_rows(rows, w).expect("valid empirical measure"))
}

fn prob(rows: &[&[f64]]) -> ProbMatrix {
    let d = rows.len();
    ProbMatrix::new(DMatrix::from_fn(d, d, |i, j| rows[i][j])).expect("valid probability matrix")
}

/// A named matrix-completion instance.
#[derive(Debug, Clone)]
pub struct McCase {
    pub name: String,
    pub probs: ProbMatrix,
    pub beta_star: DVector<f64>,
}

/// A named graph.
#[derive(Debug, Clone)]
pub struct GraphCase {
    pub name: String,
    pub graph: SimpleGraph,
}

/// Worked examples for all five families, well-posed and not.
pub fn shipped_instances() -> Vec<(String, ProblemInstance)> {
    let mut out: Vec<(String, ProblemInstance)> = Vec::new();
    let mut push = |name: &str, p: ProblemInstance| out.push((name.to_string(), p));

    push("pca_diag_4_1", ProblemInstance::Pca { data: gauss(&[4.0, 1.0]), q: 1 });
    push("pca_diag_9_4_1_q1", ProblemInstance::Pca { data: gauss(&[9.0, 4.0, 1.0]), q: 1 });
    push("pca_diag_9_4_1_q2", ProblemInstance::Pca { data: gauss(&[9.0, 4.0, 1.0]), q: 2 });
    push("pca_identity", ProblemInstance::Pca { data: gauss(&[1.0, 1.0]), q: 1 });
    push(
        "pca_empirical",
        ProblemInstance::Pca {
            data: empirical(&[vec![2.0, 0.5, 0.0], vec![-1.0, 1.0, 0.3], vec![0.4, -0.2, 1.1], vec![-1.5, -0.9, 0.2]], None),
            q: 1,
        },
    );

    push(
        "qmle_linear_diag_9_1",
        ProblemInstance::Qmle {
            data_x: gauss(&[9.0, 1.0]),
            cumulant: CumulantFunction::Linear,
            beta_star: dv(&[1.0, 1.0]),
            tangent: Subspace::full(2),
        },
    );
    let pts = vec![vec![1.0, 0.2, -0.5], vec![-0.3, 0.8, 0.4], vec![0.6, -0.7, 0.9], vec![-0.9, -0.1, -0.6], vec![0.2, 0.5, -0.3]];
    push(
        "qmle_logistic_empirical",
        ProblemInstance::Qmle {
            data_x: empirical(&pts, None),
            cumulant: CumulantFunction::Logistic,
            beta_star: dv(&[0.7, -0.4, 0.3]),
            tangent: Subspace::full(3),
        },
    );
    push(
        "qmle_poisson_sparse",
        ProblemInstance::Qmle {
            data_x: empirical(&pts, Some(&[0.1, 0.3, 0.2, 0.25, 0.15])),
            cumulant: CumulantFunction::Poisson,
            beta_star: dv(&[0.0, 0.5, -0.8]),
            tangent: Subspace::coordinates(3, &[1, 2]).expect("valid coordinates"),
        },
    );
    push(
        "qmle_gamma_empirical",
        ProblemInstance::Qmle {
            data_x: empirical(&[vec![1.0, 0.5], vec![0.8, -0.2], vec![1.5, 0.3]], None),
            cumulant: CumulantFunction::Gamma,
            beta_star: dv(&[-1.0, 0.2]),
            tangent: Subspace::full(2),
        },
    );

    push(
        "phase_gaussian_identity",
        ProblemInstance::PhaseRetrieval { data_x: gauss(&[1.0, 1.0]), beta_star: dv(&[1.0, 0.0]), formulation: Formulation::Factored },
    );
    push(
        "phase_gaussian_rank_one",
        ProblemInstance::PhaseRetrieval { data_x: gauss(&[2.0, 1.0, 0.5]), beta_star: dv(&[1.0, -0.5, 0.3]), formulation: Formulation::RankOne },
    );
    push(
        "phase_empirical",
        ProblemInstance::PhaseRetrieval {
            data_x: empirical(&[vec![1.0, 0.3], vec![-0.4, 1.2], vec![0.9, -0.8], vec![0.2, 0.6], vec![-1.1, -0.5]], None),
            beta_star: dv(&[1.0, 0.5]),
            formulation: Formulation::Factored,
        },
    );
    push(
        "phase_in_beta_perp",
        ProblemInstance::PhaseRetrieval {
            data_x: empirical(&[vec![0.0, 1.0], vec![0.0, -2.0]], None),
            beta_star: dv(&[1.0, 0.0]),
            formulation: Formulation::Factored,
        },
    );

    push(
        "bilinear_diag",
        ProblemInstance::Bilinear {
            data_1: gauss(&[4.0, 1.0]),
            data_2: gauss(&[9.0, 4.0]),
            beta1_star: dv(&[1.0, 0.0]),
            beta2_star: dv(&[1.0, 0.0]),
        },
    );
    push(
        "bilinear_identity",
        ProblemInstance::Bilinear {
            data_1: gauss(&[1.0, 1.0]),
            data_2: gauss(&[1.0, 1.0]),
            beta1_star: dv(&[1.0, 0.0]),
            beta2_star: dv(&[0.0, 1.0]),
        },
    );
    push(
        "bilinear_correlated",
        ProblemInstance::Bilinear {
            data_1: Measure::gaussian(PsdMatrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.2], vec![0.0, 0.2, 0.7]]).expect("psd")),
            data_2: gauss(&[3.0, 1.0]),
            beta1_star: dv(&[0.5, -1.0, 2.0]),
            beta2_star: dv(&[1.0, 1.0]),
        },
    );
    push(
        "bilinear_singular",
        ProblemInstance::Bilinear { data_1: gauss(&[1.0, 0.0]), data_2: gauss(&[1.0, 1.0]), beta1_star: dv(&[1.0, 0.0]), beta2_star: dv(&[1.0, 0.0]) },
    );

    push(
        "mc_two_by_two",
        ProblemInstance::MatrixCompletion { probs: prob(&[&[0.5, 0.25], &[0.25, 0.0]]), beta_star: dv(&[1.0, 1.0]) },
    );
    let s = 1.0 / 6.0;
    push(
        "mc_triangle",
        ProblemInstance::MatrixCompletion { probs: prob(&[&[0.0, s, s], &[s, 0.0, s], &[s, s, 0.0]]), beta_star: dv(&[1.0, 1.0, 1.0]) },
    );
    push(
        "mc_weighted_triangle",
        ProblemInstance::MatrixCompletion {
            probs: prob(&[&[0.1, 0.1, 0.05, 0.0], &[0.1, 0.0, 0.1, 0.05], &[0.05, 0.1, 0.0, 0.0], &[0.0, 0.05, 0.0, 0.0]]),
            beta_star: dv(&[1.0, -2.0, 0.5, 0.0]),
        },
    );
    push(
        "mc_single_edge",
        ProblemInstance::MatrixCompletion { probs: prob(&[&[0.0, 0.5], &[0.5, 0.0]]), beta_star: dv(&[1.0, 1.0]) },
    );
    out
}

/// Matrix-completion supports: the worked examples, the MaxCut gadgets and
/// seeded random instances with at most 24 support pairs.
pub fn mc_cases() -> Vec<McCase> {
    let mut out = Vec::new();
    let mut push = |name: String, probs: ProbMatrix, beta_star: DVector<f64>| out.push(McCase { name, probs, beta_star });
    let s = 1.0 / 6.0;
    push("triangle".into(), prob(&[&[0.0, s, s], &[s, 0.0, s], &[s, s, 0.0]]), dv(&[1.0, 1.0, 1.0]));
    push("zero_coordinate".into(), prob(&[&[0.5, 0.25], &[0.25, 0.0]]), dv(&[1.0, 0.0]));
    push("two_by_two".into(), prob(&[&[0.5, 0.25], &[0.25, 0.0]]), dv(&[1.0, 1.0]));
    push("single_edge".into(), prob(&[&[0.0, 0.5], &[0.5, 0.0]]), dv(&[1.0, 1.0]));
    push("loop_and_edge".into(), prob(&[&[0.4, 0.3], &[0.3, 0.0]]), dv(&[1.0, 1.0]));
    push("empty".into(), prob(&[&[0.0, 0.0], &[0.0, 0.0]]), dv(&[1.0, 0.0]));
    for g in graph_cases() {
        if g.graph.components().len() == 1 && g.graph.edges().len() <= 24 {
            let vertices: Vec<usize> = (0..g.graph.n()).collect();
            let (p, b) = maxcut_instance(&vertices, g.graph.edges()).expect("connected gadget");
            push(format!("maxcut_{}", g.name), p, b);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..48 {
        let d = rng.random_range(2..=7);
        let density = rng.random_range(0.25..0.9);
        let mut m = DMatrix::zeros(d, d);
        let mut pairs = 0;
        for i in 0..d {
            for j in i..d {
                if pairs < 24 && rng.random::<f64>() < density {
                    let v = rng.random_range(0.1..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                    pairs += 1;
                }
            }
        }
        let total = m.sum();
        if total > 0.0 {
            // Leave some mass unobserved on half of the instances.
            let keep = if k % 2 == 0 { 1.0 } else { 0.8 };
            m *= keep / total;
        }
        let beta = DVector::from_fn(d, |_, _| if rng.random::<f64>() < 0.8 { rng.random_range(-2.0..2.0) } else { 0.0 });
        push(format!("random_{k}"), ProbMatrix::new(m).expect("valid random instance"), beta);
    }
    out
}

fn complete(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

fn cycle(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|a| (a, (a + 1) % n)).collect()
}

/// Small graphs (≤ 12 vertices): named families plus seeded `G(n, p)` samples.
pub fn graph_cases() -> Vec<GraphCase> {
    let mut out = Vec::new();
    let mut push = |name: &str, n: usize, e: Vec<(usize, usize)>| {
        out.push(GraphCase { name: name.into(), graph: SimpleGraph::new(n, &e).expect("valid graph") })
    };
    push("single_edge", 2, vec![(0, 1)]);
    push("k3", 3, complete(3));
    push("c4", 4, cycle(4));
    push("path_p3", 3, vec![(0, 1), (1, 2)]);
    push("star_k13", 4, vec![(0, 1), (0, 2), (0, 3)]);
    push("c5", 5, cycle(5));
    push("c7", 7, cycle(7));
    push("k4", 4, complete(4));
    let mut k4p = complete(4);
    k4p.push((3, 4));
    push("k4_pendant", 5, k4p);
    let mut k3p = complete(3);
    k3p.push((2, 3));
    push("k3_pendant", 4, k3p);
    push("bowtie", 5, vec![(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]);
    push("two_triangles", 6, vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
    push("k5", 5, complete(5));
    push("k6", 6, complete(6));
    let mut wheel = cycle(5).iter().map(|&(a, b)| (a + 1, b + 1)).collect::<Vec<_>>();
    wheel.extend((1..=5).map(|v| (0, v)));
    push("wheel_w5", 6, wheel);
    let mut petersen = cycle(5);
    petersen.extend((0..5).map(|i| (i, i + 5)));
    petersen.extend((0..5).map(|i| (i + 5, (i + 2) % 5 + 5)));
    push("petersen", 10, petersen);
    push("k33", 6, (0..3).flat_map(|a| (3..6).map(move |b| (a, b))).collect());

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n in 5..=12 {
        for k in 0..2 {
            let p = if k == 0 { 0.3 } else { 0.5 };
            let e: Vec<(usize, usize)> = complete(n).into_iter().filter(|_| rng.random::<f64>() < p).collect();
            out.push(GraphCase { name: format!("gnp_{n}_{k}"), graph: SimpleGraph::new(n, &e).expect("valid random graph") });
        }
    }
    out
}

/// Random PSD matrix with eigenvalues log-uniform in `[0.1, 10]`.
pub fn random_psd(rng: &mut ChaCha8Rng, d: usize) -> PsdMatrix {
    PsdMatrix::new(random::psd_with_spectrum_range(rng, d, 0.1, 10.0)).expect("random PSD matrix")
}

/// Random empirical measure with `n` Gaussian points in `R^d` and random weights.
pub fn random_empirical(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmpiricalMeasure {
    let pts = random::gaussian_matrix(rng, n, d);
    let w = DVector::from_fn(n, |_, _| rng.random_range(0.2..1.0));
    let w = &w / w.sum();
    EmpiricalMeasure::new(pts, w).expect("random empirical measure")
}
