//! JSON problem specifications and their conversion into problem instances.
//!
//! Relative data paths are resolved against the directory holding the spec.

use std::fs::File;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rse_core::mc_graph::{McMode, ProbMatrix};
use rse_core::problems::qmle::sparse_tangent;
use rse_core::problems::{CumulantFunction, Formulation, OptimizerConfig, ProblemInstance};
use rse_core::{EmpiricalMeasure, Measure, PsdMatrix, Subspace};
use serde::Deserialize;

/// A spec-level failure; always maps to exit code 3.
#[derive(Debug)]
pub struct SpecError(pub String);

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> SpecError {
    SpecError(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub problem: String,
    pub data: Option<DataSource>,
    pub data_2: Option<DataSource>,
    pub q: Option<usize>,
    pub beta_star: Option<Vec<f64>>,
    pub beta2_star: Option<Vec<f64>>,
    pub cumulant: Option<String>,
    pub formulation: Option<String>,
    /// `full` (default) or `sparse`.
    pub tangent: Option<String>,
    #[serde(default)]
    pub estimation: Estimation,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Estimation {
    pub mc_samples: Option<usize>,
    pub seed: Option<u64>,
    pub optimizer: Option<OptimizerSpec>,
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub restarts: Option<usize>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub gaussian: Option<GaussianSource>,
    pub empirical: Option<EmpiricalSource>,
    pub prob_matrix: Option<ProbSource>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSource {
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalSource {
    pub path: PathBuf,
    #[serde(default)]
    pub center: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbSource {
    pub dense: Option<Vec<Vec<f64>>>,
    pub dense_path: Option<PathBuf>,
    pub triples: Option<PathBuf>,
    pub dim: Option<usize>,
}

/// Parsed spec with resolved data.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub instance: ProblemInstance,
    pub optimizer: OptimizerConfig,
    pub mode: McMode,
    pub seed: Option<u64>,
    pub mc_samples: Option<usize>,
    /// SHA-256 of the spec file bytes.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads and parses the spec file without loading data.
pub fn read_spec(path: &Path) -> Result<(ProblemSpec, String), SpecError> {
    let bytes = std::fs::read(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| bad(format!("{}: not UTF-8", path.display())))?;
    let spec: ProblemSpec = serde_json::from_str(text)
        .map_err(|e| bad(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))?;
    Ok((spec, sha256_hex(&bytes)))
}

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>, SpecError> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(bad(format!("{field}: expected a non-empty square matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn open(base: &Path, p: &Path, field: &str) -> Result<File, SpecError> {
    let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    File::open(&full).map_err(|e| bad(format!("{field}: {}: {e}", full.display())))
}

enum Data {
    Measure(Measure),
    Probs(ProbMatrix),
}

fn exactly_one(src: &DataSource, field: &str) -> Result<(), SpecError> {
    let n = usize::from(src.gaussian.is_some()) + usize::from(src.empirical.is_some()) + usize::from(src.prob_matrix.is_some());
    if n != 1 {
        return Err(bad(format!("{field}: exactly one of gaussian, empirical, prob_matrix is required (found {n})")));
    }
    Ok(())
}

fn load_data(src: &DataSource, base: &Path, field: &str) -> Result<Data, SpecError> {
    exactly_one(src, field)?;
    if let Some(g) = &src.gaussian {
        let m = matrix(&g.covariance, &format!("{field}.gaussian.covariance"))?;
        let cov = PsdMatrix::new(m).map_err(|e| bad(format!("{field}.gaussian.covariance: {e}")))?;
        return Ok(Data::Measure(Measure::gaussian(cov)));
    }
    if let Some(e) = &src.empirical {
        let f = open(base, &e.path, &format!("{field}.empirical.path"))?;
        let m = EmpiricalMeasure::from_csv_reader(f, e.center).map_err(|err| bad(format!("{field}.empirical: {err}")))?;
        return Ok(Data::Measure(Measure::from(m)));
    }
    let p = src.prob_matrix.as_ref().expect("checked above");
    let n = usize::from(p.dense.is_some()) + usize::from(p.dense_path.is_some()) + usize::from(p.triples.is_some());
    if n != 1 {
        return Err(bad(format!("{field}.prob_matrix: exactly one of dense, dense_path, triples is required")));
    }
    let probs = if let Some(rows) = &p.dense {
        ProbMatrix::new(matrix(rows, &format!("{field}.prob_matrix.dense"))?)
    } else if let Some(path) = &p.dense_path {
        ProbMatrix::from_dense_csv(open(base, path, &format!("{field}.prob_matrix.dense_path"))?)
    } else {
        let path = p.triples.as_ref().expect("checked above");
        ProbMatrix::from_triples(open(base, path, &format!("{field}.prob_matrix.triples"))?, p.dim)
    }
    .map_err(|e| bad(format!("{field}.prob_matrix: {e}")))?;
    Ok(Data::Probs(probs))
}

fn measure(spec: &ProblemSpec, base: &Path, second: bool) -> Result<Measure, SpecError> {
    let (src, field) = if second { (&spec.data_2, "data_2") } else { (&spec.data, "data") };
    let src = src.as_ref().ok_or_else(|| bad(format!("missing field `{field}`")))?;
    match load_data(src, base, field)? {
        Data::Measure(m) => Ok(m),
        Data::Probs(_) => Err(bad(format!("{field}: prob_matrix is only valid for matrix_completion"))),
    }
}

fn vector(v: &Option<Vec<f64>>, field: &str) -> Result<DVector<f64>, SpecError> {
    let v = v.as_ref().ok_or_else(|| bad(format!("missing field `{field}`")))?;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(bad(format!("{field}: expected a non-empty vector of finite numbers")));
    }
    Ok(DVector::from_column_slice(v))
}

fn reject(present: bool, field: &str, problem: &str) -> Result<(), SpecError> {
    if present {
        return Err(bad(format!("field `{field}` does not apply to problem `{problem}`")));
    }
    Ok(())
}

/// Resolves data and family parameters; `base` is the spec's directory.
pub fn load(spec: &ProblemSpec, base: &Path, sha256: String) -> Result<LoadedSpec, SpecError> {
    let problem = spec.problem.as_str();
    let instance = match problem {
        "pca" => {
            reject(spec.beta_star.is_some(), "beta_star", problem)?;
            reject(spec.data_2.is_some(), "data_2", problem)?;
            let q = spec.q.ok_or_else(|| bad("missing field `q`"))?;
            ProblemInstance::Pca { data: measure(spec, base, false)?, q }
        }
        "qmle" => {
            let data_x = measure(spec, base, false)?;
            let beta_star = vector(&spec.beta_star, "beta_star")?;
            let name = spec.cumulant.as_deref().ok_or_else(|| bad("missing field `cumulant`"))?;
            let cumulant = CumulantFunction::from_name(name)
                .ok_or_else(|| bad(format!("cumulant: unknown `{name}` (linear, logistic, poisson, gamma)")))?;
            let tangent = match spec.tangent.as_deref().unwrap_or("full") {
                "full" => Subspace::full(data_x.dim()),
                "sparse" => sparse_tangent(&beta_star).map_err(|e| bad(format!("tangent: {e}")))?,
                other => return Err(bad(format!("tangent: unknown `{other}` (full, sparse)"))),
            };
            ProblemInstance::Qmle { data_x, cumulant, beta_star, tangent }
        }
        "phase_retrieval" => {
            let formulation = match spec.formulation.as_deref() {
                None => Formulation::Factored,
                Some(s) => Formulation::from_name(s).ok_or_else(|| bad(format!("formulation: unknown `{s}` (factored, rank_one)")))?,
            };
            if spec.estimation.seed.is_none() {
                return Err(bad("estimation.seed is required for phase_retrieval (randomized optimizer starts)"));
            }
            ProblemInstance::PhaseRetrieval { data_x: measure(spec, base, false)?, beta_star: vector(&spec.beta_star, "beta_star")?, formulation }
        }
        "bilinear" => ProblemInstance::Bilinear {
            data_1: measure(spec, base, false)?,
            data_2: measure(spec, base, true)?,
            beta1_star: vector(&spec.beta_star, "beta_star")?,
            beta2_star: vector(&spec.beta2_star, "beta2_star")?,
        },
        "matrix_completion" => {
            let src = spec.data.as_ref().ok_or_else(|| bad("missing field `data`"))?;
            let probs = match load_data(src, base, "data")? {
                Data::Probs(p) => p,
                Data::Measure(_) => return Err(bad("data: matrix_completion needs a prob_matrix source")),
            };
            ProblemInstance::MatrixCompletion { probs, beta_star: vector(&spec.beta_star, "beta_star")? }
        }
        other => {
            return Err(bad(format!(
                "problem: unknown `{other}` (pca, qmle, phase_retrieval, bilinear, matrix_completion)"
            )))
        }
    };
    instance.validate().map_err(|e| bad(format!("{problem}: {e}")))?;

    let mut optimizer = OptimizerConfig::default();
    if let Some(o) = &spec.estimation.optimizer {
        if let Some(r) = o.restarts {
            optimizer.random_starts = r;
        }
        if let Some(t) = o.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(bad("estimation.optimizer.tol must be positive"));
            }
            optimizer.tol = t;
        }
        if let Some(m) = o.max_iters {
            optimizer.max_iters = m;
        }
    }
    if let Some(s) = spec.estimation.seed {
        optimizer.seed = s;
    }
    let mode = match spec.estimation.mode.as_deref() {
        None => McMode::BranchBound,
        Some(s) => McMode::from_name(s).ok_or_else(|| bad(format!("estimation.mode: unknown `{s}` (exact, branch_bound, greedy)")))?,
    };
    if spec.estimation.mc_samples == Some(0) || spec.estimation.mc_samples == Some(1) {
        return Err(bad("estimation.mc_samples must be at least 2"));
    }
    Ok(LoadedSpec {
        instance,
        optimizer,
        mode,
        seed: spec.estimation.seed,
        mc_samples: spec.estimation.mc_samples,
        sha256,
    })
}

/// Reads, parses and loads a spec file.
pub fn load_path(path: &Path) -> Result<(ProblemSpec, LoadedSpec), SpecError> {
    let (spec, sha) = read_spec(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = load(&spec, &base, sha)?;
    Ok((spec, loaded))
}

/// The data measure of a spec for sampling (`data`, not `data_2`).
pub fn sampling_measure(path: &Path) -> Result<(Measure, Option<u64>), SpecError> {
    let (spec, _) = read_spec(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((measure(&spec, &base, false)?, spec.estimation.seed))
}
