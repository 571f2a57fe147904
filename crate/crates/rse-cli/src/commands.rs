//! Subcommand implementations. Each returns the process exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rse_core::mc_graph::{self, McMode, SimpleGraph};
use rse_core::oracles::brute::brute_maxcut;
use rse_core::oracles::{draw_samples, mc_expectation};
use rse_core::problems::{build_report, gauss_h, ProblemInstance, RseReport};
use rse_core::{acceptance, Error, Measure};

use crate::document::{McDocument, MaxCutDocument, Num, Provenance, ReportDocument};
use crate::spec::{self, LoadedSpec, SpecError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_MISMATCH: u8 = 1;
pub const EXIT_ILL_POSED: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_INTERNAL: u8 = 4;

/// Largest graph accepted by `maxcut --verify`.
pub const VERIFY_VERTEX_LIMIT: usize = 12;

#[derive(Debug)]
pub enum CliError {
    Spec(SpecError),
    Core(Error),
    Io(String),
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        Self::Spec(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Spec(e) => write!(f, "invalid spec: {e}"),
            Self::Core(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Spec(_) => EXIT_INPUT,
            Self::Io(_) => EXIT_INTERNAL,
            Self::Core(e) => match e {
                Error::IllPosed(_) => EXIT_ILL_POSED,
                Error::DimensionMismatch { .. }
                | Error::NotSquare(..)
                | Error::NotSymmetric(_)
                | Error::NotPsd(_)
                | Error::NotOrthonormal(_)
                | Error::InvalidWeights(_)
                | Error::InvalidInput(_)
                | Error::CumulantDomain { .. }
                | Error::Unsupported(_)
                | Error::Parse(_) => EXIT_INPUT,
                _ => EXIT_INTERNAL,
            },
        }
    }
}

pub type CliResult = Result<u8, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes pretty JSON to `out`, or to stdout.
fn emit<T: serde::Serialize>(doc: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Io(e.to_string()))?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| io_err(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn provenance(loaded: &LoadedSpec, start: Instant) -> Provenance {
    Provenance {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        spec_sha256: loaded.sha256.clone(),
        seed: loaded.seed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Adds a Monte Carlo estimate of the Gaussian phase objective at the reported minimizer.
fn phase_mc_check(report: &mut RseReport, instance: &ProblemInstance, samples: usize, seed: u64) -> Result<(), CliError> {
    let ProblemInstance::PhaseRetrieval { data_x: Measure::Gaussian(g), beta_star, .. } = instance else {
        report.notes.push("mc_samples ignored: only used for Gaussian phase retrieval".into());
        return Ok(());
    };
    if report.ill_posed {
        return Ok(());
    }
    let Some(v) = report.vectors.get("min_direction") else {
        return Ok(());
    };
    let v = DVector::from_column_slice(v);
    let u = beta_star / beta_star.norm();
    let closed = gauss_h(g.covariance(), &u, &v)?;
    let est = mc_expectation(|x| x.dot(&u).powi(2).min(x.dot(&v).powi(2)), g, samples, seed)?;
    report.diagnostics.insert("objective_closed_form".into(), closed);
    report.diagnostics.insert("objective_mc".into(), est.value);
    report.diagnostics.insert("objective_mc_stderr".into(), est.stderr);
    report.diagnostics.insert("objective_mc_samples".into(), est.samples as f64);
    Ok(())
}

/// `rse`, `reg` and `report`.
pub fn report(command: &str, spec_path: &Path, out: Option<&Path>, mode: Option<McMode>) -> CliResult {
    let start = Instant::now();
    let (_, loaded) = spec::load_path(spec_path)?;
    let mode = mode.unwrap_or(loaded.mode);
    let mut r = build_report(&loaded.instance, &loaded.optimizer, mode)?;
    if let Some(n) = loaded.mc_samples {
        phase_mc_check(&mut r, &loaded.instance, n, loaded.seed.unwrap_or(0))?;
    }
    let doc = ReportDocument::from_report(command, &r, provenance(&loaded, start));
    emit(&doc, out)?;
    Ok(if r.ill_posed { EXIT_ILL_POSED } else { EXIT_OK })
}

fn one_based(pairs: &[(usize, usize)]) -> Vec<[usize; 2]> {
    pairs.iter().map(|&(i, j)| [i + 1, j + 1]).collect()
}

/// `mc-analyze`.
pub fn mc_analyze(spec_path: &Path, out: Option<&Path>, mode: Option<McMode>) -> CliResult {
    let start = Instant::now();
    let (_, loaded) = spec::load_path(spec_path)?;
    let ProblemInstance::MatrixCompletion { probs, beta_star } = &loaded.instance else {
        return Err(SpecError(format!("mc-analyze needs a matrix_completion spec, got `{}`", loaded.instance.family())).into());
    };
    let mode = mode.unwrap_or(loaded.mode);
    let a1 = mc_graph::is_well_posed(probs, beta_star)?;
    let rse = mc_graph::mc_rse(probs, beta_star, mode)?;
    let reg = mc_graph::mc_reg(probs, beta_star)?;
    let witness = mc_graph::mc_kernel_witness(probs, beta_star)?;
    let shift = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    let doc = McDocument {
        command: "mc-analyze".into(),
        well_posed: a1.well_posed,
        bipartite_components: a1.bipartite_components.iter().map(|c| shift(c)).collect(),
        isolated_zeros: shift(&a1.isolated_zeros),
        rse_sq: Num(rse.rse_sq),
        rse: Num(rse.rse),
        kept: one_based(&rse.kept),
        removed: one_based(&rse.removed),
        mode: rse.mode.name().into(),
        certified: rse.certified,
        nodes: rse.nodes,
        lambda_min: Num(reg.lambda_min),
        reg_bracket: [Num(reg.bracket.0), Num(reg.bracket.1)],
        reg_exact: Num(reg.exact),
        unobserved_mass: Num(probs.unobserved_mass()),
        kernel_witness: witness.map(|v| v.iter().map(|x| Num(*x)).collect()),
        provenance: provenance(&loaded, start),
    };
    emit(&doc, out)?;
    Ok(if a1.well_posed { EXIT_OK } else { EXIT_ILL_POSED })
}

/// `maxcut`.
pub fn maxcut(graph_path: &Path, verify: bool, out: Option<&Path>) -> CliResult {
    let text = std::fs::read_to_string(graph_path).map_err(|e| SpecError(format!("{}: {e}", graph_path.display())))?;
    let g = SimpleGraph::parse_edge_list(&text)?;
    if verify && g.n() > VERIFY_VERTEX_LIMIT {
        return Err(Error::LimitExceeded(format!(
            "--verify enumerates cuts; graph has {} vertices (limit {VERIFY_VERTEX_LIMIT})",
            g.n()
        ))
        .into());
    }
    let via = mc_graph::maxcut_via_rse(&g)?;
    let brute = if verify { Some(brute_maxcut(g.n(), g.edges())?) } else { None };
    let doc = MaxCutDocument {
        command: "maxcut".into(),
        vertices: g.n(),
        edges: g.edges().len(),
        maxcut_via_rse: via,
        brute_force: brute,
        agrees: brute.map(|b| b == via),
    };
    emit(&doc, out)?;
    Ok(if doc.agrees == Some(false) { EXIT_MISMATCH } else { EXIT_OK })
}

/// `verify`.
pub fn verify(criterion: Option<u8>) -> CliResult {
    let results = match criterion {
        Some(id) => match acceptance::run_one(id) {
            Some(r) => vec![r],
            None => return Err(SpecError(format!("no acceptance criterion {id} (1 to 10)")).into()),
        },
        None => acceptance::run_all(),
    };
    let mut stdout = std::io::stdout().lock();
    for r in &results {
        writeln!(stdout, "{r}").map_err(|e| CliError::Io(e.to_string()))?;
    }
    let passed = results.iter().filter(|r| r.passed).count();
    writeln!(stdout, "{passed} of {} criteria passed", results.len()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(if passed == results.len() { EXIT_OK } else { EXIT_MISMATCH })
}

/// `sample`.
pub fn sample(spec_path: &Path, n: usize, seed: Option<u64>, out: &Path) -> CliResult {
    let (measure, spec_seed) = spec::sampling_measure(spec_path)?;
    let seed = seed
        .or(spec_seed)
        .ok_or_else(|| SpecError("sample needs --seed or estimation.seed".into()))?;
    let draws = draw_samples(&measure, n, seed)?;
    let file = File::create(out).map_err(|e| io_err(out, e))?;
    let mut w = BufWriter::new(file);
    draws.to_csv_writer(&mut w)?;
    w.flush().map_err(|e| io_err(out, e))?;
    Ok(EXIT_OK)
}
