//! `rse-toolkit`: RSE and REG reports from JSON problem specs.

mod commands;
mod document;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rse_core::mc_graph::McMode;

#[derive(Parser)]
#[command(name = "rse-toolkit", version, about = "Radius of statistical efficiency and regularity reports")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "RSE_TOOLKIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    BranchBound,
    Greedy,
}

impl From<Mode> for McMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => McMode::Exact,
            Mode::BranchBound => McMode::BranchBound,
            Mode::Greedy => McMode::Greedy,
        }
    }
}

#[derive(clap::Args)]
struct SpecArgs {
    /// Problem spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Matrix completion search mode, overriding the spec.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Subcommand)]
enum Command {
    /// Report with the RSE of the instance.
    Rse(SpecArgs),
    /// Report with the REG of the instance.
    Reg(SpecArgs),
    /// Full RSE / REG report with the product and its predicted bounds.
    Report(SpecArgs),
    /// Matrix completion: well-posedness, witness support and REG bracket.
    McAnalyze(SpecArgs),
    /// MaxCut of an edge list (1-based `i j` lines) through the completion reduction.
    Maxcut {
        graph: PathBuf,
        /// Compare against exhaustive enumeration (at most 12 vertices).
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long)]
        criterion: Option<u8>,
    },
    /// Draw i.i.d. samples from the spec's data measure as CSV.
    Sample {
        #[arg(long)]
        spec: PathBuf,
        #[arg(short = 'n', long = "samples")]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> commands::CliResult {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| commands::CliError::Io(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Rse(a) => commands::report("rse", &a.spec, a.out.as_deref(), a.mode.map(Into::into)),
        Command::Reg(a) => commands::report("reg", &a.spec, a.out.as_deref(), a.mode.map(Into::into)),
        Command::Report(a) => commands::report("report", &a.spec, a.out.as_deref(), a.mode.map(Into::into)),
        Command::McAnalyze(a) => commands::mc_analyze(&a.spec, a.out.as_deref(), a.mode.map(Into::into)),
        Command::Maxcut { graph, verify, out } => commands::maxcut(&graph, verify, out.as_deref()),
        Command::Verify { criterion } => commands::verify(criterion),
        Command::Sample { spec, n, seed, out } => commands::sample(&spec, n, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_INPUT } else { commands::EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("rse-toolkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
