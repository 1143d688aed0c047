//! The `orex` command line: `estimate`, `recover`, `validate` and `generate`.
//!
//! Reports are JSON on stdout (or `--out`); errors are a JSON object on
//! stderr. Exit codes: 0 ok, 1 failed check, 2 schema, 3 degenerate or
//! infeasible model, 4 inconsistent data.

mod commands;
pub mod schema;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::OrexError;
use crate::model::Tolerances;

pub use commands::{estimate, generate, recover, validate, Check, ValidateReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_INCONSISTENT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "orex", version, about = "Worst-case optimal recovery for two-fidelity observation problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct TolFlags {
    /// Relative singular-value threshold for rank decisions.
    #[arg(long, default_value_t = 1e-10, global = true)]
    pub tol_rank: f64,
    /// Slack for matrix inequality tests.
    #[arg(long, default_value_t = 1e-9, global = true)]
    pub tol_eig: f64,
    /// Tolerance of exactness certificates.
    #[arg(long, default_value_t = 1e-7, global = true)]
    pub tol_cert: f64,
}

impl TolFlags {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { rank: self.tol_rank, eig: self.tol_eig, cert: self.tol_cert, ..Tolerances::default() }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal weights for a functional of a multi-level approximability model.
    Estimate {
        file: PathBuf,
        #[command(flatten)]
        tol: TolFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the quantity of interest for a two-ellipsoid problem.
    Recover {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Local)]
        mode: Mode,
        /// Include the matrix of the optimal linear map (global mode).
        #[arg(long)]
        emit_map: bool,
        #[command(flatten)]
        tol: TolFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check solver certificates against sampling oracles.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tol: TolFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a problem file for one of the stylized settings.
    Generate {
        /// Output path, `-` for stdout.
        file: PathBuf,
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dimension (vertices for graph signals, basis size for functionals).
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Put the low-fidelity discrepancy on its constraint boundary (digital twin).
        #[arg(long)]
        s_active: bool,
        /// Omit the data block.
        #[arg(long)]
        no_data: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Global,
    Local,
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    DigitalTwin,
    Generic,
    GraphSignal,
    DiskSlice,
    ConstantBasis,
    RandomFunctional,
}

/// Exit code and label for a library error.
pub fn classify(e: &OrexError) -> (i32, &'static str) {
    match e {
        OrexError::InvalidInput(_) => (EXIT_SCHEMA, "schema"),
        OrexError::ModelDegeneracy(_) => (EXIT_DEGENERATE, "model-degeneracy"),
        OrexError::EndpointDegenerate(_) => (EXIT_DEGENERATE, "endpoint-degenerate"),
        OrexError::InfeasibleModel(_) => (EXIT_DEGENERATE, "infeasible-model"),
        OrexError::InconsistentData(_) => (EXIT_INCONSISTENT, "inconsistent-data"),
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

fn emit(text: &str, out: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<(), OrexError> {
    match out {
        Some(p) if p.as_os_str() != "-" => std::fs::write(p, format!("{text}\n"))
            .map_err(|e| OrexError::InvalidInput(format!("cannot write {}: {e}", p.display()))),
        _ => writeln!(stdout, "{text}").map_err(|e| OrexError::InvalidInput(format!("cannot write output: {e}"))),
    }
}

fn read(path: &PathBuf) -> Result<String, OrexError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
            .map_err(|e| OrexError::InvalidInput(format!("cannot read stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| OrexError::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, OrexError> {
    match &cli.command {
        Command::Estimate { file, tol, out } => {
            let report = estimate(&read(file)?, tol.tolerances())?;
            emit(&report, out.as_ref(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Recover { file, mode, emit_map, tol, out } => {
            let report = recover(&read(file)?, *mode, *emit_map, tol.tolerances())?;
            emit(&report, out.as_ref(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Validate { file, budget, seed, tol, out } => {
            let report = validate(&read(file)?, *budget, *seed, tol.tolerances())?;
            let text = serde_json::to_string_pretty(&report).expect("reports always serialize");
            emit(&text, out.as_ref(), stdout)?;
            Ok(if report.passed { EXIT_OK } else { EXIT_CHECK })
        }
        Command::Generate { file, kind, seed, n, s_active, no_data } => {
            let text = generate(*kind, *seed, *n, *s_active, !*no_data)?;
            emit(&text, Some(file), stdout)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_SCHEMA;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let (code, label) = classify(&e);
            let report = ErrorReport { error: label, message: e.to_string() };
            let _ = writeln!(stderr, "{}", serde_json::to_string(&report).expect("reports always serialize"));
            code
        }
    }
}
