//! `flatcert`: flatness certification from the command line.
//!
//! Exit codes: 0 success or flat, 1 not flat or a failed check, 2 error or
//! undecided.

mod commands;
mod report;
mod spec;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use flatcert::SampleConfig;
use thiserror::Error;

use report::{digest, render_text, status_name, ConfigBlock, Outcome, Report, TranscriptEntry};
use spec::{AlgebraFile, ManifoldSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("spec error: {0}")]
    Spec(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("computation error: {0}")]
    Module(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "flatcert", version, about = "Curvature, growth vectors and flatness certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Sample points for numeric zero tests.
    #[arg(long, global = true, default_value_t = 32)]
    samples: usize,
    /// Relative tolerance for numeric zero tests.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for sample-point generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the structured report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Include construction intermediates.
    #[arg(long, global = true)]
    transcript: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify that a metric is locally Euclidean.
    RiemFlat { spec: PathBuf },
    /// Gaussian curvature of a surface metric.
    Gauss { spec: PathBuf },
    /// Growth vector at sample points, or at `--at x,y,...`.
    Growth {
        spec: PathBuf,
        #[arg(long)]
        at: Option<String>,
    },
    /// Whether the growth vector is the same at every sample point.
    Equiregular { spec: PathBuf },
    /// Nilpotent symbol algebra at a point.
    Symbol {
        spec: PathBuf,
        #[arg(long)]
        at: Option<String>,
    },
    /// Whether the symbol is the same at every sample point.
    ConstantSymbol { spec: PathBuf },
    /// Certify local isometry to the Engel group.
    EngelFlat { spec: PathBuf },
    /// Certify local isometry to a Heisenberg group.
    ContactFlat { spec: PathBuf },
    /// Certify local isometry to the free (2,3,5) group.
    G235Flat { spec: PathBuf },
    /// Stratified algebra operations.
    Carnot {
        #[command(subcommand)]
        op: CarnotOp,
    },
}

#[derive(Debug, Subcommand)]
enum CarnotOp {
    /// Free nilpotent algebra on M generators of step S.
    Free { m: usize, s: usize },
    /// Group product of two points in exponential coordinates.
    Bch {
        algebra: PathBuf,
        /// Comma-separated rationals.
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(allow_hyphen_values = true)]
        b: String,
    },
    /// Dimension of the graded isometric derivations.
    Isom { algebra: PathBuf },
    /// Dimensions, ranks and d d = 0 for the cochain complex.
    Spencer {
        algebra: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_degree: usize,
    },
    /// Structural checks on an algebra file.
    Validate { algebra: PathBuf },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Runs a command, returning its name, the digested input and the outcome.
fn dispatch(cli: &Cli, cfg: &SampleConfig) -> Result<(String, Vec<u8>, Outcome), CliError> {
    let manifold = |path: &Path| -> Result<(Vec<u8>, ManifoldSpec), CliError> {
        let text = read(path)?;
        let spec = ManifoldSpec::from_json(&text).map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
        Ok((text.into_bytes(), spec))
    };
    let algebra = |path: &Path| -> Result<(Vec<u8>, flatcert::CarnotAlgebra), CliError> {
        let text = read(path)?;
        let file = AlgebraFile::from_json(&text).map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
        Ok((text.into_bytes(), file.algebra()?))
    };
    let run = |name: &str, path: &Path, f: &dyn Fn(&ManifoldSpec) -> Result<Outcome, CliError>| {
        let (bytes, spec) = manifold(path)?;
        let mut outcome = f(&spec)?;
        if !spec.name.is_empty() {
            let title = if spec.description.is_empty() {
                spec.name.clone()
            } else {
                format!("{}: {}", spec.name, spec.description)
            };
            outcome.lines.insert(0, title);
        }
        Ok((name.to_string(), bytes, outcome))
    };
    match &cli.command {
        Command::RiemFlat { spec } => run("riem-flat", spec, &|s| commands::riem_flat(s, cfg)),
        Command::Gauss { spec } => run("gauss", spec, &|s| commands::gauss(s, cfg)),
        Command::Growth { spec, at } => run("growth", spec, &|s| commands::growth(s, cfg, at.as_deref())),
        Command::Equiregular { spec } => run("equiregular", spec, &|s| commands::equiregular(s, cfg)),
        Command::Symbol { spec, at } => run("symbol", spec, &|s| commands::symbol(s, cfg, at.as_deref())),
        Command::ConstantSymbol { spec } => run("constant-symbol", spec, &|s| commands::constant_symbol(s, cfg)),
        Command::EngelFlat { spec } => run("engel-flat", spec, &|s| commands::engel_flat(s, cfg)),
        Command::ContactFlat { spec } => run("contact-flat", spec, &|s| commands::contact_flat(s, cfg)),
        Command::G235Flat { spec } => run("g235-flat", spec, &|s| commands::g235_flat(s, cfg)),
        Command::Carnot { op } => match op {
            CarnotOp::Free { m, s } => {
                Ok(("carnot free".into(), format!("free {m} {s}").into_bytes(), commands::carnot_free(*m, *s)?))
            }
            CarnotOp::Bch { algebra: path, a, b } => {
                let (mut bytes, alg) = algebra(path)?;
                bytes.extend(format!("\n{a}\n{b}").bytes());
                Ok(("carnot bch".into(), bytes, commands::carnot_bch(&alg, a, b)?))
            }
            CarnotOp::Isom { algebra: path } => {
                let (bytes, alg) = algebra(path)?;
                Ok(("carnot isom".into(), bytes, commands::carnot_isom(&alg)?))
            }
            CarnotOp::Spencer { algebra: path, max_degree } => {
                let (bytes, alg) = algebra(path)?;
                Ok(("carnot spencer".into(), bytes, commands::carnot_spencer(&alg, *max_degree)?))
            }
            CarnotOp::Validate { algebra: path } => {
                let (bytes, alg) = algebra(path)?;
                Ok(("carnot validate".into(), bytes, commands::carnot_validate(&alg)?))
            }
        },
    }
}

fn emit(cli: &Cli, report: &Report, lines: &[String]) -> Result<(), CliError> {
    let text = match cli.format {
        Format::Text => render_text(report, lines),
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Module(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    match (&cli.output, cli.format) {
        (Some(path), Format::Structured) => {
            fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source })
        }
        _ => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = SampleConfig { samples: cli.samples, tol: cli.tol, seed: cli.seed };
    let start = Instant::now();
    let outcome = dispatch(&cli, &cfg);
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;
    let (command, bytes, outcome) = match outcome {
        Ok(v) => v,
        Err(e) => {
            eprintln!("flatcert: {e}");
            return ExitCode::from(2);
        }
    };
    let report = Report {
        command,
        input_digest: digest(&bytes),
        config: ConfigBlock { seed: cfg.seed, tolerance: cfg.tol, samples: cfg.samples },
        status: status_name(outcome.status),
        result: outcome.result,
        transcript: if cli.transcript {
            outcome.transcript.into_iter().map(|(name, value)| TranscriptEntry { name, value }).collect()
        } else {
            Vec::new()
        },
        warnings: outcome.warnings,
        timing_ms,
    };
    if let Err(e) = emit(&cli, &report, &outcome.lines) {
        eprintln!("flatcert: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.status.exit_code())
}
