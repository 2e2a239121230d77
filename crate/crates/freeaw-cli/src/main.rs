//! Command-line front end for the freeaw library: functional evaluation,
//! identity-check suites, phase-diagram sweeps, stationarity simulation,
//! Poisson-regime checks, and the width-series identity. Output is CSV or
//! JSON with a full parameter echo, so seeded runs reproduce byte for byte.

mod checks;
mod cmds;
mod kernel;
mod phase;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Default tolerances and sizes, each overridable by a flag.
pub mod defaults {
    pub const SEED: u64 = 12345;
    pub const QUAD_REL_TOL: f64 = 1e-10;
    pub const EXTENSION_TOL: f64 = 1e-9;
    pub const REDUCTION_TOL: f64 = 1e-10;
    pub const SWAP_TOL: f64 = 1e-7;
    pub const RECURRENCE_TOL: f64 = 1e-6;
    pub const TRIANGLE_TOL: f64 = 1e-6;
    pub const INTEGRAL_TOL: f64 = 1e-6;
    pub const SIM_CAP: u64 = 30;
    pub const SERIES_TRUNCATE: u32 = 60;
}

#[derive(Parser)]
#[command(
    name = "freeaw",
    version = freeaw::VERSION,
    about = "Free Askey-Wilson functionals and strip last-passage percolation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the functional on a kernel; prints a JSON record.
    Eval(cmds::EvalArgs),
    /// Run an identity-check suite; exits 0 only if every case passes.
    Check(checks::CheckArgs),
    /// Sweep the boundary-parameter plane, comparing predicted and
    /// numerically measured densities; prints CSV.
    #[command(name = "phase-diagram")]
    PhaseDiagram(phase::PhaseArgs),
    /// One-step stationarity experiment with a zero-row negative control;
    /// prints a JSON record.
    Simulate(cmds::SimulateArgs),
    /// Poisson-regime generating ratio against its process limit; prints a
    /// JSON record.
    Poisson(cmds::PoissonArgs),
    /// Width series of one-time generating functions against the closed
    /// form in the size variable; prints a JSON record.
    Series(cmds::SeriesArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Eval(args) => cmds::eval(args),
        Cmd::Check(args) => checks::run(args),
        Cmd::PhaseDiagram(args) => phase::run(args),
        Cmd::Simulate(args) => cmds::simulate(args),
        Cmd::Poisson(args) => cmds::poisson(args),
        Cmd::Series(args) => cmds::series(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let code = exit_code(&err);
            let report = serde_json::json!({
                "error": error_kind(&err),
                "message": format!("{err:#}"),
            });
            eprintln!("{report}");
            ExitCode::from(code)
        }
    }
}

/// 1 for runtime failures on valid input, 2 for invalid or unsupported
/// input. Check-suite failures return Ok(1) and never reach this path.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<freeaw::Error>() {
        Some(freeaw::Error::QuadratureFailure { .. }) => 1,
        Some(_) => 2,
        None => {
            if err.downcast_ref::<std::io::Error>().is_some() {
                1
            } else {
                2
            }
        }
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    match err.downcast_ref::<freeaw::Error>() {
        Some(freeaw::Error::Constraint(_)) => "constraint",
        Some(freeaw::Error::Unsupported(_)) => "unsupported",
        Some(freeaw::Error::QuadratureFailure { .. }) => "quadrature-failure",
        Some(freeaw::Error::SizeGuard(_)) => "size-guard",
        Some(freeaw::Error::NonFinite(_)) => "non-finite",
        None => {
            if err.downcast_ref::<std::io::Error>().is_some() {
                "io"
            } else {
                "invalid-input"
            }
        }
    }
}

/// Writes a finished document to `--out` or stdout.
pub fn emit(out: &Option<PathBuf>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| anyhow::Error::new(e).context(format!("writing {}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Serializes a JSON document with a trailing newline.
pub fn json_doc<T: serde::Serialize>(doc: &T) -> anyhow::Result<String> {
    Ok(format!("{}\n", serde_json::to_string_pretty(doc)?))
}

/// Worker count for grid sweeps: `FREEAW_THREADS` when set (validated to
/// 1..=64), otherwise the available parallelism capped at 8.
pub fn thread_count() -> anyhow::Result<usize> {
    match std::env::var("FREEAW_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(8)),
        Err(e) => Err(anyhow::anyhow!("FREEAW_THREADS is not valid unicode: {e}")),
        Ok(raw) => {
            let n: usize = raw
                .trim()
                .parse()
                .map_err(|_| anyhow::anyhow!("FREEAW_THREADS must be an integer, got {raw:?}"))?;
            if !(1..=64).contains(&n) {
                anyhow::bail!("FREEAW_THREADS must lie in 1..=64, got {n}");
            }
            Ok(n)
        }
    }
}
