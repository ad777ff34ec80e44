//! Command-line front end for the Otto-engine HEOM solver. Every subcommand
//! reads one JSON experiment description and writes one CSV table; see the
//! repository README for the file formats.

mod commands;
mod config;
mod csvout;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Ctx;
use config::ExperimentConfig;
use csvout::PointFailure;

#[derive(Parser)]
#[command(
    name = "otto-heom",
    version,
    about = "Quantum Otto engine at arbitrary system-bath coupling (HEOM)",
    after_help = "Flags fall back to OTTO_HEOM_CONFIG, OTTO_HEOM_OUT, \
                  OTTO_HEOM_WORKERS and OTTO_HEOM_STRICT when unset."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// JSON experiment description.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// CSV destination, a file or an existing directory (the table is then
    /// named after the subcommand); falls back to the config's `output`,
    /// then stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Worker threads for sweep points (default 1, which is deterministic
    /// and matches single-core machines).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Abort with a nonzero exit and a machine-readable record on stderr at
    /// the first failed point, instead of recording failures per row.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one cycle and report its full energy ledger.
    SingleCycle,
    /// Sweep the system-bath coupling over `sweep.grid`.
    SweepCoupling,
    /// Sweep the interrupted stroke's stop time over `sweep.grid`.
    SweepStopTime,
    /// Sweep the cold splitting over `sweep.grid`; with `sweep.tau_grid`
    /// set, additionally sweep the interrupted stop time at each splitting.
    SweepFrequency,
    /// Time-resolved isochore relaxation with a Bloch-Redfield overlay.
    IsochoreTrace,
    /// Equilibration times against coupling and gap threshold.
    EquilibrationScan,
    /// Bath correlation expansion against direct quadrature.
    BathCheck,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Run(otto_heom::Error),
    Point(PointFailure),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) => f.write_str(m),
            CliError::Run(e) => write!(f, "{e}"),
            CliError::Point(p) => write!(
                f,
                "point {} = {:.6e} (row {}) failed: {}",
                p.axis, p.value, p.index, p.error
            ),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<otto_heom::Error> for CliError {
    fn from(e: otto_heom::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<PointFailure> for CliError {
    fn from(p: PointFailure) -> Self {
        CliError::Point(p)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Run(_) => "run",
            CliError::Point(_) => "point",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON record for scripts driving the binary.
    fn record(&self) -> serde_json::Value {
        let mut rec = serde_json::json!({
            "error": self.to_string(),
            "kind": self.kind(),
        });
        if let CliError::Point(p) = self {
            rec["point"] = serde_json::json!({
                "axis": p.axis,
                "value": p.value,
                "index": p.index,
            });
        }
        rec
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn env_nonempty(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

fn resolve_workers(flag: Option<usize>) -> Result<usize, CliError> {
    let n = match flag {
        Some(n) => n,
        None => match env_nonempty("OTTO_HEOM_WORKERS") {
            Some(v) => v.parse().map_err(|_| {
                CliError::Usage(format!("OTTO_HEOM_WORKERS: expected a positive integer, got {v:?}"))
            })?,
            None => 1,
        },
    };
    if n == 0 {
        return Err(CliError::Usage("--workers: must be at least 1".into()));
    }
    Ok(n)
}

fn resolve_strict(flag: bool) -> bool {
    flag || matches!(env_nonempty("OTTO_HEOM_STRICT").as_deref(), Some("1") | Some("true"))
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .or_else(|| env_nonempty("OTTO_HEOM_CONFIG").map(PathBuf::from))
        .ok_or_else(|| {
            CliError::Usage("missing --config (or OTTO_HEOM_CONFIG) experiment file".into())
        })?;
    let cfg = load_config(&config_path)?;
    let ctx = Ctx {
        cfg: &cfg,
        strict: resolve_strict(cli.strict),
        workers: resolve_workers(cli.workers)?,
    };

    let (name, csv) = match cli.cmd {
        Cmd::SingleCycle => ("single-cycle", commands::single_cycle(&ctx)?),
        Cmd::SweepCoupling => ("sweep-coupling", commands::sweep_coupling(&ctx)?),
        Cmd::SweepStopTime => ("sweep-stop-time", commands::sweep_stop_time(&ctx)?),
        Cmd::SweepFrequency => ("sweep-frequency", commands::sweep_frequency(&ctx)?),
        Cmd::IsochoreTrace => ("isochore-trace", commands::isochore_trace(&ctx)?),
        Cmd::EquilibrationScan => ("equilibration-scan", commands::equilibration_scan(&ctx)?),
        Cmd::BathCheck => ("bath-check", commands::bath_check(&ctx)?),
    };

    let out = cli
        .out
        .or_else(|| env_nonempty("OTTO_HEOM_OUT").map(PathBuf::from))
        .or_else(|| cfg.output.as_ref().map(PathBuf::from));
    match out {
        Some(path) => {
            let path = if path.is_dir() {
                path.join(format!("{name}.csv"))
            } else {
                path
            };
            std::fs::write(&path, csv)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
