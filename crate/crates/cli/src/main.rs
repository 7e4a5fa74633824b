//! `kmpflow`: runs the simulations and checks, writing CSV/JSONL files and
//! one manifest per run into the output directory.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 configuration or
//! runtime error (reported as one JSON line on stderr).

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::Settings;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl From<kmpflow::Error> for CliError {
    fn from(e: kmpflow::Error) -> Self {
        match e {
            kmpflow::Error::InvalidParam { .. } | kmpflow::Error::UnstableGrid { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Event-driven KMP from an initial profile, with snapshots.
    SimulateKmp,
    /// Quenched kernel rows and a composition check.
    KernelFlow,
    /// Both sides of the KMP / dual-KMP duality relation.
    DualityCheck,
    /// Gamma(α) product stationarity on a ring.
    StationarityCheck,
    /// Annealed k-point kernel moment.
    Kpoint,
    /// Rescaled density field samples and aggregates.
    FieldScan,
    /// γ_ε² from the exact covariance terms.
    GammaExact,
    /// γ_ε² and covariance terms by Monte Carlo.
    GammaMc,
    /// Two-walker difference kernel and π-invariance sums.
    Pdif,
    /// Two-point moment table of the discretized SHE.
    SheMoments,
    /// Replicas of the explicit SHE scheme paired with φ.
    SheSimulate,
    /// Beta random walk states and the annealed profile.
    BetaRwre,
    /// Stationarity of the inhomogeneous segment model.
    SegmentStationarity,
    /// Brick-wall KMP against the Beta walk on shared draws.
    BrickwallCoupling,
    /// Haar circuit norms against the walk, and split statistics.
    HaarCircuit,
    /// Growth of log-energy variance along rays (exploratory).
    ConjectureProbe,
    /// The full acceptance suite.
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SimulateKmp => "simulate-kmp",
            Command::KernelFlow => "kernel-flow",
            Command::DualityCheck => "duality-check",
            Command::StationarityCheck => "stationarity-check",
            Command::Kpoint => "kpoint",
            Command::FieldScan => "field-scan",
            Command::GammaExact => "gamma-exact",
            Command::GammaMc => "gamma-mc",
            Command::Pdif => "pdif",
            Command::SheMoments => "she-moments",
            Command::SheSimulate => "she-simulate",
            Command::BetaRwre => "beta-rwre",
            Command::SegmentStationarity => "segment-stationarity",
            Command::BrickwallCoupling => "brickwall-coupling",
            Command::HaarCircuit => "haar-circuit",
            Command::ConjectureProbe => "conjecture-probe",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kmpflow", version, about = "Quenched KMP flows: simulations, scans and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key = value file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Decimal or 0x-hex.
    #[arg(long, global = true, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eps: Option<String>,
    /// System size N, or a comma-separated list for field-scan.
    #[arg(long = "bigN", global = true, allow_hyphen_values = true)]
    big_n: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    time: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    replicas: Option<String>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, allow_hyphen_values = true)]
    workers: Option<String>,
    /// `kind[:center[:width]]`, kind one of gaussian-bump, cosine-bump, polynomial-bump.
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Further settings as key=value (repeatable), e.g. `--set sites=8`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", allow_hyphen_values = true)]
    set: Vec<String>,
    /// verify-all: replace the γ² target 1/(4α) by 1/(3α).
    #[arg(long, global = true)]
    fault_gamma: bool,
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let mut s = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("config: cannot read {}: {e}", p.display())))?;
            Settings::from_file_text(&text)?
        }
        None => Settings::default(),
    };
    let flags = [
        ("seed", &cli.seed),
        ("alpha", &cli.alpha),
        ("eps", &cli.eps),
        ("bigN", &cli.big_n),
        ("time", &cli.time),
        ("replicas", &cli.replicas),
        ("out", &cli.out),
        ("workers", &cli.workers),
        ("phi", &cli.phi),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, v)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("set: expected KEY=VALUE, got {kv:?}")))?;
        s.set(k.trim(), v.trim())?;
    }
    if cli.fault_gamma {
        s.set("fault-gamma", "true")?;
    }
    Ok(s)
}

fn report(e: &CliError) -> ExitCode {
    let (kind, msg) = match e {
        CliError::Config(m) => ("config", m),
        CliError::Runtime(m) => ("runtime", m),
    };
    eprintln!("{}", serde_json::json!({"error": kind, "message": msg}));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => e.exit(),
        Err(e) if e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => e.exit(),
        Err(e) => return report(&CliError::Config(e.to_string().trim().to_string())),
    };
    let mut s = match settings(&cli) {
        Ok(s) => s,
        Err(e) => return report(&e),
    };
    match commands::run(cli.command, &mut s) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => report(&e),
    }
}
