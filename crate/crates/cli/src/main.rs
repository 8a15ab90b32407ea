//! `gmac`: batch front end for constellation optimization, code design,
//! construction and BER simulation on the two-user Gaussian MAC.
//!
//! Every subcommand reads a JSON config, writes its results plus a
//! `manifest.json` into the output directory and exits with 0 on success,
//! 1 on a usage error and 2 on a numerical or infeasibility failure.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use config::{
    load, CapacityConfig, ConstructConfig, DesignFileConfig, OptimizeConfig, SimulateConfig,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Failure(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "failed: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gmac",
    version,
    about = "Two-user Gaussian MAC: shaping, LDPC design and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, short)]
    out: PathBuf,
    /// Reduced budgets for smoke runs.
    #[arg(long)]
    quick: bool,
    /// Maximum worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sum and per-level capacities over an SNR grid.
    Capacity(Common),
    /// Numerically optimize both users' constellations.
    OptimizeConstellation(Common),
    /// LP design of the degree distributions of every level.
    Design(Common),
    /// PEG graphs and encoders from a design bundle.
    Construct {
        #[command(flatten)]
        common: Common,
        /// Blocklength; overrides the config.
        #[arg(long)]
        n: Option<usize>,
        /// Seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte-Carlo BER sweep.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config_hash: String,
    seed: Option<u64>,
    tool_version: &'static str,
    started_unix: u64,
    finished_unix: u64,
    outputs: Vec<String>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn hash<T: Serialize>(cfg: &T) -> String {
    let bytes = serde_json::to_vec(cfg).expect("serializable config");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Capacity(c) => ("capacity", c),
        Command::OptimizeConstellation(c) => ("optimize-constellation", c),
        Command::Design(c) => ("design", c),
        Command::Construct { common, .. } => ("construct", common),
        Command::Simulate { common, .. } => ("simulate", common),
    };
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let base = base_dir(&common.config);
    let out = &common.out;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Failure(format!("creating {}: {e}", out.display())))?;
    let started = now();
    let (config_hash, seed, result) = match &cli.command {
        Command::Capacity(_) => {
            let cfg: CapacityConfig = load(&common.config)?;
            (hash(&cfg), None, commands::capacity(&cfg, &base, out))
        }
        Command::OptimizeConstellation(_) => {
            let cfg: OptimizeConfig = load(&common.config)?;
            (
                hash(&(&cfg, common.quick)),
                None,
                commands::optimize(&cfg, common.quick, out),
            )
        }
        Command::Design(_) => {
            let cfg: DesignFileConfig = load(&common.config)?;
            (hash(&cfg), None, commands::design(&cfg, &base, out))
        }
        Command::Construct { n, seed, .. } => {
            let mut cfg: ConstructConfig = load(&common.config)?;
            if common.quick {
                cfg.n = 2000;
            }
            if let Some(n) = n {
                cfg.n = *n;
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            (
                hash(&cfg),
                Some(cfg.seed),
                commands::construct(&cfg, &base, out),
            )
        }
        Command::Simulate { seed, .. } => {
            let mut cfg: SimulateConfig = load(&common.config)?;
            if common.quick {
                cfg.sim.frames = cfg.sim.frames.min(20);
            }
            if let Some(s) = seed {
                cfg.sim.seed = *s;
            }
            if common.threads.is_some() {
                cfg.sim.threads = common.threads;
            }
            (
                hash(&cfg),
                Some(cfg.sim.seed),
                commands::simulate(&cfg, &base, out),
            )
        }
    };
    let (outputs, err) = match result {
        Ok(o) => (o, None),
        Err(e) => (Vec::new(), Some(e)),
    };
    let manifest = RunManifest {
        command: name,
        config_hash,
        seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: now(),
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serializable manifest") + "\n";
    std::fs::write(out.join("manifest.json"), text)
        .map_err(|e| CliError::Failure(format!("writing manifest: {e}")))?;
    err.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gmac: {e}");
            ExitCode::from(e.code())
        }
    }
}
