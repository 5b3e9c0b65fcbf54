//! `intmaps`: command-line runs of the interval-map toolkit.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 failed validation or bad
//! parameter, 64 malformed configuration.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;
use output::OutDir;

#[derive(Debug, Parser)]
#[command(name = "intmaps", version, about = "Numerical experiments on intermittent interval maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    /// Map family, e.g. `pm:s=1` or `geo:s=1,r=0.5`.
    #[arg(long, global = true)]
    map: Option<String>,
    /// Depth of the refined partition.
    #[arg(long, global = true)]
    kmax: Option<String>,
    /// Cylinder depth.
    #[arg(long, global = true)]
    depth: Option<String>,
    #[arg(long, global = true)]
    ensemble: Option<String>,
    #[arg(long, global = true)]
    nmax: Option<String>,
    #[arg(long, global = true)]
    epsilon: Option<String>,
    /// Ulam grid size (also the validation grid).
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Further `key=value` overrides.
    #[arg(long = "set-key", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the map axioms on sampled grids.
    Validate,
    /// Export the b-sequence and cylinder statistics.
    Partition {
        /// Itinerary word for a cylinder query, e.g. `1,-2,-1`.
        #[arg(long, allow_hyphen_values = true)]
        word: Option<String>,
    },
    /// Empirical distortion constants and the bounded-distortion check on `I_{-j}`.
    Distortion {
        #[arg(long)]
        trials: Option<String>,
    },
    /// Intersection profile of forward images of a set.
    Exactness {
        /// JSON array of `[lo, hi]` pairs.
        #[arg(long)]
        set: Option<String>,
    },
    /// Mean square displacement of a quasi-lift.
    Diffusion {
        /// `default`, `halves`, `zero`, `one` or `offsets:0,1,...`.
        #[arg(long)]
        lift: Option<String>,
    },
    /// Ulam approximation of the invariant density.
    Density,
    /// First-return times to `J`.
    Returns {
        #[arg(long)]
        cap: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Partition { .. } => "partition",
            Command::Distortion { .. } => "distortion",
            Command::Exactness { .. } => "exactness",
            Command::Diffusion { .. } => "diffusion",
            Command::Density => "density",
            Command::Returns { .. } => "returns",
        }
    }
}

/// Problems with the configuration itself.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn build_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let c = &cli.common;
    if let Some(path) = &c.config {
        cfg.load_file(path)?;
    }
    let flags = [
        ("seed", &c.seed),
        ("out", &c.out),
        ("map", &c.map),
        ("kmax", &c.kmax),
        ("depth", &c.depth),
        ("ensemble", &c.ensemble),
        ("nmax", &c.nmax),
        ("epsilon", &c.epsilon),
        ("grid", &c.grid),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    for kv in &c.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow::anyhow!("expected KEY=VALUE, got `{kv}`"))?;
        cfg.set(k.trim(), v)?;
    }
    let specific = match &cli.command {
        Command::Partition { word } => word.as_ref().map(|w| ("word", w)),
        Command::Distortion { trials } => trials.as_ref().map(|t| ("trials", t)),
        Command::Exactness { set } => set.as_ref().map(|s| ("set", s)),
        Command::Diffusion { lift } => lift.as_ref().map(|l| ("lift", l)),
        Command::Returns { cap } => cap.as_ref().map(|c| ("cap", c)),
        _ => None,
    };
    if let Some((k, v)) = specific {
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 64;
        }
        if let Some(e) = cause.downcast_ref::<intmaps::Error>() {
            return match e {
                intmaps::Error::InvalidParameter(_) | intmaps::Error::TrivialParsing => 2,
                intmaps::Error::Parse(_) => 64,
                _ => 1,
            };
        }
    }
    1
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: BTreeMap<String, String>,
    files: &'a [String],
    exit_code: u8,
    wall_time_seconds: f64,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var("INTMAPS_THREADS") {
        let n: usize = value
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("INTMAPS_THREADS must be a positive integer, got `{value}`")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli, started: Instant) -> anyhow::Result<u8> {
    configure_threads()?;
    let cfg = build_config(cli).map_err(|e| ConfigError(format!("{e:#}")))?;
    let mut out = OutDir::create(&cfg.out)?;
    let result = match &cli.command {
        Command::Validate => commands::validate(&cfg, &mut out),
        Command::Partition { .. } => commands::partition(&cfg, &mut out),
        Command::Distortion { .. } => commands::distortion(&cfg, &mut out),
        Command::Exactness { .. } => commands::exactness(&cfg, &mut out),
        Command::Diffusion { .. } => commands::diffusion(&cfg, &mut out),
        Command::Density => commands::density(&cfg, &mut out),
        Command::Returns { .. } => commands::returns(&cfg, &mut out),
    };
    let code = match &result {
        Ok(code) => *code,
        Err(e) => exit_code(e),
    };
    let files = out.written().to_vec();
    let manifest = Manifest {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.echo().into_iter().collect(),
        files: &files,
        exit_code: code,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    out.json("manifest.json", &manifest)?;
    result
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = Cli::parse();
    match run(&cli, started) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
