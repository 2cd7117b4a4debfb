//! Command-line front end: `gen`, `train`, `annotate`, `crossval`, `grid`, `kappa`.
//!
//! Exit status is 0 on success, 2 for argument or validation failures and 1
//! for runtime failures.

mod commands;
mod config;

pub use config::{parse_override, read_config_map, RunConfig};

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "acdrl", version, about = "Clause annotation with least-squares policy iteration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Config file(s): one flat JSON object per line, merged in order
    #[arg(long, value_name = "FILE")]
    pub config: Vec<PathBuf>,
    /// Top-level random seed (required for commands that sample)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: logical cores)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Override any config key, e.g. --set gamma=0.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        num_documents: Option<usize>,
    },
    /// Train a policy (rl) or the supervised baseline
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        /// rl or baseline
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        n_l: Option<usize>,
        #[arg(long)]
        n_c: Option<usize>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        hash_dim: Option<usize>,
    },
    /// Annotate a corpus with a trained model
    Annotate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Round budget J
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        n_l: Option<usize>,
        #[arg(long)]
        n_c: Option<usize>,
    },
    /// Repeated grouped k-fold cross-validation
    Crossval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        /// rl, baseline or both
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        n_l: Option<usize>,
        #[arg(long)]
        n_c: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Cross-validate every HA window in a grid
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        /// rl or baseline
        #[arg(long)]
        method: Option<String>,
        /// Inclusive n_l range, e.g. 0..9
        #[arg(long)]
        grid_n_l: Option<String>,
        /// Inclusive n_c range, e.g. 0..5
        #[arg(long)]
        grid_n_c: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Fleiss' kappa of an items × categories count matrix
    Kappa {
        #[command(flatten)]
        common: Common,
        /// One JSON array of category counts per line
        #[arg(long, value_name = "FILE")]
        ratings: Option<PathBuf>,
    },
}

fn put<T: serde::Serialize>(map: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.to_string(), serde_json::to_value(v).expect("flag value serializes"));
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen { .. } => "gen",
            Command::Train { .. } => "train",
            Command::Annotate { .. } => "annotate",
            Command::Crossval { .. } => "crossval",
            Command::Grid { .. } => "grid",
            Command::Kappa { .. } => "kappa",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Gen { common, .. }
            | Command::Train { common, .. }
            | Command::Annotate { common, .. }
            | Command::Crossval { common, .. }
            | Command::Grid { common, .. }
            | Command::Kappa { common, .. } => common,
        }
    }

    /// Merges config files, then `--set` overrides, then dedicated flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let common = self.common();
        let mut map = Map::new();
        for path in &common.config {
            map.extend(read_config_map(path)?);
        }
        for o in &common.overrides {
            let (k, v) = parse_override(o)?;
            map.insert(k, v);
        }
        put(&mut map, "seed", common.seed);
        put(&mut map, "out", common.out.clone());
        put(&mut map, "jobs", common.jobs);
        match self {
            Command::Gen { num_documents, .. } => put(&mut map, "num_documents", *num_documents),
            Command::Train {
                corpus,
                method,
                n_l,
                n_c,
                episodes,
                gamma,
                hash_dim,
                ..
            } => {
                put(&mut map, "corpus", corpus.clone());
                put(&mut map, "method", method.clone());
                put(&mut map, "n_l", *n_l);
                put(&mut map, "n_c", *n_c);
                put(&mut map, "episodes", *episodes);
                put(&mut map, "gamma", *gamma);
                put(&mut map, "hash_dim", *hash_dim);
            }
            Command::Annotate {
                corpus,
                model,
                rounds,
                n_l,
                n_c,
                ..
            } => {
                put(&mut map, "corpus", corpus.clone());
                put(&mut map, "model", model.clone());
                put(&mut map, "rounds", *rounds);
                put(&mut map, "n_l", *n_l);
                put(&mut map, "n_c", *n_c);
            }
            Command::Crossval {
                corpus,
                method,
                n_l,
                n_c,
                k,
                repeats,
                episodes,
                rounds,
                ..
            } => {
                put(&mut map, "corpus", corpus.clone());
                put(&mut map, "method", method.clone());
                put(&mut map, "n_l", *n_l);
                put(&mut map, "n_c", *n_c);
                put(&mut map, "k", *k);
                put(&mut map, "repeats", *repeats);
                put(&mut map, "episodes", *episodes);
                put(&mut map, "rounds", *rounds);
            }
            Command::Grid {
                corpus,
                method,
                grid_n_l,
                grid_n_c,
                k,
                repeats,
                episodes,
                ..
            } => {
                put(&mut map, "corpus", corpus.clone());
                put(&mut map, "method", method.clone());
                put(&mut map, "grid_n_l", grid_n_l.clone());
                put(&mut map, "grid_n_c", grid_n_c.clone());
                put(&mut map, "k", *k);
                put(&mut map, "repeats", *repeats);
                put(&mut map, "episodes", *episodes);
            }
            Command::Kappa { ratings, .. } => put(&mut map, "ratings", ratings.clone()),
        }
        let cfg = RunConfig::from_map(map)?;
        if let Some(recorded) = &cfg.command {
            if recorded != self.name() {
                return Err(crate::error::Error::invalid(
                    "command",
                    format!("config was written by `{recorded}`, not `{}`", self.name()),
                ));
            }
        }
        Ok(cfg)
    }
}

/// Parses the process arguments, runs the command and returns the exit status.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.command.resolve()?;
    let jobs = match cfg.jobs {
        Some(0) => return Err(crate::error::Error::invalid("jobs", "must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| crate::error::Error::invalid("jobs", e.to_string()))?;
    pool.install(|| commands::dispatch(&cli.command, cfg))
}
