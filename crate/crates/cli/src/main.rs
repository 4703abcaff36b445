use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "homog", version, about = "Periodic homogenization experiments for stable-like operators")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

/// Flags shared by every verb.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config (TOML). `dump-env` also accepts a bare environment table.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; defaults to the config's `out` entry, then `out`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for concurrent rows.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Comma-separated seeds replacing the config's list.
    #[arg(long, value_name = "LIST")]
    pub seed_list: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Scale; defaults to the smallest ε of the ladder.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    pub n: Option<usize>,
    /// Defaults to the first seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub theta0: Option<f64>,
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long)]
    pub max_stages: Option<usize>,
    #[arg(long)]
    pub stage_tol: Option<f64>,
    #[arg(long)]
    pub linear_tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Write μ, H and b of a sampled environment on a grid over one cell.
    DumpEnv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Points per axis on the cell.
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Solve one resolvent problem and verify the a-priori estimates.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: SolveArgs,
    },
    /// Solve the effective equation by both routes.
    Limit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Convergence study over the ε ladder and seeds.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// Spatial averages of μ² against the cell average.
    Birkhoff {
        #[command(flatten)]
        common: Common,
    },
    /// Decay of the drift pairing along the ladder.
    DriftDecay {
        #[command(flatten)]
        common: Common,
    },
    /// All checks, per-check CSVs, plot data and a summary.
    Suite {
        #[command(flatten)]
        common: Common,
    },
}

fn out_dir(common: &Common, configured: Option<&Path>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| configured.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.verb {
        Verb::DumpEnv { common, seed, n } => commands::dump_env(&common, seed, n),
        Verb::Solve { common, args } => commands::solve(&common, &args),
        Verb::Limit { common, lambda, n } => commands::limit(&common, lambda, n),
        Verb::Converge { common } => commands::converge(&common),
        Verb::Birkhoff { common } => commands::birkhoff(&common),
        Verb::DriftDecay { common } => commands::drift_decay(&common),
        Verb::Suite { common } => commands::suite(&common),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
