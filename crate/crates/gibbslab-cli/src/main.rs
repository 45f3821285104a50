//! Command-line surface of the laboratory: orbit balls, pressure fits,
//! counting measures, Monte-Carlo averages, boundary measures, Lyapunov
//! data, figures, and an aggregated verification report. Every run writes a
//! manifest and is reproducible byte-for-byte from it.

mod commands;
mod config;
mod manifest;
mod report;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("numeric convergence failure: {0}")]
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

/// Convergence-type library failures map to exit 2, everything else is a
/// configuration error.
pub fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "gibbslab",
    version,
    about = "numerical laboratory for weighted orbital equidistribution over surface groups"
)]
struct Cli {
    /// TOML configuration file (sections of key = value pairs)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (defaults to $OUTPUT_DIR/<command>-<hash> or runs/...)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker-thread cap (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the orbit ball B_R and export it as CSV
    Ball {
        #[arg(short = 'R', long)]
        radius: Option<f64>,
        /// side-alphabet word-length cap
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Least-squares pressure estimate over a radius window
    Pressure {
        #[arg(long)]
        potential: Option<String>,
        /// fit window, e.g. 8:11
        #[arg(long)]
        window: Option<String>,
        #[arg(short = 'R', long)]
        radius: Option<f64>,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Weighted counting measure θ_{F,R}
    Theta {
        #[arg(short = 'R', long)]
        radius: Option<f64>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        rep: Option<String>,
        /// fiber base point, `re,im` or `inf`
        #[arg(short = 'x', long)]
        x: Option<String>,
    },
    /// Monte-Carlo weighted ball average
    BallAverage {
        #[arg(short = 'R', long)]
        radius: Option<f64>,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        rep: Option<String>,
        #[arg(short = 'x', long)]
        x: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte-Carlo weighted sphere average
    SphereAverage {
        #[arg(short = 'R', long)]
        radius: Option<f64>,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        rep: Option<String>,
        #[arg(short = 'x', long)]
        x: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Ball-truncated boundary measure with angle histogram
    Ledrappier {
        #[arg(short = 'R', long)]
        radius: Option<f64>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        window: Option<String>,
    },
    /// Orbital estimate of the top Lyapunov exponent
    Lyapunov {
        #[arg(short = 'R', long)]
        radius: Option<f64>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        rep: Option<String>,
    },
    /// Lyapunov section estimates at random tangent vectors
    Section {
        #[arg(long)]
        rep: Option<String>,
        /// ray depth at which the estimator starts
        #[arg(short = 'T', long)]
        depth: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short = 'x', long)]
        x: Option<String>,
    },
    /// Orbit scatter of a fiber point (limit set picture)
    LimitSet {
        #[arg(short = 'R', long)]
        radius: Option<f64>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        rep: Option<String>,
        #[arg(short = 'x', long)]
        x: Option<String>,
    },
    /// Discrete-cocycle basin diagnostic
    Basin {
        /// demo2 | diag2 | file:<path.json>
        #[arg(long)]
        matrices: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Aggregated desk-scale verification suite
    Report {
        #[arg(short = 'R', long)]
        radius: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("gibbslab: cannot size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let cfg = match config::Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gibbslab: {e}");
            return ExitCode::from(1);
        }
    };
    let result = commands::dispatch(cli.command, cfg, cli.out.as_deref());
    match result {
        Ok(dir) => {
            println!("outputs written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gibbslab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
