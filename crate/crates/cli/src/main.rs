//! `stargraph`: spectral statistics experiments for quantum star graphs.
//!
//! Exit status: 0 on success, 1 when a computation fails, 2 for usage
//! errors, 3 when a preset or self-check comparison does not pass.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "stargraph", version, about = "Value distributions of quantum star graph spectra")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for length generation and sampling
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads; defaults to the available parallelism
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Config file with keys seed, v, l_bar, delta_l, sample_count
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Number of bonds
    #[arg(long, global = true)]
    pub v: Option<usize>,

    /// Lower edge of the bond length box
    #[arg(long = "l-bar", global = true)]
    pub l_bar: Option<f64>,

    /// Width of the bond length box
    #[arg(long = "delta-l", global = true)]
    pub delta_l: Option<f64>,

    /// Number of samples
    #[arg(long, global = true)]
    pub samples: Option<usize>,

    /// Upper end of the k range
    #[arg(long = "k-max", global = true)]
    pub k_max: Option<f64>,

    /// Explicit bond lengths, comma separated; overrides generation
    #[arg(long, global = true, value_delimiter = ',')]
    pub lengths: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalues with Z' and bracketing poles
    Eigen {
        /// Number of eigenvalues including k = 0
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Z/v for k uniform on [0, k_max]
    #[command(name = "dist-z-k")]
    DistZK {
        #[arg(long, default_value_t = 80)]
        bins: usize,
    },
    /// Z(k)/v over random length vectors at fixed k
    DistZLengths {
        #[arg(long, default_value_t = 1e4)]
        k: f64,
        #[arg(long, default_value_t = 80)]
        bins: usize,
    },
    /// Z'(k_n)/v^2 over eigenvalues, compared with P
    DistZprime {
        #[command(flatten)]
        spectral: SpectralArgs,
    },
    /// v^2 A_i over eigenvalues, compared with Q
    DistAmp {
        #[command(flatten)]
        spectral: SpectralArgs,
        /// Bond index, 1-based
        #[arg(long, default_value_t = 1)]
        bond: usize,
    },
    /// Tabulated limit density P
    LimitP {
        #[arg(long, default_value_t = 4001)]
        nodes: usize,
    },
    /// Tabulated limit density Q
    LimitQ {
        #[arg(long = "grid-max", default_value_t = 200.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 4001)]
        nodes: usize,
    },
    /// Eigenfunction value density R(r) obtained from Q
    Abel {
        #[arg(long = "r-max", default_value_t = 5.0)]
        r_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long = "grid-max", default_value_t = 200.0)]
        grid_max: f64,
    },
    /// Finite-v distribution functions from the invariant surface measure
    Surface {
        #[arg(long, value_enum, default_value_t = Statistic::Zprime)]
        statistic: Statistic,
        /// Thresholds R, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        /// Bond index for the amplitude statistic, 1-based
        #[arg(long, default_value_t = 1)]
        bond: usize,
        /// Reconstruct a randomly chosen bond per sample; bounded weights
        #[arg(long)]
        mixture: bool,
    },
    /// Normalised level sum of the rectangle billiard
    SebaDet {
        #[command(flatten)]
        seba: SebaArgs,
    },
    /// Scaled squared coefficients of one billiard level
    SebaCoef {
        #[command(flatten)]
        seba: SebaArgs,
        /// Level index, 1-based
        #[arg(long, default_value_t = 1500)]
        level: usize,
    },
    /// Runs a standard experiment and writes a comparison report
    Reproduce {
        #[arg(value_parser = ["fig3", "fig4", "fig5", "fig6", "fig7"])]
        preset: String,
    },
    /// Runs the verification suite
    Selfcheck {
        /// Check ids to run, comma separated (default: all)
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SpectralArgs {
    /// Number of eigenvalues
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Use the first n eigenvalues instead of runs spread over a long k range
    #[arg(long)]
    pub first: bool,
    #[arg(long, default_value_t = 500)]
    pub per_window: usize,
    #[arg(long, default_value_t = 1e7)]
    pub horizon: f64,
    #[arg(long, default_value_t = 80)]
    pub bins: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SebaArgs {
    /// Retained levels
    #[arg(long = "levels", default_value_t = 3000)]
    pub levels: usize,
    /// Aspect parameter (default (sqrt 5 - 1)/2)
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "window-min", default_value_t = 1000)]
    pub window_min: usize,
    #[arg(long = "window-max", default_value_t = 2000)]
    pub window_max: usize,
    #[arg(long, default_value_t = 80)]
    pub bins: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Zprime,
    Amplitude,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(commands::Status::Passed) => ExitCode::SUCCESS,
        Ok(commands::Status::ChecksFailed) => ExitCode::from(3),
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Numerical(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
