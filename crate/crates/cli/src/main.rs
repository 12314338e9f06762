//! `spatial-arma`: existence checks, coefficients, simulation and Delannoy
//! utilities for spatial ARMA models.
//!
//! Exit codes: 0/1/2 for Exists/NotExists/Unknown (and 0 for any other
//! success), 64 usage or malformed input, 65 dimension mismatch, 66 aliasing
//! refusal, 67 truncation or window too small, 70 internal failure.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spatial_arma::{Error, NoiseSpec};

pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DIMENSION: u8 = 65;
pub const EXIT_ALIASING: u8 = 66;
pub const EXIT_TRUNCATION: u8 = 67;
pub const EXIT_INTERNAL: u8 = 70;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DimensionMismatch { .. } => EXIT_DIMENSION,
            Error::AliasingRefused { .. } => EXIT_ALIASING,
            Error::TruncationExceedsBox | Error::InsufficientBox { .. } | Error::EmptyInterior => EXIT_TRUNCATION,
            Error::Io(_) => EXIT_INTERNAL,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: EXIT_INTERNAL,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError {
            code: EXIT_INTERNAL,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn parse_noise(s: &str) -> std::result::Result<NoiseSpec, String> {
    s.parse::<NoiseSpec>().map_err(|e| e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "spatial-arma", version, about = "Spatial ARMA random fields on Z^d")]
pub struct Cli {
    /// JSON object of option defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether a stationary solution exists.
    Check(CheckArgs),
    /// Export solution coefficients as CSV with a decay-fit summary.
    Coeffs(CoeffsArgs),
    /// Simulate a truncated solution field and verify its residual.
    Simulate(SimulateArgs),
    /// Weighted Delannoy numbers, the Jacobi identity and counting bounds.
    Delannoy(DelannoyArgs),
    /// Torus quadrature of |Θ/Φ|², torus zero search and H² shells.
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckMode {
    /// First-order characterization when it applies, else causal, else linear.
    Auto,
    Linear,
    Causal,
    FirstOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Fft,
    Recursion,
    Delannoy,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// gaussian[:σ], pareto:a[:pos], logpareto:q[:pos], cauchy, twopoint, deterministic:K.
    #[arg(long, value_parser = parse_noise)]
    pub noise: Option<NoiseSpec>,
    #[arg(long, value_enum)]
    pub mode: Option<CheckMode>,
}

#[derive(Args, Debug)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Coefficient box half-width: [0,N]^d causal or [−N,N]^d otherwise.
    #[arg(long = "box")]
    pub box_size: Option<usize>,
    /// Torus grid points per axis for the FFT method.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Directory for coefficients.csv and decay_fit.json; stdout CSV if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_parser = parse_noise)]
    pub noise: Option<NoiseSpec>,
    /// Window side length; the window is [0, W−1]^d.
    #[arg(long)]
    pub window: Option<usize>,
    /// Truncation level N of the solution filter.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Coefficient box half-width; defaults to the truncation level.
    #[arg(long = "box")]
    pub box_size: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Frequency λ of the perturbation e^{i2πU} e^{it·λ}, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub perturb: Option<Vec<f64>>,
    /// Phase U in [0, 1) of the perturbation.
    #[arg(long)]
    pub perturb_u: Option<f64>,
}

#[derive(Args, Debug)]
pub struct DelannoyArgs {
    #[command(subcommand)]
    pub action: DelannoyAction,
}

#[derive(Subcommand, Debug)]
pub enum DelannoyAction {
    /// CSV of ψ_{n,k} by recursion and both closed forms.
    Table {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phi: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        max: usize,
    },
    /// Diagonal Delannoy values against the Jacobi closed form.
    Identity {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phi: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        beta: u32,
        #[arg(long, default_value_t = 40)]
        k: u32,
    },
    /// f(x) = #{k : |ψ_k| ≥ 1/x} with its log² x ratio.
    Counting {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phi: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    },
    /// Residual of the Bessel asymptotics of P_n^{(0,β)}(cos θ).
    Asymptotic {
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 0)]
        beta: u32,
        #[arg(long, default_value_t = 10)]
        from: u32,
        #[arg(long, default_value_t = 1000)]
        to: u32,
    },
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of grid refinements.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Base grid points per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Also classify H² membership from the causal coefficients.
    #[arg(long)]
    pub h2: bool,
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SPATIAL_ARMA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("SPATIAL_ARMA_THREADS must be a positive integer, got {v:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError {
            code: EXIT_INTERNAL,
            message: e.to_string(),
        })?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = configure_threads().and_then(|_| run::dispatch(cli));
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
