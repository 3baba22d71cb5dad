//! `smpath`: simulate stochastic-measure paths and run the Besov, Fourier
//! and verification diagnostics, writing CSV/JSON artifacts and a manifest.
//!
//! Exit status: 0 on success, 2 when a verification check fails, 1 on error
//! (with a JSON error object on standard error).

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "smpath", version, about = "Paths of stochastic measures: simulation and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample one path (or a 2-D field) and write it as CSV.
    Simulate(SimulateArgs),
    /// Dyadic increment sums and the Besov membership verdict.
    Besov(BesovArgs),
    /// Fourier coefficients, partial-sum errors and energies.
    Fourier(FourierArgs),
    /// Run one verification test: pz, sum-squares, cubic, exp-moment, holder.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// lebesgue, rademacher, wiener, fbm or sheet.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Horizon: the model lives on (0, T].
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// Grid intervals (a power of two for 2-D models and for besov).
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "SMPATH_THREADS")]
    threads: Option<usize>,
    /// Truncation of the Rademacher series.
    #[arg(long)]
    terms: Option<usize>,
    /// Hurst index of fbm, in (1/2, 1).
    #[arg(long)]
    hurst: Option<f64>,
}

impl Common {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            model: self.model.clone(),
            seed: self.seed,
            horizon: self.horizon,
            grid: self.grid,
            out: self.out.clone(),
            threads: self.threads,
            terms: self.terms,
            hurst: self.hurst,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BesovArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Coarsest dyadic level.
    #[arg(long)]
    n_min: Option<u32>,
    /// Finest dyadic level (the sampling depth).
    #[arg(long)]
    n_max: Option<u32>,
    /// Increment direction for 2-D fields (1 or 2).
    #[arg(long)]
    direction: Option<usize>,
    /// Also estimate the Besov norm directly from the modulus of continuity.
    #[arg(long)]
    norm: bool,
}

#[derive(Args)]
struct FourierArgs {
    #[command(flatten)]
    common: Common,
    /// Highest frequency.
    #[arg(long = "K")]
    max_freq: Option<usize>,
    /// Partial-sum orders to report.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// parts or direct.
    #[arg(long)]
    method: Option<String>,
    /// Distance kept from the endpoints in the interior sup error.
    #[arg(long)]
    margin: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// pz, sum-squares, cubic, exp-moment or holder.
    test: Option<String>,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambdas: Option<Vec<f64>>,
    /// Number of coefficients (drawn at random when no lambdas are given).
    #[arg(long)]
    m: Option<usize>,
    /// Enumerate all sign patterns instead of sampling.
    #[arg(long)]
    exact: bool,
    /// sine or zero.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, value_delimiter = ',')]
    j_levels: Option<Vec<usize>>,
    #[arg(long = "T1")]
    t1: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Test function for holder: zero, one, x, sin:2pi, const:c, sin:k, cos:k.
    #[arg(long)]
    function: Option<String>,
}

/// The command plus the flag values as a partial config.
fn flags(cmd: Cmd) -> (Command, Option<PathBuf>, ExperimentConfig) {
    match cmd {
        Cmd::Simulate(a) => (Command::Simulate, a.common.config.clone(), a.common.config()),
        Cmd::Besov(a) => (
            Command::Besov,
            a.common.config.clone(),
            ExperimentConfig {
                p: a.p,
                q: a.q,
                alpha: a.alpha,
                n_min: a.n_min,
                n_max: a.n_max,
                direction: a.direction,
                norm: a.norm.then_some(true),
                ..a.common.config()
            },
        ),
        Cmd::Fourier(a) => (
            Command::Fourier,
            a.common.config.clone(),
            ExperimentConfig {
                max_freq: a.max_freq,
                n_list: a.n_list,
                method: a.method,
                margin: a.margin,
                ..a.common.config()
            },
        ),
        Cmd::Verify(a) => (
            Command::Verify,
            a.common.config.clone(),
            ExperimentConfig {
                test: a.test,
                replicates: a.replicates,
                lambdas: a.lambdas,
                m: a.m,
                exact: a.exact.then_some(true),
                family: a.family,
                j_levels: a.j_levels,
                t1: a.t1,
                epsilons: a.epsilons,
                k: a.k,
                lambda: a.lambda,
                function: a.function,
                ..a.common.config()
            },
        ),
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<smpath_core::SmError>() {
            return e.kind();
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
        if cause.is::<serde_json::Error>() {
            return "invalid_config";
        }
    }
    "invalid_config"
}

fn fail(kind: &str, message: String) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(1)
}

fn execute(cli: Cli) -> anyhow::Result<run::RunOutcome> {
    let (command, config_path, from_flags) = flags(cli.command);
    let base = match config_path {
        Some(p) => ExperimentConfig::load(&p)?,
        None => ExperimentConfig::default(),
    };
    let config = base.overridden_by(from_flags).resolve(command)?;
    if let Some(n) = config.threads {
        if n == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    run::run(&config)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string()),
    };
    match execute(cli) {
        Ok(outcome) => {
            println!("{}", outcome.manifest.display());
            match outcome.pass {
                Some(false) => ExitCode::from(2),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => fail(error_kind(&e), format!("{e:#}")),
    }
}
