use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod observables;

use config::CliConfig;

/// Integrated autocorrelation times, tau_max and MCMC sampling.
#[derive(Debug, Parser)]
#[command(name = "taumax", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a chain and write trajectory.csv plus metadata.toml.
    Sample(SampleArgs),
    /// Estimate tau and ESS of each observable in a CSV series.
    Tau(TauArgs),
    /// Estimate the maximum autocorrelation time over the span of the observables.
    TauMax(TauArgs),
    /// Run a reference experiment (`gaussian1d`, `lmixture`, `nn1`, `logistic`, or `all`).
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// gaussian, gaussian:D, lmixture, nn1 or logistic [default: gaussian]
    #[arg(long)]
    target: Option<String>,
    /// em, mala, hmc, ghmc, ghmc-modified, langevin or elm [default: em]
    #[arg(long)]
    sampler: Option<String>,
    /// Step size [default: 0.02 (gaussian, lmixture), 0.004 (nn1), 0.05 (logistic)]
    #[arg(long)]
    dt: Option<f64>,
    /// Total integration steps, burn-in included [default: 100000]
    #[arg(long)]
    steps: Option<usize>,
    /// Keep every stride-th state [default: 5 (gaussian, lmixture), 25 (nn1), 1 (logistic)]
    #[arg(long)]
    stride: Option<usize>,
    /// Steps discarded before recording [default: 0]
    #[arg(long)]
    burn_in: Option<usize>,
    /// RNG seed [default: 2016]
    #[arg(long)]
    seed: Option<u64>,
    /// Langevin friction [default: 1]
    #[arg(long)]
    gamma: Option<f64>,
    /// Leapfrog steps per HMC/GHMC proposal [default: 10]
    #[arg(long)]
    leapfrog_steps: Option<usize>,
    /// GHMC momentum mixing angle in (0, pi/2] [default: pi/4]
    #[arg(long)]
    mix_angle: Option<f64>,
    /// Initial state, comma separated [default: origin; (-1, 3) for lmixture]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    initial: Option<Vec<f64>>,
    /// Independent chains, one RNG stream each [default: 1]
    #[arg(long)]
    ensemble: Option<usize>,
    /// Data file for the logistic target [default: synthetic stand-in]
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value configuration file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TauArgs {
    /// CSV or whitespace-separated series, one column per observable
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Observables: column index or name, hermite:i[@col], u1, u2, u3 [default: every column]
    #[arg(long, value_delimiter = ',')]
    obs: Option<Vec<String>>,
    /// Lag window: new (fitted exponential) or acor (rectangular) [default: new]
    #[arg(long)]
    window: Option<String>,
    /// Doubling levels applied before fitting [default: 1]
    #[arg(long)]
    doubling: Option<usize>,
    /// Thoroughness tolerance for tau-max [default: 0.1]
    #[arg(long)]
    tol: Option<f64>,
    /// Drop linearly dependent observables instead of failing (tau-max) [default: false]
    #[arg(long)]
    prune: bool,
    /// Also write the results as CSV into this directory [default: none]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value configuration file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// Experiment id or `all`
    experiment: String,
    /// Retained samples per chain [default: each experiment's own, e.g. 1000000]
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed [default: 2016]
    #[arg(long)]
    seed: Option<u64>,
    /// Data file for the logistic experiment [default: synthetic stand-in]
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory; each experiment writes into a subdirectory [default: results]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value configuration file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SampleArgs {
    fn flags(&self) -> CliConfig {
        CliConfig {
            target: self.target.clone(),
            sampler: self.sampler.clone(),
            dt: self.dt,
            steps: self.steps,
            stride: self.stride,
            burn_in: self.burn_in,
            seed: self.seed,
            gamma: self.gamma,
            leapfrog_steps: self.leapfrog_steps,
            mix_angle: self.mix_angle,
            initial: self.initial.clone(),
            ensemble: self.ensemble,
            data: self.data.clone(),
            out: self.out.clone(),
            ..CliConfig::default()
        }
    }
}

impl TauArgs {
    fn flags(&self) -> CliConfig {
        CliConfig {
            input: self.input.clone(),
            obs: self.obs.clone(),
            window: self.window.clone(),
            doubling: self.doubling,
            tol: self.tol,
            prune: self.prune.then_some(true),
            out: self.out.clone(),
            ..CliConfig::default()
        }
    }
}

impl ReproduceArgs {
    fn flags(&self) -> CliConfig {
        CliConfig {
            samples: self.samples,
            seed: self.seed,
            data: self.data.clone(),
            out: self.out.clone(),
            ..CliConfig::default()
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Sample(a) => commands::sample(&CliConfig::resolve(a.config.as_deref(), a.flags(), "sample")?),
        Command::Tau(a) => commands::tau(&CliConfig::resolve(a.config.as_deref(), a.flags(), "tau")?),
        Command::TauMax(a) => commands::tau_max(&CliConfig::resolve(a.config.as_deref(), a.flags(), "tau-max")?),
        Command::Reproduce(a) => commands::reproduce(
            &a.experiment,
            &CliConfig::resolve(a.config.as_deref(), a.flags(), "reproduce")?,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
