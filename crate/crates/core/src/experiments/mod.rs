//! Drivers for the four reference studies: a one-dimensional Gaussian sampled
//! by Brownian dynamics, an L-shaped Gaussian mixture, a one-node Bayesian
//! neural network and Bayesian logistic regression.
//!
//! Every driver runs one long chain (or an ensemble of them), evaluates the
//! estimators on prefixes of it at a grid of sample sizes, and collects the
//! results in an [`ExperimentReport`] that can be written as CSV files:
//!
//! | file | columns |
//! |---|---|
//! | `tau_vs_n.csv` | `n,observable,tau,ess,status` |
//! | `coeffs.csv` | `n,a_1..a_d` |
//! | `trajectory.csv` | `index,q_1..q_d` |
//! | `errors.csv` | `n,metric,value` |
//! | `acf_window.csv` | `k,acf,w` |

pub mod dataset;
pub mod gaussian1d;
pub mod hermite;
pub mod lmixture;
pub mod logistic;
pub mod nn1;

use std::path::{Path, PathBuf};

use crate::covariance::ObservableSeries;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::tau_max::{estimate_tau_max, TauMaxOptions, TauMaxResult};
use crate::window::{estimate_tau, Status, TauEstimate, TauOptions};

pub use dataset::Dataset;
pub use gaussian1d::{run_gaussian1d, GaussianConfig, GaussianOutcome};
pub use hermite::{hermite_eval, HermiteObservable};
pub use lmixture::{run_lmixture, LMixtureConfig, LMixtureOutcome};
pub use logistic::{run_logistic, run_logistic_on, LogisticConfig, LogisticOutcome};
pub use nn1::{run_nn1, NnConfig, NnOutcome};

/// `{1e2, 3e2, 1e3, ..., 1e6}`.
pub const DEFAULT_CHECKPOINTS: [usize; 9] = [100, 300, 1_000, 3_000, 10_000, 30_000, 100_000, 300_000, 1_000_000];

/// Checkpoints not exceeding `available`; falls back to `[available]` when
/// none of them fit.
pub fn checkpoints_for(requested: Option<&[usize]>, available: usize) -> Vec<usize> {
    let grid = requested.unwrap_or(&DEFAULT_CHECKPOINTS);
    let mut out: Vec<usize> = grid.iter().copied().filter(|&n| n <= available && n > 0).collect();
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        out.push(available);
    }
    out
}

/// Experiment identifiers accepted by [`run_by_id`].
pub const EXPERIMENT_IDS: [&str; 4] = ["gaussian1d", "lmixture", "nn1", "logistic"];

#[derive(Debug, Clone, PartialEq)]
pub struct TauRow {
    pub n: usize,
    pub observable: String,
    pub tau: f64,
    pub ess: f64,
    pub status: Status,
}

impl TauRow {
    pub fn from_estimate(n: usize, observable: impl Into<String>, est: &TauEstimate) -> Self {
        Self {
            n,
            observable: observable.into(),
            tau: est.tau,
            ess: est.ess,
            status: est.status,
        }
    }

    pub fn from_tau_max(n: usize, observable: impl Into<String>, r: &TauMaxResult) -> Self {
        Self {
            n,
            observable: observable.into(),
            tau: r.tau_max,
            ess: n as f64 / r.tau_max,
            status: r.status,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub metric: String,
    pub value: f64,
}

/// Tables produced by one experiment, plus the files written for it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub checkpoints: Vec<usize>,
    pub tau: Vec<TauRow>,
    /// `(n, coefficients)` of the maximising combination.
    pub coefficients: Vec<(usize, Vec<f64>)>,
    pub errors: Vec<ErrorRow>,
    /// `trajectory.csv` contents, when the experiment emits one.
    pub trajectory: Option<String>,
    /// `acf_window.csv` contents.
    pub acf_window: Option<String>,
    /// Further `(file name, contents)` pairs.
    pub extra: Vec<(String, String)>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, checkpoints: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            checkpoints,
            ..Self::default()
        }
    }

    pub fn tau_csv(&self) -> String {
        let mut out = String::from("n,observable,tau,ess,status\n");
        for r in &self.tau {
            out.push_str(&format!("{},{},{},{},{}\n", r.n, r.observable, r.tau, r.ess, r.status));
        }
        out
    }

    pub fn coeffs_csv(&self) -> String {
        let d = self.coefficients.first().map_or(0, |(_, a)| a.len());
        let mut out = String::from("n");
        for i in 1..=d {
            out.push_str(&format!(",a_{i}"));
        }
        out.push('\n');
        for (n, a) in &self.coefficients {
            out.push_str(&n.to_string());
            for v in a {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn errors_csv(&self) -> String {
        let mut out = String::from("n,metric,value\n");
        for r in &self.errors {
            out.push_str(&format!("{},{},{}\n", r.n, r.metric, r.value));
        }
        out
    }

    /// Rows of `tau_vs_n.csv` for one observable, in checkpoint order.
    pub fn tau_for(&self, observable: &str) -> Vec<&TauRow> {
        self.tau.iter().filter(|r| r.observable == observable).collect()
    }

    pub fn errors_for(&self, metric: &str) -> Vec<&ErrorRow> {
        self.errors.iter().filter(|r| r.metric == metric).collect()
    }

    /// Writes every table into `dir` and records the paths in `files`.
    pub fn write(&mut self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut outputs: Vec<(String, String)> = vec![
            ("tau_vs_n.csv".into(), self.tau_csv()),
            ("coeffs.csv".into(), self.coeffs_csv()),
        ];
        if !self.errors.is_empty() {
            outputs.push(("errors.csv".into(), self.errors_csv()));
        }
        if let Some(t) = &self.trajectory {
            outputs.push(("trajectory.csv".into(), t.clone()));
        }
        if let Some(a) = &self.acf_window {
            outputs.push(("acf_window.csv".into(), a.clone()));
        }
        outputs.extend(self.extra.iter().cloned());
        let mut files = Vec::with_capacity(outputs.len());
        for (name, contents) in outputs {
            let path = dir.join(name);
            write_atomic(&path, &contents)?;
            files.push(path);
        }
        self.files = files.clone();
        Ok(files)
    }
}

/// `index,q_1..q_d` for the given rows (one row per sample).
pub fn trajectory_csv<'a>(states: impl Iterator<Item = &'a [f64]>, dim: usize) -> String {
    let mut out = String::from("index");
    for j in 1..=dim {
        out.push_str(&format!(",q_{j}"));
    }
    out.push('\n');
    for (i, s) in states.enumerate() {
        out.push_str(&i.to_string());
        for v in s {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// `tau_max` and the individual estimates of every basis row on the first `n`
/// samples. Individual rows are reported under their labels and the maximiser
/// as `tau_max`.
pub fn checkpoint_estimates(
    basis: &ObservableSeries,
    n: usize,
    options: &TauMaxOptions,
    report: &mut ExperimentReport,
) -> Result<TauMaxResult> {
    let prefix = basis.prefix(n)?;
    let result = estimate_tau_max(&prefix, options)?;
    for (label, est) in basis.labels().iter().zip(&result.individual) {
        report.tau.push(TauRow::from_estimate(n, label.clone(), est));
    }
    report.tau.push(TauRow::from_tau_max(n, "tau_max", &result));
    report.coefficients.push((n, result.coefficients.clone()));
    Ok(result)
}

/// Scalar estimate of an extra observable on the first `n` samples.
pub fn observable_estimate(series: &[f64], n: usize, options: &TauOptions) -> Result<TauEstimate> {
    estimate_tau(&series[..n.min(series.len())], options)
}

/// Runs an experiment with its default configuration scaled to `n_samples`
/// retained samples (when given) and writes its files into `dir/<id>`.
pub fn run_by_id(id: &str, n_samples: Option<usize>, seed: Option<u64>, dir: &Path) -> Result<ExperimentReport> {
    let mut report = match id {
        "gaussian1d" => {
            let mut cfg = GaussianConfig::default();
            if let Some(n) = n_samples {
                cfg.n_samples = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            run_gaussian1d(&cfg)?.report
        }
        "lmixture" => {
            let mut cfg = LMixtureConfig::default();
            if let Some(n) = n_samples {
                cfg.n_samples = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            run_lmixture(&cfg)?.report
        }
        "nn1" => {
            let mut cfg = NnConfig::default();
            if let Some(n) = n_samples {
                cfg.n_samples = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            run_nn1(&cfg)?.report
        }
        "logistic" => {
            let mut cfg = LogisticConfig::default();
            if let Some(n) = n_samples {
                cfg.n_samples = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            run_logistic(&cfg)?.report
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown experiment `{other}`; expected one of {}",
                EXPERIMENT_IDS.join(", ")
            )))
        }
    };
    report.write(&dir.join(id))?;
    Ok(report)
}
