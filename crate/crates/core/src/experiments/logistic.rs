//! Brownian dynamics on the Bayesian logistic regression posterior over the
//! training half of the credit data, basis `q1..q15`, with the predicted
//! probability at the first training example as an observable of interest.

use std::path::PathBuf;

use rayon::prelude::*;

use super::dataset::{load_australian, Dataset, DEFAULT_SPLIT_SEED, SYNTHETIC_SEED};
use super::lmixture::coordinate_basis;
use super::{checkpoint_estimates, checkpoints_for, trajectory_csv, ErrorRow, ExperimentReport, TauRow};
use crate::error::Result;
use crate::samplers::{run_chain, ChainConfig, SamplerKind, Trajectory};
use crate::targets::Logistic;
use crate::tau_max::{TauMaxOptions, TauMaxResult};
use crate::window::{estimate_tau, TauEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub split_seed: u64,
    pub dt: f64,
    pub stride: usize,
    pub sampler: SamplerKind,
    pub checkpoints: Option<Vec<usize>>,
    /// `australian.dat`; the synthetic stand-in is used when absent.
    pub data: Option<PathBuf>,
    pub synthetic_seed: u64,
    pub trajectory_rows: usize,
    pub tau_max: TauMaxOptions,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            seed: 2016,
            split_seed: DEFAULT_SPLIT_SEED,
            dt: 0.05,
            stride: 1,
            sampler: SamplerKind::Em,
            checkpoints: None,
            data: None,
            synthetic_seed: SYNTHETIC_SEED,
            trajectory_rows: 5_000,
            tau_max: TauMaxOptions::default(),
        }
    }
}

impl LogisticConfig {
    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.data {
            Some(path) => load_australian(path, self.split_seed),
            None => Dataset::synthetic(self.synthetic_seed, self.split_seed),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticOutcome {
    pub report: ExperimentReport,
    pub checkpoints: Vec<usize>,
    pub results: Vec<TauMaxResult>,
    /// Estimates for `sigma(q . x_1)`, per checkpoint.
    pub prediction_tau: Vec<TauEstimate>,
    pub train_error: Vec<f64>,
    pub test_error: Vec<f64>,
    pub dataset: Dataset,
    pub trajectory: Trajectory,
}

/// Class 1 when the averaged probability is at least one half.
pub fn classify(p: f64) -> f64 {
    if p >= 0.5 {
        1.0
    } else {
        0.0
    }
}

/// Posterior-mean probability of every example, averaged over the first `N`
/// samples for each `N` in `checkpoints` (ascending). Indexed `[checkpoint][row]`.
pub fn mean_probabilities(traj: &Trajectory, features: &[Vec<f64>], checkpoints: &[usize]) -> Vec<Vec<f64>> {
    let per_row: Vec<Vec<f64>> = features
        .par_iter()
        .map(|x| {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(checkpoints.len());
            let mut next = 0;
            for (s, q) in traj.states().enumerate() {
                if next == checkpoints.len() {
                    break;
                }
                acc += Logistic::probability(q, x);
                while next < checkpoints.len() && checkpoints[next] == s + 1 {
                    out.push(acc / (s + 1) as f64);
                    next += 1;
                }
            }
            out
        })
        .collect();
    (0..checkpoints.len())
        .map(|c| per_row.iter().map(|r| r[c]).collect())
        .collect()
}

/// Fraction of `rows` whose thresholded probability disagrees with the label.
pub fn misclassification(probabilities: &[f64], labels: &[f64], rows: &[usize]) -> f64 {
    let wrong = rows
        .iter()
        .filter(|&&i| classify(probabilities[i]) != labels[i])
        .count();
    wrong as f64 / rows.len() as f64
}

pub fn run_logistic(config: &LogisticConfig) -> Result<LogisticOutcome> {
    let dataset = config.load_dataset()?;
    run_logistic_on(dataset, config)
}

pub fn run_logistic_on(dataset: Dataset, config: &LogisticConfig) -> Result<LogisticOutcome> {
    let target = Logistic::new(dataset.train_features(), dataset.train_labels())?;
    let chain = ChainConfig {
        step_size: config.dt,
        n_steps: config.n_samples * config.stride,
        stride: config.stride,
        seed: config.seed,
        ..ChainConfig::default()
    };
    let initial = vec![0.0; dataset.n_features()];
    let trajectory = run_chain(&target, config.sampler, &chain, &initial)?;
    let basis = coordinate_basis(&trajectory)?;
    let checkpoints = checkpoints_for(config.checkpoints.as_deref(), trajectory.n_samples());
    let x1 = &dataset.features[dataset.train[0]];
    let prediction: Vec<f64> = trajectory.states().map(|q| Logistic::probability(q, x1)).collect();

    let mut report = ExperimentReport::new("logistic", checkpoints.clone());
    let mut results = Vec::with_capacity(checkpoints.len());
    let mut prediction_tau = Vec::with_capacity(checkpoints.len());
    for &n in &checkpoints {
        results.push(checkpoint_estimates(&basis, n, &config.tau_max, &mut report)?);
        let est = estimate_tau(&prediction[..n], &config.tau_max.tau_options())?;
        report.tau.push(TauRow::from_estimate(n, "sigma_x1", &est));
        prediction_tau.push(est);
    }

    let probs = mean_probabilities(&trajectory, &dataset.features, &checkpoints);
    let mut train_error = Vec::with_capacity(checkpoints.len());
    let mut test_error = Vec::with_capacity(checkpoints.len());
    for (&n, p) in checkpoints.iter().zip(&probs) {
        let tr = misclassification(p, &dataset.labels, &dataset.train);
        let te = misclassification(p, &dataset.labels, &dataset.test);
        report.errors.push(ErrorRow {
            n,
            metric: "train_error".into(),
            value: tr,
        });
        report.errors.push(ErrorRow {
            n,
            metric: "test_error".into(),
            value: te,
        });
        train_error.push(tr);
        test_error.push(te);
    }

    report.trajectory = Some(trajectory_csv(
        trajectory.states().take(config.trajectory_rows),
        trajectory.dim(),
    ));
    if let Some(last) = results.last() {
        let slow = last
            .individual
            .iter()
            .max_by(|a, b| a.tau.total_cmp(&b.tau))
            .expect("fifteen observables");
        report.acf_window = Some(slow.acf_window_csv());
    }
    report
        .extra
        .push(("dataset.txt".into(), format!("provenance,{}\n", dataset.provenance)));

    Ok(LogisticOutcome {
        report,
        checkpoints,
        results,
        prediction_tau,
        train_error,
        test_error,
        dataset,
        trajectory,
    })
}
