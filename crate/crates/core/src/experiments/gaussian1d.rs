//! Brownian dynamics on a standard Gaussian with Hermite observables.
//!
//! The basis `u1 = H3 + H2 + H1`, `u2 = H3 - H2 + H1`, `u3 = -H3 + H2 + H1`
//! spans `{H1, H2, H3}`, and `u2 + u3 = 2 H1 = 4q`. The slowest observable of the
//! Ornstein-Uhlenbeck chain is `q`, so the maximiser is `(0, 1, 1)` up to scale.

use rayon::prelude::*;

use super::hermite::HermiteObservable;
use super::{checkpoint_estimates, checkpoints_for, ExperimentReport, TauRow};
use crate::covariance::ObservableSeries;
use crate::error::Result;
use crate::samplers::{run_chain, ChainConfig, SamplerKind, Trajectory};
use crate::tau_max::{TauMaxOptions, TauMaxResult};
use crate::targets::StdGaussian;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianConfig {
    /// Retained samples per chain.
    pub n_samples: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub dt: f64,
    pub stride: usize,
    pub sampler: SamplerKind,
    pub checkpoints: Option<Vec<usize>>,
    pub tau_max: TauMaxOptions,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            ensemble: 12,
            seed: 2016,
            dt: 0.02,
            stride: 5,
            sampler: SamplerKind::Em,
            checkpoints: None,
            tau_max: TauMaxOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaussianOutcome {
    pub report: ExperimentReport,
    pub checkpoints: Vec<usize>,
    /// `runs[r][c]`: member `r` at checkpoint `c`.
    pub runs: Vec<Vec<TauMaxResult>>,
}

impl GaussianOutcome {
    /// Median over ensemble members of `tau_max` at checkpoint index `c`.
    pub fn median_tau_max(&self, c: usize) -> f64 {
        median(self.runs.iter().map(|r| r[c].tau_max).collect())
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// The three Hermite combinations evaluated along a one-dimensional chain.
pub fn hermite_basis(traj: &Trajectory) -> Result<ObservableSeries> {
    let (h1, h2, h3) = (HermiteObservable::new(1), HermiteObservable::new(2), HermiteObservable::new(3));
    let q = traj.coordinate(0);
    let mut rows = vec![Vec::with_capacity(q.len()); 3];
    for &x in &q {
        let (a, b, c) = (h1.eval(x), h2.eval(x), h3.eval(x));
        rows[0].push(c + b + a);
        rows[1].push(c - b + a);
        rows[2].push(-c + b + a);
    }
    ObservableSeries::new(rows, vec!["u1".into(), "u2".into(), "u3".into()])
}

pub fn run_gaussian1d(config: &GaussianConfig) -> Result<GaussianOutcome> {
    let target = StdGaussian::new(1)?;
    let chain = ChainConfig {
        step_size: config.dt,
        n_steps: config.n_samples * config.stride,
        stride: config.stride,
        seed: config.seed,
        ..ChainConfig::default()
    };
    let checkpoints = checkpoints_for(config.checkpoints.as_deref(), config.n_samples);

    let runs: Vec<Vec<TauMaxResult>> = (0..config.ensemble as u64)
        .into_par_iter()
        .map(|stream| {
            let cfg = ChainConfig { stream, ..chain.clone() };
            let traj = run_chain(&target, config.sampler, &cfg, &[0.0])?;
            let basis = hermite_basis(&traj)?;
            // per-member rows are summarised below
            let mut scratch = ExperimentReport::default();
            checkpoints
                .iter()
                .map(|&n| checkpoint_estimates(&basis, n, &config.tau_max, &mut scratch))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new("gaussian1d", checkpoints.clone());
    for (c, &n) in checkpoints.iter().enumerate() {
        for (idx, label) in ["u1", "u2", "u3"].into_iter().enumerate() {
            let taus: Vec<f64> = runs.iter().map(|r| r[c].individual[idx].tau).collect();
            let tau = median(taus);
            report.tau.push(TauRow {
                n,
                observable: label.into(),
                tau,
                ess: n as f64 / tau,
                status: runs[0][c].individual[idx].status,
            });
        }
        let tau = median(runs.iter().map(|r| r[c].tau_max).collect());
        report.tau.push(TauRow {
            n,
            observable: "tau_max".into(),
            tau,
            ess: n as f64 / tau,
            status: runs[0][c].status,
        });
        for (r, run) in runs.iter().enumerate() {
            report.tau.push(TauRow::from_tau_max(n, format!("tau_max_run{}", r + 1), &run[c]));
        }
        report.coefficients.push((n, runs[0][c].coefficients.clone()));
    }
    if let Some(last) = runs.first().and_then(|r| r.last()) {
        let best = last
            .individual
            .iter()
            .max_by(|a, b| a.tau.total_cmp(&b.tau))
            .expect("three observables");
        report.acf_window = Some(best.acf_window_csv());
    }
    Ok(GaussianOutcome {
        report,
        checkpoints,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_spans_the_linear_observable() {
        let t = Trajectory::from_states(vec![vec![0.3], vec![-1.2], vec![2.0]], SamplerKind::Em, ChainConfig::default(), "g");
        let b = hermite_basis(&t).unwrap();
        // u2 + u3 = 4q, so centred rows satisfy the same identity with centred q
        let q = [0.3, -1.2, 2.0];
        let mean = q.iter().sum::<f64>() / 3.0;
        for i in 0..3 {
            assert!((b.row(1)[i] + b.row(2)[i] - 4.0 * (q[i] - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn small_run_emits_three_files() {
        let cfg = GaussianConfig {
            n_samples: 2_000,
            ensemble: 2,
            ..GaussianConfig::default()
        };
        let mut out = run_gaussian1d(&cfg).unwrap();
        assert_eq!(out.checkpoints, vec![100, 300, 1_000]);
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(out.report.write(dir.path()).unwrap().len(), 3);
        assert_eq!(out.report.tau_for("tau_max").len(), 3);
        let again = run_gaussian1d(&cfg).unwrap();
        assert_eq!(again.report.tau, out.report.tau);
    }
}
