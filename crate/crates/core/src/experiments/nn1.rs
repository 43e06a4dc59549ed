//! Brownian dynamics on the one-node network posterior, basis `q1..q4`, with
//! the prediction at the first data point as an observable of interest.

use super::lmixture::coordinate_basis;
use super::{checkpoint_estimates, checkpoints_for, trajectory_csv, ErrorRow, ExperimentReport, TauRow};
use crate::error::Result;
use crate::samplers::{run_chain, ChainConfig, SamplerKind, Trajectory};
use crate::tau_max::{TauMaxOptions, TauMaxResult};
use crate::targets::{OneNodeNN, RegressionData};
use crate::window::{estimate_tau, TauEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct NnConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// The Hessian at the posterior mode of the bundled data has largest
    /// eigenvalue about 374, so Euler-Maruyama needs `dt < 0.0053`.
    pub dt: f64,
    /// `dt * stride = 0.1` time units between retained samples.
    pub stride: usize,
    pub sampler: SamplerKind,
    pub initial: [f64; 4],
    pub checkpoints: Option<Vec<usize>>,
    pub trajectory_rows: usize,
    pub data: RegressionData,
    pub tau_max: TauMaxOptions,
}

impl Default for NnConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            seed: 2016,
            dt: 0.004,
            stride: 25,
            sampler: SamplerKind::Em,
            initial: [0.0; 4],
            checkpoints: None,
            trajectory_rows: 10_000,
            data: RegressionData::bundled(),
            tau_max: TauMaxOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NnOutcome {
    pub report: ExperimentReport,
    pub checkpoints: Vec<usize>,
    pub results: Vec<TauMaxResult>,
    /// Estimates for the prediction at `x_1`, per checkpoint.
    pub prediction_tau: Vec<TauEstimate>,
    /// Mean squared error of the posterior-mean prediction, per checkpoint.
    pub mse: Vec<f64>,
    pub trajectory: Trajectory,
}

/// `1/n sum_i (y_i - ubar(x_i))^2` with `ubar` averaged over the first `N`
/// samples, for every `N` in `checkpoints` (ascending).
pub fn mse_at_checkpoints(traj: &Trajectory, data: &RegressionData, checkpoints: &[usize]) -> Vec<f64> {
    let mut sums = vec![0.0; data.x.len()];
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for (s, q) in traj.states().enumerate() {
        if next == checkpoints.len() {
            break;
        }
        for (acc, &x) in sums.iter_mut().zip(&data.x) {
            *acc += OneNodeNN::predict(q, x);
        }
        while next < checkpoints.len() && checkpoints[next] == s + 1 {
            let n = (s + 1) as f64;
            let mse = sums.iter().zip(&data.y).map(|(acc, y)| (y - acc / n).powi(2)).sum::<f64>() / data.x.len() as f64;
            out.push(mse);
            next += 1;
        }
    }
    out
}

pub fn run_nn1(config: &NnConfig) -> Result<NnOutcome> {
    let target = OneNodeNN::new(config.data.clone());
    let chain = ChainConfig {
        step_size: config.dt,
        n_steps: config.n_samples * config.stride,
        stride: config.stride,
        seed: config.seed,
        ..ChainConfig::default()
    };
    let trajectory = run_chain(&target, config.sampler, &chain, &config.initial)?;
    let basis = coordinate_basis(&trajectory)?;
    let checkpoints = checkpoints_for(config.checkpoints.as_deref(), trajectory.n_samples());
    let x1 = config.data.x[0];
    let prediction: Vec<f64> = trajectory.states().map(|q| OneNodeNN::predict(q, x1)).collect();

    let mut report = ExperimentReport::new("nn1", checkpoints.clone());
    let mut results = Vec::with_capacity(checkpoints.len());
    let mut prediction_tau = Vec::with_capacity(checkpoints.len());
    for &n in &checkpoints {
        results.push(checkpoint_estimates(&basis, n, &config.tau_max, &mut report)?);
        let est = estimate_tau(&prediction[..n], &config.tau_max.tau_options())?;
        report.tau.push(TauRow::from_estimate(n, "u_x1", &est));
        prediction_tau.push(est);
    }
    let mse = mse_at_checkpoints(&trajectory, &config.data, &checkpoints);
    for (&n, &v) in checkpoints.iter().zip(&mse) {
        report.errors.push(ErrorRow {
            n,
            metric: "mse".into(),
            value: v,
        });
    }

    let rows = config.trajectory_rows.min(trajectory.n_samples());
    report.trajectory = Some(trajectory_csv(trajectory.states().take(rows), trajectory.dim()));
    if let Some(last) = results.last() {
        let a = &last.coefficients;
        let mut max_obs = String::from("index,u_max\n");
        for (i, q) in trajectory.states().take(rows).enumerate() {
            let v: f64 = a.iter().zip(q).map(|(a, q)| a * q).sum();
            max_obs.push_str(&format!("{i},{v}\n"));
        }
        report.extra.push(("trajectory_max.csv".into(), max_obs));
        let slow = &last.individual[0];
        report.acf_window = Some(slow.acf_window_csv());
    }
    let n_all = trajectory.n_samples() as f64;
    let mut pred = String::from("x,y,u_mean\n");
    let mut sums = vec![0.0; config.data.x.len()];
    for q in trajectory.states() {
        for (acc, &x) in sums.iter_mut().zip(&config.data.x) {
            *acc += OneNodeNN::predict(q, x);
        }
    }
    for ((x, y), s) in config.data.x.iter().zip(&config.data.y).zip(&sums) {
        pred.push_str(&format!("{x},{y},{}\n", s / n_all));
    }
    report.extra.push(("prediction.csv".into(), pred));

    Ok(NnOutcome {
        report,
        checkpoints,
        results,
        prediction_tau,
        mse,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_matches_direct_average() {
        let data = RegressionData {
            x: vec![0.0, 1.0],
            y: vec![1.0, -1.0],
        };
        let states = vec![vec![1.0, 0.0, 1.0, 0.5], vec![0.5, 0.2, -1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]];
        let traj = Trajectory::from_states(states.clone(), SamplerKind::Em, ChainConfig::default(), "nn");
        let got = mse_at_checkpoints(&traj, &data, &[2, 3]);
        for (k, &n) in [2usize, 3].iter().enumerate() {
            let mut mse = 0.0;
            for (x, y) in data.x.iter().zip(&data.y) {
                let mean = states[..n].iter().map(|q| OneNodeNN::predict(q, *x)).sum::<f64>() / n as f64;
                mse += (y - mean).powi(2) / 2.0;
            }
            assert!((got[k] - mse).abs() < 1e-14);
        }
    }

    #[test]
    fn reduced_run_schema() {
        let cfg = NnConfig {
            n_samples: 1_000,
            ..NnConfig::default()
        };
        let mut out = run_nn1(&cfg).unwrap();
        assert_eq!(out.mse.len(), out.checkpoints.len());
        assert_eq!(out.report.tau_for("u_x1").len(), out.checkpoints.len());
        let dir = tempfile::tempdir().unwrap();
        let files = out.report.write(dir.path()).unwrap();
        assert_eq!(files.len(), 7);
    }
}
