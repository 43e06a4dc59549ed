//! Brownian dynamics on the L-shaped two-Gaussian mixture with basis `(q1, q2)`.

use super::{checkpoint_estimates, checkpoints_for, trajectory_csv, ExperimentReport};
use crate::covariance::ObservableSeries;
use crate::error::Result;
use crate::samplers::{run_chain, ChainConfig, SamplerKind, Trajectory};
use crate::tau_max::{TauMaxOptions, TauMaxResult};
use crate::targets::LMixture;

#[derive(Debug, Clone, PartialEq)]
pub struct LMixtureConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub dt: f64,
    pub stride: usize,
    pub sampler: SamplerKind,
    /// Starts in the horizontal leg of the L.
    pub initial: [f64; 2],
    pub checkpoints: Option<Vec<usize>>,
    /// Rows written to `trajectory.csv`.
    pub trajectory_rows: usize,
    pub tau_max: TauMaxOptions,
}

impl Default for LMixtureConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            seed: 2016,
            dt: 0.02,
            stride: 5,
            sampler: SamplerKind::Em,
            initial: [-1.0, 3.0],
            checkpoints: None,
            trajectory_rows: 5_000,
            tau_max: TauMaxOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LMixtureOutcome {
    pub report: ExperimentReport,
    pub checkpoints: Vec<usize>,
    pub results: Vec<TauMaxResult>,
    pub trajectory: Trajectory,
}

pub fn coordinate_basis(traj: &Trajectory) -> Result<ObservableSeries> {
    let rows = (0..traj.dim()).map(|j| traj.coordinate(j)).collect();
    let labels = (1..=traj.dim()).map(|j| format!("q{j}")).collect();
    ObservableSeries::new(rows, labels)
}

pub fn run_lmixture(config: &LMixtureConfig) -> Result<LMixtureOutcome> {
    let chain = ChainConfig {
        step_size: config.dt,
        n_steps: config.n_samples * config.stride,
        stride: config.stride,
        seed: config.seed,
        ..ChainConfig::default()
    };
    let trajectory = run_chain(&LMixture, config.sampler, &chain, &config.initial)?;
    let basis = coordinate_basis(&trajectory)?;
    let checkpoints = checkpoints_for(config.checkpoints.as_deref(), trajectory.n_samples());
    let mut report = ExperimentReport::new("lmixture", checkpoints.clone());
    let results = checkpoints
        .iter()
        .map(|&n| checkpoint_estimates(&basis, n, &config.tau_max, &mut report))
        .collect::<Result<Vec<_>>>()?;
    report.trajectory = Some(trajectory_csv(
        trajectory.states().take(config.trajectory_rows),
        trajectory.dim(),
    ));
    if let Some(last) = results.last() {
        let slow = last
            .individual
            .iter()
            .max_by(|a, b| a.tau.total_cmp(&b.tau))
            .expect("two observables");
        report.acf_window = Some(slow.acf_window_csv());
    }
    Ok(LMixtureOutcome {
        report,
        checkpoints,
        results,
        trajectory,
    })
}
