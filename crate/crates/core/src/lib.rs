//! Integrated autocorrelation time (IAT) estimation for Markov chain Monte Carlo output.
//!
//! The crate covers the whole path from a target density to a verdict on whether a
//! chain has sampled its state space thoroughly:
//!
//! - [`targets`]: potentials `U(q) = -log rho(q)` with analytic gradients.
//! - [`samplers`]: Brownian dynamics (with and without Metropolis correction), HMC,
//!   generalized HMC and a reversible Langevin splitting integrator.
//! - [`covariance`]: FFT auto- and cross-covariance estimators and the pairwise
//!   doubling transform.
//! - [`window`]: the exponential-fit optimal lag window, an `acor`-style rectangular
//!   window, effective sample size and the variance of the sample mean.
//! - [`tau_max`]: the maximum autocorrelation time over linear combinations of basis
//!   observables, found by iterating a windowed generalized eigenproblem.
//! - [`experiments`]: drivers reproducing the Gaussian, L-shaped mixture, one-node
//!   neural network and logistic regression studies, emitting CSV files.

pub mod covariance;
pub mod error;
pub mod experiments;
pub mod io;
pub mod samplers;
pub mod targets;
pub mod tau_max;
pub mod window;

pub use covariance::{autocovariance, cross_covariance_matrices, doubling_transform, CovSeq, ObservableSeries};
pub use error::{Error, Result};
pub use samplers::{run_chain, run_ensemble, ChainConfig, SamplerKind, Trajectory};
pub use targets::Target;
pub use tau_max::{check_thoroughness, estimate_tau_max, generalized_eig_max, tau_from_ar1, TauMaxOptions, TauMaxResult};
pub use window::{doubling_factor, estimate_tau, estimate_tau_acor, variance_of_mean, Status, TauEstimate, TauOptions};
