//! Maximum integrated autocorrelation time over linear combinations of a basis.
//!
//! For observables `u = (u_1..u_d)` and coefficients `a`, the windowed estimate of
//! the autocorrelation time of `a^T u` is the generalized Rayleigh quotient
//! `a^T K a / a^T C_0 a` with `K = sum_k omega_k C_k`. The window (and hence
//! `omega`) is refit from the scalar series of the current `a`, the quotient is
//! maximised, and the two steps alternate until the value settles.
//!
//! Windows are fitted on the pairwise-doubled series, exactly as in
//! [`crate::window::estimate_tau`]. Because the model tail is linear in the
//! covariances (see [`crate::window::WindowFit`]), the doubled covariance
//! matrices weighted by `omega` give `K`, and `2^-L C^V` against the undoubled
//! `C_0` undoes the doubling for every `a` at once. With `d = 1` this is the
//! scalar estimator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::covariance::{cross_covariance_matrices, CovSeq, ObservableSeries};
use crate::error::{Error, Result};
use crate::window::{default_max_lags, estimate_tau, select_window, Status, TauEstimate, TauOptions, MIN_SAMPLES};

/// Largest eigenpair of the pencil `(K, C_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GevResult {
    pub value: f64,
    /// Normalised so that `a^T C_0 a = 1`.
    pub a: Vec<f64>,
    /// Smallest eigenvalue of `C_0` divided by its trace.
    pub condition: f64,
}

fn c0_condition(c0: &DMatrix<f64>) -> f64 {
    let trace = c0.trace();
    let eig = SymmetricEigen::new(c0.clone());
    eig.eigenvalues.min() / trace
}

/// Maximises `a^T K a / a^T C_0 a`.
///
/// `K` is replaced by its symmetric part. `C_0 = L L^T` by Cholesky, the
/// symmetric matrix `L^-1 K L^-T` is diagonalised and its top eigenvector `y`
/// is mapped back as `a = L^-T y`.
pub fn generalized_eig_max(k: &DMatrix<f64>, c0: &DMatrix<f64>) -> Result<GevResult> {
    let d = c0.nrows();
    if c0.ncols() != d || k.nrows() != d || k.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: k.nrows(),
        });
    }
    let condition = c0_condition(c0);
    let chol = c0.clone().cholesky().ok_or_else(|| Error::CollinearBasis {
        rows: Vec::new(),
        condition,
    })?;
    let l = chol.l();
    let k_sym = (k + k.transpose()) * 0.5;
    let x = l.solve_lower_triangular(&k_sym).ok_or(Error::CollinearBasis {
        rows: Vec::new(),
        condition,
    })?;
    let reduced = l.solve_lower_triangular(&x.transpose()).ok_or(Error::CollinearBasis {
        rows: Vec::new(),
        condition,
    })?;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    let top = eig.eigenvalues.imax();
    let y: DVector<f64> = eig.eigenvectors.column(top).into_owned();
    let a = l.transpose().solve_upper_triangular(&y).ok_or(Error::CollinearBasis {
        rows: Vec::new(),
        condition,
    })?;
    Ok(GevResult {
        value: eig.eigenvalues[top],
        a: a.iter().copied().collect(),
        condition,
    })
}

/// `(1 + lambda) / (1 - lambda)`: the autocorrelation time of an observable
/// whose autocorrelation is `lambda^k`.
pub fn tau_from_ar1(lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    Ok((1.0 + lambda) / (1.0 - lambda))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThoroughnessReport {
    pub tol: f64,
    pub n_samples: usize,
    pub n_required: f64,
    pub satisfied: bool,
}

/// `N >= tau_max / tol^2`: enough samples to estimate the probability of every
/// set to within `tol` at roughly 95% confidence.
pub fn check_thoroughness(n_samples: usize, tau_max: f64, tol: f64) -> ThoroughnessReport {
    let n_required = tau_max / (tol * tol);
    ThoroughnessReport {
        tol,
        n_samples,
        n_required,
        satisfied: n_samples as f64 >= n_required,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauMaxOptions {
    pub doubling_levels: usize,
    /// Lags per covariance matrix; `None` uses [`default_max_lags`] of the doubled length.
    pub max_lags: Option<usize>,
    pub rtol: f64,
    pub max_iters: usize,
    /// Report the running maximum so `tau_max` never decreases between iterations.
    pub monotone: bool,
    pub symmetrize: bool,
    /// Drop linearly dependent rows instead of failing.
    pub prune_collinear: bool,
    pub tol: f64,
}

impl Default for TauMaxOptions {
    fn default() -> Self {
        Self {
            doubling_levels: 1,
            max_lags: None,
            rtol: 1e-3,
            max_iters: 20,
            monotone: true,
            symmetrize: true,
            prune_collinear: true,
            tol: 0.1,
        }
    }
}

impl TauMaxOptions {
    /// Matching options for the scalar estimator.
    pub fn tau_options(&self) -> TauOptions {
        TauOptions {
            doubling_levels: self.doubling_levels,
            max_lags: self.max_lags,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// The window fit failed for the current combination.
    WindowFailed,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max_iterations",
            StopReason::WindowFailed => "window_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauMaxIteration {
    pub iteration: usize,
    /// Value reported for this iteration (the running maximum when guarded).
    pub tau: f64,
    /// Rayleigh maximum (or, for iteration 0, the starting observable's tau).
    pub raw_tau: f64,
    /// Coefficients over the original rows, largest magnitude normalised to 1.
    pub coefficients: Vec<f64>,
    /// Window offset `m` used to build `K` in this iteration.
    pub window_offset: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauMaxResult {
    pub tau_max: f64,
    pub coefficients: Vec<f64>,
    pub trace: Vec<TauMaxIteration>,
    pub iterations: usize,
    pub stop: StopReason,
    pub status: Status,
    pub thoroughness: ThoroughnessReport,
    /// Scalar estimates of every input row, in input order.
    pub individual: Vec<TauEstimate>,
    /// Rows dropped as linearly dependent or constant.
    pub pruned: Vec<usize>,
    pub n_samples: usize,
}

impl TauMaxResult {
    pub fn max_individual_tau(&self) -> f64 {
        self.individual
            .iter()
            .filter(|e| e.status != Status::Degenerate)
            .map(|e| e.tau)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `iteration,tau,a_1..a_d,window_m,status`
    pub fn trace_csv(&self) -> String {
        let d = self.coefficients.len();
        let mut out = String::from("iteration,tau");
        for i in 1..=d {
            out.push_str(&format!(",a_{i}"));
        }
        out.push_str(",window_m,status\n");
        for it in &self.trace {
            out.push_str(&format!("{},{}", it.iteration, it.tau));
            for a in &it.coefficients {
                out.push_str(&format!(",{a}"));
            }
            out.push_str(&format!(",{},{}\n", it.window_offset, it.status));
        }
        out
    }
}

/// Coefficients scaled so the entry of largest magnitude is `+1`.
pub fn normalize_coefficients(a: &[f64]) -> Vec<f64> {
    let pivot = a.iter().copied().fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
    if pivot == 0.0 {
        return a.to_vec();
    }
    a.iter().map(|v| v / pivot).collect()
}

/// Lag-zero covariance with divisor `N` of centred rows.
fn lag_zero(series: &ObservableSeries) -> DMatrix<f64> {
    let d = series.dim();
    let n = series.len() as f64;
    DMatrix::from_fn(d, d, |i, j| {
        series.row(i).iter().zip(series.row(j)).map(|(x, y)| x * y).sum::<f64>() / n
    })
}

/// Residual variance fraction below which a row counts as a combination of
/// earlier ones.
pub const COLLINEAR_THRESHOLD: f64 = 1e-10;

/// Rows that are constant or, on the correlation matrix, have residual
/// variance fraction below [`COLLINEAR_THRESHOLD`] after elimination against
/// the earlier kept rows. Returns `(kept, dropped)`.
pub fn find_collinear(c0: &DMatrix<f64>) -> (Vec<usize>, Vec<usize>) {
    let d = c0.nrows();
    let scale = c0.diagonal().max();
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    // rows of the Cholesky factor of the kept block of the correlation matrix
    let mut factor: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        let var_i = c0[(i, i)];
        if !(var_i > 1e-300 && var_i > 1e-24 * scale) {
            dropped.push(i);
            continue;
        }
        let corr = |a: usize, b: usize| c0[(a, b)] / (c0[(a, a)] * c0[(b, b)]).sqrt();
        let mut row = Vec::with_capacity(kept.len());
        for (jj, &j) in kept.iter().enumerate() {
            let dot: f64 = row.iter().zip(&factor[jj]).map(|(x, y): (&f64, &f64)| x * y).sum();
            row.push((corr(i, j) - dot) / factor[jj][jj]);
        }
        let residual = 1.0 - row.iter().map(|x| x * x).sum::<f64>();
        if residual < COLLINEAR_THRESHOLD {
            dropped.push(i);
        } else {
            row.push(residual.sqrt());
            factor.push(row);
            kept.push(i);
        }
    }
    (kept, dropped)
}

fn expand(a: &[f64], kept: &[usize], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for (&i, &v) in kept.iter().zip(a) {
        out[i] = v;
    }
    normalize_coefficients(&out)
}

fn weighted_sum(cov: &CovSeq, weights: &[f64], scale: f64) -> DMatrix<f64> {
    let d = cov.dim();
    let mut k = DMatrix::zeros(d, d);
    for (lag, w) in weights.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                k[(i, j)] += w * cov.entry(lag, i, j);
            }
        }
    }
    k * scale
}

/// Estimates `tau_max` over the span of the rows of `series`.
///
/// Starts from the single observable with the largest autocorrelation time,
/// then alternates window selection on `a^T u` with maximisation of the
/// Rayleigh quotient until the relative change is at most `rtol`.
pub fn estimate_tau_max(series: &ObservableSeries, options: &TauMaxOptions) -> Result<TauMaxResult> {
    let n = series.len();
    let d = series.dim();
    if n < MIN_SAMPLES {
        return Err(Error::TooShort {
            required: MIN_SAMPLES,
            got: n,
        });
    }
    if !(options.rtol > 0.0) || options.max_iters == 0 {
        return Err(Error::InvalidArgument("rtol must be positive and max_iters at least 1".into()));
    }
    let tau_options = options.tau_options();

    let c0_full = lag_zero(series);
    let (kept, pruned) = find_collinear(&c0_full);
    if !pruned.is_empty() && !options.prune_collinear {
        return Err(Error::CollinearBasis {
            rows: pruned,
            condition: c0_condition(&c0_full),
        });
    }
    if kept.is_empty() {
        return Err(Error::Degenerate("every observable is constant".into()));
    }

    let individual = series
        .rows()
        .iter()
        .map(|row| estimate_tau(row, &tau_options))
        .collect::<Result<Vec<_>>>()?;

    let start = kept
        .iter()
        .copied()
        .filter(|&i| individual[i].status != Status::Degenerate)
        .max_by(|&i, &j| individual[i].tau.total_cmp(&individual[j].tau));
    let Some(start) = start else {
        let coefficients = normalize_coefficients(&(0..d).map(|i| if i == kept[0] { 1.0 } else { 0.0 }).collect::<Vec<_>>());
        return Ok(TauMaxResult {
            tau_max: 1.0,
            trace: Vec::new(),
            coefficients,
            iterations: 0,
            stop: StopReason::WindowFailed,
            status: Status::Degenerate,
            thoroughness: check_thoroughness(n, 1.0, options.tol),
            individual,
            pruned,
            n_samples: n,
        });
    };

    let reduced = series.select(&kept);
    let c0 = lag_zero(&reduced);
    let mut doubled = reduced.clone();
    for _ in 0..options.doubling_levels {
        if doubled.len() < 8 {
            return Err(Error::InvalidArgument(format!(
                "{} doubling levels leave fewer than 4 samples out of {n}",
                options.doubling_levels
            )));
        }
        doubled = doubled.doubled()?;
    }
    let n_lags = options
        .max_lags
        .unwrap_or_else(|| default_max_lags(doubled.len()))
        .min(doubled.len());
    let cov = cross_covariance_matrices(&doubled, n_lags, options.symmetrize)?;
    let undo = 0.5f64.powi(options.doubling_levels as i32);

    let mut a: Vec<f64> = kept.iter().map(|&i| if i == start { 1.0 } else { 0.0 }).collect();
    let first = &individual[start];
    let mut trace = vec![TauMaxIteration {
        iteration: 0,
        tau: first.tau,
        raw_tau: first.tau,
        coefficients: expand(&a, &kept, d),
        window_offset: first.window.as_ref().map_or(f64::NAN, |w| w.offset),
        status: first.status,
    }];
    let mut best = 0usize;
    let mut previous = first.tau;
    let mut stop = StopReason::MaxIterations;

    for iteration in 1..=options.max_iters {
        let c = cov.quadratic_form(&a);
        let window = match select_window(&c, n_lags) {
            Ok(w) => w,
            Err(Error::Degenerate(_)) => {
                stop = StopReason::WindowFailed;
                break;
            }
            Err(e) => return Err(e),
        };
        let k = weighted_sum(&cov, &window.lag_weights, undo);
        let gev = generalized_eig_max(&k, &c0)?;
        let raw = gev.value;
        let reported = if options.monotone { raw.max(trace[best].tau) } else { raw };
        if !options.monotone || raw >= trace[best].tau {
            best = iteration;
        }
        trace.push(TauMaxIteration {
            iteration,
            tau: reported,
            raw_tau: raw,
            coefficients: expand(&gev.a, &kept, d),
            window_offset: window.window.offset,
            status: window.status,
        });
        a = gev.a;
        let change = (raw - previous).abs() / previous.abs().max(f64::MIN_POSITIVE);
        previous = raw;
        if change <= options.rtol {
            stop = StopReason::Converged;
            break;
        }
    }

    let chosen = &trace[best];
    let (tau_max, coefficients) = if options.monotone {
        (chosen.tau, chosen.coefficients.clone())
    } else {
        let last = trace.last().unwrap();
        (last.tau, last.coefficients.clone())
    };
    let status = if options.monotone { chosen.status } else { trace.last().unwrap().status };
    Ok(TauMaxResult {
        tau_max,
        coefficients,
        iterations: trace.len() - 1,
        trace,
        stop,
        status,
        thoroughness: check_thoroughness(n, tau_max, options.tol),
        individual,
        pruned,
        n_samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ar1_rows(lambdas: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        lambdas
            .iter()
            .map(|&l| {
                let s = (1.0 - l * l).sqrt();
                let mut x: f64 = rng.sample(StandardNormal);
                (0..n)
                    .map(|_| {
                        x = l * x + s * rng.sample::<f64, _>(StandardNormal);
                        x
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn pencil_identity() {
        let c0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = generalized_eig_max(&c0, &c0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let k = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        let r = generalized_eig_max(&k, &DMatrix::identity(2, 2)).unwrap();
        assert!((r.value - 3.0).abs() < 1e-12);
        assert!((r.a[0].abs() - 1.0).abs() < 1e-12 && r.a[1].abs() < 1e-12);
    }

    #[test]
    fn eigenvector_is_c0_normalised() {
        let c0 = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 0.5]);
        let k = DMatrix::from_row_slice(3, 3, &[1.0, 0.7, 0.0, 0.2, 3.0, 0.4, 0.0, 0.4, 2.0]);
        let r = generalized_eig_max(&k, &c0).unwrap();
        let a = DVector::from_vec(r.a.clone());
        let ks = (&k + k.transpose()) * 0.5;
        assert!(((a.transpose() * &c0 * &a)[0] - 1.0).abs() < 1e-12);
        assert!(((a.transpose() * &ks * &a)[0] - r.value).abs() < 1e-9);
    }

    #[test]
    fn singular_c0_is_collinear() {
        let c0 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            generalized_eig_max(&c0, &c0),
            Err(Error::CollinearBasis { .. })
        ));
    }

    #[test]
    fn ar1_and_thoroughness_arithmetic() {
        assert_eq!(tau_from_ar1(0.0).unwrap(), 1.0);
        assert!((tau_from_ar1(0.9).unwrap() - 19.0).abs() < 1e-12);
        assert!((tau_from_ar1((-0.1f64).exp()).unwrap() - 20.0).abs() < 0.05);
        assert!(tau_from_ar1(1.0).is_err());
        let r = check_thoroughness(2000, 20.0, 0.1);
        assert!((r.n_required - 2000.0).abs() < 1e-9 && r.satisfied);
        assert!(!check_thoroughness(1999, 20.0, 0.1).satisfied);
        let r = check_thoroughness(1, 1.0, 1.0);
        assert_eq!(r.n_required, 1.0);
        assert!(r.satisfied);
    }

    #[test]
    fn single_row_reduces_to_scalar_estimator() {
        let rows = ar1_rows(&[0.8], 50_000, 1);
        let scalar = estimate_tau(&rows[0], &TauOptions::default()).unwrap();
        let obs = ObservableSeries::from_rows(rows).unwrap();
        let r = estimate_tau_max(&obs, &TauMaxOptions::default()).unwrap();
        assert!((r.tau_max - scalar.tau).abs() <= 1e-9 * scalar.tau, "{} vs {}", r.tau_max, scalar.tau);
        assert_eq!(r.coefficients, vec![1.0]);
        assert_eq!(r.iterations, 1);
        assert!((r.trace[1].raw_tau - scalar.tau).abs() <= 1e-9 * scalar.tau);
    }

    #[test]
    fn finds_the_slow_mixture() {
        // u1 = x + y, u2 = x - y with x slow and y fast: the maximiser is u1 + u2.
        let rows = ar1_rows(&[0.95, 0.3], 200_000, 2);
        let (x, y) = (&rows[0], &rows[1]);
        let u1: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let u2: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let obs = ObservableSeries::from_rows(vec![u1, u2]).unwrap();
        let r = estimate_tau_max(&obs, &TauMaxOptions::default()).unwrap();
        assert!((r.tau_max / 39.0 - 1.0).abs() < 0.1, "{}", r.tau_max);
        assert!((r.coefficients[0] - 1.0).abs() < 0.1 && (r.coefficients[1] - 1.0).abs() < 0.1, "{:?}", r.coefficients);
        assert!(r.tau_max >= r.max_individual_tau() - 1e-6);
        assert_eq!(r.stop, StopReason::Converged);
        for w in r.trace.windows(2) {
            assert!(w[1].tau >= w[0].tau);
        }
    }

    #[test]
    fn rescaling_a_row_rescales_its_coefficient() {
        let rows = ar1_rows(&[0.9, 0.5, 0.7], 100_000, 3);
        let mixed = vec![
            rows[0].iter().zip(&rows[1]).map(|(a, b)| a + b).collect::<Vec<_>>(),
            rows[1].clone(),
            rows[2].iter().zip(&rows[0]).map(|(a, b)| a - 0.5 * b).collect(),
        ];
        let base = estimate_tau_max(&ObservableSeries::from_rows(mixed.clone()).unwrap(), &TauMaxOptions::default()).unwrap();
        let c = -7.5;
        let mut scaled = mixed;
        scaled[1] = scaled[1].iter().map(|v| c * v).collect();
        let other = estimate_tau_max(&ObservableSeries::from_rows(scaled).unwrap(), &TauMaxOptions::default()).unwrap();
        assert!((other.tau_max - base.tau_max).abs() <= 1e-6 * base.tau_max);
        // undo the 1/c on row 1 and renormalise
        let mut back = other.coefficients.clone();
        back[1] *= c;
        let back = normalize_coefficients(&back);
        for (x, y) in back.iter().zip(&base.coefficients) {
            assert!((x - y).abs() < 1e-6, "{back:?} vs {:?}", base.coefficients);
        }
    }

    #[test]
    fn augmenting_the_basis_never_lowers_the_maximum() {
        let rows = ar1_rows(&[0.9, 0.6, 0.3, 0.8], 20_000, 4);
        let obs = ObservableSeries::from_rows(rows).unwrap();
        let cov = cross_covariance_matrices(&obs, 200, true).unwrap();
        let weights: Vec<f64> = (0..200).map(|k| if k == 0 { 1.0 } else { 2.0 * 0.97f64.powi(k) }).collect();
        let k_full = weighted_sum(&cov, &weights, 1.0);
        let c0_full = cov.matrix(0);
        let mut last = f64::NEG_INFINITY;
        for d in 1..=4 {
            let k = k_full.view((0, 0), (d, d)).into_owned();
            let c0 = c0_full.view((0, 0), (d, d)).into_owned();
            let v = generalized_eig_max(&k, &c0).unwrap().value;
            assert!(v >= last - 1e-9);
            last = v;
        }
    }

    #[test]
    fn collinear_rows_are_pruned_or_rejected() {
        let rows = ar1_rows(&[0.9, 0.5], 10_000, 5);
        let sum: Vec<f64> = rows[0].iter().zip(&rows[1]).map(|(a, b)| 2.0 * a - b).collect();
        let obs = ObservableSeries::from_rows(vec![rows[0].clone(), rows[1].clone(), sum, vec![4.0; 10_000]]).unwrap();
        let r = estimate_tau_max(&obs, &TauMaxOptions::default()).unwrap();
        assert_eq!(r.pruned, vec![2, 3]);
        assert_eq!(r.coefficients[2], 0.0);
        assert_eq!(r.coefficients[3], 0.0);
        let strict = TauMaxOptions {
            prune_collinear: false,
            ..TauMaxOptions::default()
        };
        match estimate_tau_max(&obs, &strict) {
            Err(Error::CollinearBasis { rows, .. }) => assert_eq!(rows, vec![2, 3]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn normalisation_uses_largest_magnitude() {
        assert_eq!(normalize_coefficients(&[0.5, -2.0, 1.0]), vec![-0.25, 1.0, -0.5]);
    }

    #[test]
    fn trace_csv_schema() {
        let rows = ar1_rows(&[0.5, 0.2], 2000, 6);
        let r = estimate_tau_max(&ObservableSeries::from_rows(rows).unwrap(), &TauMaxOptions::default()).unwrap();
        let csv = r.trace_csv();
        assert!(csv.starts_with("iteration,tau,a_1,a_2,window_m,status\n"));
        assert_eq!(csv.lines().count(), r.trace.len() + 1);
    }
}
