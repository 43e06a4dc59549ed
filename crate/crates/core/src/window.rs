//! Integrated autocorrelation time from a single series.
//!
//! The main estimator fits `C_N(k) ≈ c0 lambda^k` to the empirical
//! autocovariance of the (pairwise-doubled) series and uses the model twice:
//! to choose a lag window `w(k) = min(1, lambda^(k - m))` with an offset `m`
//! that balances truncation bias against noise, and to sum the tail beyond the
//! fitted lags in closed form. [`estimate_tau_acor`] is the self-consistent
//! rectangular window of the `acor` program, kept for comparison.

use std::fmt;

use crate::covariance::{autocovariance, doubling_transform};
use crate::error::{Error, Result};

/// Smallest series length accepted by the scalar estimators.
pub const MIN_SAMPLES: usize = 16;

/// Search interval for the fitted decay rate.
const LAMBDA_LO: f64 = 1e-6;
const LAMBDA_HI: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The estimate is advisory: more samples are needed.
    InsufficientSamples,
    /// No usable window could be built; `tau` is advisory.
    Degenerate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::InsufficientSamples => "insufficient_samples",
            Status::Degenerate => "degenerate",
        }
    }

    /// The more severe of two statuses.
    pub fn worst(self, other: Status) -> Status {
        let rank = |s: Status| match s {
            Status::Ok => 0,
            Status::InsufficientSamples => 1,
            Status::Degenerate => 2,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of the model `C_N(k) = c0 lambda^k + sigma c0 eta_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcfFit {
    pub lambda: f64,
    pub c0: f64,
    /// Residual RMS relative to `C_N(0)`.
    pub sigma: f64,
    /// Number of lags used in the fit.
    pub n_lags: usize,
    /// The empirical `C_N(0)` the fit was made against.
    pub acf0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagWindow {
    /// Offset `m`; `w(k) = 1` for `k <= m`. Infinite when the noise level is zero.
    pub offset: f64,
    /// `lambda^m` for the exponential window, `None` for a rectangular one.
    pub mu: Option<f64>,
    pub weights: Vec<f64>,
}

impl LagWindow {
    pub fn exponential(lambda: f64, offset: f64, mu: f64, n_lags: usize) -> Self {
        let weights = (0..n_lags)
            .map(|k| {
                let k = k as f64;
                if k <= offset {
                    1.0
                } else {
                    lambda.powf(k - offset)
                }
            })
            .collect();
        Self {
            offset,
            mu: Some(mu),
            weights,
        }
    }

    /// `w(k) = 1` for `k < width`.
    pub fn rectangular(width: usize) -> Self {
        Self {
            offset: width as f64 - 1.0,
            mu: None,
            weights: vec![1.0; width],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauOptions {
    /// Pairwise doubling levels applied before fitting.
    pub doubling_levels: usize,
    /// Lags fed to the fit; `None` uses [`default_max_lags`].
    pub max_lags: Option<usize>,
}

impl Default for TauOptions {
    fn default() -> Self {
        Self {
            doubling_levels: 1,
            max_lags: None,
        }
    }
}

/// `clamp(ceil(n / 10), 20, 2000)`, never more than `n`.
pub fn default_max_lags(n: usize) -> usize {
    n.div_ceil(10).clamp(20, 2000).min(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauEstimate {
    pub tau: f64,
    pub ess: f64,
    pub n_samples: usize,
    pub status: Status,
    pub doubling_levels: usize,
    pub fit: Option<AcfFit>,
    pub window: Option<LagWindow>,
    /// Normalised ACF `C(k)/C(0)` of the (doubled) series over the window lags.
    pub acf: Vec<f64>,
}

impl TauEstimate {
    fn new(tau: f64, n_samples: usize, status: Status, doubling_levels: usize) -> Self {
        Self {
            tau,
            ess: n_samples as f64 / tau,
            n_samples,
            status,
            doubling_levels,
            fit: None,
            window: None,
            acf: Vec::new(),
        }
    }

    fn degenerate(n_samples: usize, doubling_levels: usize) -> Self {
        Self::new(1.0, n_samples, Status::Degenerate, doubling_levels)
    }

    /// `k,acf,w` rows for plotting the ACF against its lag window.
    pub fn acf_window_csv(&self) -> String {
        let mut out = String::from("k,acf,w\n");
        if let Some(window) = &self.window {
            for (k, (a, w)) in self.acf.iter().zip(&window.weights).enumerate() {
                out.push_str(&format!("{k},{a},{w}\n"));
            }
        }
        out
    }
}

fn powers_sums(c: &[f64], lambda: f64) -> (f64, f64, f64, f64) {
    // P, P', Q, Q' at lambda
    let (mut p, mut dp, mut q, mut dq) = (0.0, 0.0, 0.0, 0.0);
    let mut pow = 1.0; // lambda^k
    let mut pow_prev = 0.0; // lambda^(k-1)
    for (k, &ck) in c.iter().enumerate() {
        let kf = k as f64;
        q += ck * pow;
        dq += kf * ck * pow_prev;
        p += pow * pow;
        dp += 2.0 * kf * pow * pow_prev;
        pow_prev = pow;
        pow *= lambda;
    }
    (p, dp, q, dq)
}

/// Reduced objective `-Q^2/P` (the constant `sum c_k^2` is dropped).
fn reduced_objective(c: &[f64], lambda: f64) -> f64 {
    let (p, _, q, _) = powers_sums(c, lambda);
    -q * q / p
}

fn reduced_derivative(c: &[f64], lambda: f64) -> f64 {
    let (p, dp, q, dq) = powers_sums(c, lambda);
    -(2.0 * q * dq * p - q * q * dp) / (p * p)
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares fit of `c0 lambda^k` to `cov[0..n_lags]`.
///
/// `lambda` is found by bisection on the derivative of the reduced objective
/// `-Q(lambda)^2 / P(lambda)`, with golden-section search on the objective when
/// the derivative does not change sign across the search interval. A minimum
/// at the lower end of the interval is kept (white noise); one at the upper
/// end means the ACF does not decay and is reported as degenerate.
pub fn fit_exponential_acf(cov: &[f64], n_lags: usize) -> Result<AcfFit> {
    if n_lags < 3 {
        return Err(Error::InvalidArgument(format!("the fit needs at least 3 lags, got {n_lags}")));
    }
    if cov.len() < n_lags {
        return Err(Error::LagTooLarge {
            requested: n_lags,
            available: cov.len(),
        });
    }
    let acf0 = cov[0];
    if !(acf0 > 0.0) || cov[..n_lags].iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("C(0) must be positive and all lags finite".into()));
    }
    let c: Vec<f64> = cov[..n_lags].iter().map(|v| v / acf0).collect();

    let d_lo = reduced_derivative(&c, LAMBDA_LO);
    let d_hi = reduced_derivative(&c, LAMBDA_HI);
    let lambda = if d_lo < 0.0 && d_hi > 0.0 {
        let (mut lo, mut hi) = (LAMBDA_LO, LAMBDA_HI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if reduced_derivative(&c, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    } else {
        golden_section(|l| reduced_objective(&c, l), LAMBDA_LO, LAMBDA_HI)
    };
    if lambda >= LAMBDA_HI - 1e-7 {
        return Err(Error::Degenerate("fitted ACF does not decay".into()));
    }
    let lambda = lambda.max(LAMBDA_LO);

    let (p, _, q, _) = powers_sums(&c, lambda);
    let c0_rel = q / p;
    if !(c0_rel > 0.0) {
        return Err(Error::Degenerate("fitted amplitude is not positive".into()));
    }
    let mut pow = 1.0;
    let mut sq = 0.0;
    for ck in &c {
        let r = c0_rel * pow - ck;
        sq += r * r;
        pow *= lambda;
    }
    Ok(AcfFit {
        lambda,
        c0: c0_rel * acf0,
        sigma: (sq / n_lags as f64).sqrt(),
        n_lags,
        acf0,
    })
}

/// Expected squared error of the windowed estimate as a function of
/// `mu = lambda^m`, up to a constant:
///
/// `4 a lambda^2/(1-lambda^2)^2 (mu^2 + sigma^2 (1+lambda-mu)^2) + 4 sigma^2 ln(mu)/ln(lambda)`
///
/// where `a = c0 / C_N(0)` is the fitted amplitude relative to lag zero.
pub fn window_error(fit: &AcfFit, mu: f64) -> f64 {
    let lam = fit.lambda;
    let s2 = fit.sigma * fit.sigma;
    let amp = fit.c0 / fit.acf0;
    let a = 4.0 * amp * lam * lam / (1.0 - lam * lam).powi(2);
    a * (mu * mu + s2 * (1.0 + lam - mu).powi(2)) + 4.0 * s2 * mu.ln() / lam.ln() - 4.0 * s2 / (1.0 - lam * lam)
}

/// Offset `m` and `mu = lambda^m` minimising [`window_error`].
///
/// Setting the derivative in `mu` to zero gives
/// `2A(1+s^2) mu^2 - 2A s^2 (1+lambda) mu + 4 s^2/ln(lambda) = 0`, whose constant
/// term is negative, so there is exactly one positive root. A root above 1
/// means no window can separate signal from noise at this sample size.
pub fn optimal_window_offset(fit: &AcfFit) -> Result<(f64, f64, Status)> {
    let lam = fit.lambda;
    if !(lam > 0.0 && lam < 1.0) {
        return Err(Error::InvalidArgument(format!("lambda must lie in (0, 1), got {lam}")));
    }
    if !(fit.sigma >= 0.0 && fit.sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be finite and >= 0, got {}", fit.sigma)));
    }
    if !(fit.c0 > 0.0 && fit.acf0 > 0.0) {
        return Err(Error::InvalidArgument("c0 and C(0) must be positive".into()));
    }
    let s2 = fit.sigma * fit.sigma;
    let amp = fit.c0 / fit.acf0;
    let a = 4.0 * amp * lam * lam / (1.0 - lam * lam).powi(2);
    let quad = 2.0 * a * (1.0 + s2);
    let lin = -2.0 * a * s2 * (1.0 + lam);
    let constant = 4.0 * s2 / lam.ln();
    let disc = lin * lin - 4.0 * quad * constant;
    let mu = (-lin + disc.sqrt()) / (2.0 * quad);
    let offset = if mu > 0.0 { mu.ln() / lam.ln() } else { f64::INFINITY };
    let status = if mu > 1.0 { Status::InsufficientSamples } else { Status::Ok };
    Ok((offset, mu, status))
}

/// Window choice for one covariance sequence, together with the per-lag
/// weights `omega_k` such that `tau = sum_k omega_k C(k) / C(0)`, tail included.
///
/// The model tail `2 c0 sum_{k>=M} w(k) lambda^k / C(0)` is linear in the
/// covariances because `c0 = sum_k lambda^k C(k) / P(lambda)`, so it folds into
/// the weights. This is what lets the same window act on covariance matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFit {
    pub fit: AcfFit,
    pub window: LagWindow,
    pub status: Status,
    pub lag_weights: Vec<f64>,
}

impl WindowFit {
    pub fn tau(&self, cov: &[f64]) -> f64 {
        self.lag_weights.iter().zip(cov).map(|(w, c)| w * c).sum::<f64>() / cov[0]
    }
}

/// `sum_{k >= start} w(k) lambda^k` for `w(k) = min(1, lambda^(k - m))`.
fn window_tail(lambda: f64, offset: f64, start: usize) -> f64 {
    let start_f = start as f64;
    if offset.is_infinite() || offset > 1e12 {
        return lambda.powf(start_f) / (1.0 - lambda);
    }
    // first lag with w < 1
    let first_decay = (offset.floor() + 1.0).max(start_f);
    let flat = (lambda.powf(start_f) - lambda.powf(first_decay)) / (1.0 - lambda);
    let decay = lambda.powf(2.0 * first_decay - offset) / (1.0 - lambda * lambda);
    flat + decay
}

pub fn select_window(cov: &[f64], n_lags: usize) -> Result<WindowFit> {
    let fit = fit_exponential_acf(cov, n_lags)?;
    let (offset, mu, status) = optimal_window_offset(&fit)?;
    let window = LagWindow::exponential(fit.lambda, offset, mu, n_lags);
    let lam = fit.lambda;
    let tail = window_tail(lam, offset, n_lags);
    let p: f64 = (0..n_lags).map(|k| lam.powi(2 * k as i32)).sum();
    let mut pow = 1.0;
    let lag_weights = window
        .weights
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let direct = if k == 0 { 1.0 } else { 2.0 * w };
            let omega = direct + 2.0 * tail * pow / p;
            pow *= lam;
            omega
        })
        .collect();
    Ok(WindowFit {
        fit,
        window,
        status,
        lag_weights,
    })
}

fn check_series(series: &[f64]) -> Result<()> {
    if series.len() < MIN_SAMPLES {
        return Err(Error::TooShort {
            required: MIN_SAMPLES,
            got: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("series contains non-finite values".into()));
    }
    Ok(())
}

/// Doubles `levels` times; returns the final series and the factor
/// `2^-L C_vL(0) / C_u(0)` that maps `tau_vL` back to `tau_u`.
pub(crate) fn apply_doubling(series: &[f64], levels: usize) -> Result<(Vec<f64>, f64)> {
    let mut current = series.to_vec();
    let mut var_ratio = 1.0;
    for _ in 0..levels {
        if current.len() < 8 {
            return Err(Error::InvalidArgument(format!(
                "{levels} doubling levels leave fewer than 4 samples out of {}",
                series.len()
            )));
        }
        let (v, ratio) = doubling_transform(&current)?;
        var_ratio *= ratio;
        current = v;
    }
    Ok((current, doubling_factor(var_ratio, 1.0, levels)))
}

/// `2^-L C_vL(0) / C_u(0)`, the factor taking `tau` of the `L`-times doubled
/// series back to `tau` of the original.
pub fn doubling_factor(c_v0: f64, c_u0: f64, levels: usize) -> f64 {
    c_v0 / c_u0 / 2f64.powi(levels as i32)
}

/// Windowed integrated autocorrelation time with the exponential-fit lag window.
///
/// Degenerate input (constant series, non-decaying ACF) yields
/// `Status::Degenerate` with an advisory `tau = 1` rather than an error.
pub fn estimate_tau(series: &[f64], options: &TauOptions) -> Result<TauEstimate> {
    check_series(series)?;
    let n = series.len();
    let levels = options.doubling_levels;
    let (v, factor) = match apply_doubling(series, levels) {
        Ok(ok) => ok,
        Err(Error::Degenerate(_)) => return Ok(TauEstimate::degenerate(n, levels)),
        Err(e) => return Err(e),
    };
    let n_lags = options.max_lags.unwrap_or_else(|| default_max_lags(v.len())).min(v.len());
    let cov = match autocovariance(&v, n_lags) {
        Ok(c) => c.scalar_values(),
        Err(Error::Degenerate(_)) => return Ok(TauEstimate::degenerate(n, levels)),
        Err(e) => return Err(e),
    };
    let selected = match select_window(&cov, n_lags) {
        Ok(w) => w,
        Err(Error::Degenerate(_)) => return Ok(TauEstimate::degenerate(n, levels)),
        Err(e) => return Err(e),
    };
    let mut tau = factor * selected.tau(&cov);
    let mut status = selected.status;
    if tau < 0.0 {
        tau = 0.0;
        status = Status::Degenerate;
    }
    Ok(TauEstimate {
        fit: Some(selected.fit),
        window: Some(selected.window),
        acf: cov.iter().map(|c| c / cov[0]).collect(),
        ..TauEstimate::new(tau, n, status, levels)
    })
}

/// Rectangular window of width `M`, the smallest integer exceeding `10 tau`,
/// iterated to self-consistency (at most 100 rounds). Flags
/// `InsufficientSamples` when `N < 100 tau`.
pub fn estimate_tau_acor(series: &[f64]) -> Result<TauEstimate> {
    check_series(series)?;
    let n = series.len();
    let cov = match autocovariance(series, n) {
        Ok(c) => c.scalar_values(),
        Err(Error::Degenerate(_)) => return Ok(TauEstimate::degenerate(n, 0)),
        Err(e) => return Err(e),
    };
    let rho: Vec<f64> = cov.iter().map(|c| c / cov[0]).collect();
    let width_for = |tau: f64| ((10.0 * tau).floor() + 1.0).clamp(1.0, n as f64) as usize;
    let tau_for = |width: usize| 1.0 + 2.0 * rho[1..width].iter().sum::<f64>();

    let mut width = width_for(1.0);
    let mut tau = tau_for(width);
    let mut converged = false;
    for _ in 0..100 {
        let next = width_for(tau);
        if next == width {
            converged = true;
            break;
        }
        width = next;
        tau = tau_for(width);
    }
    // A window that cycles or hits the end of the series is not self-consistent.
    let mut status = if !converged || width >= n || (n as f64) < 100.0 * tau {
        Status::InsufficientSamples
    } else {
        Status::Ok
    };
    if tau < 0.0 {
        tau = 0.0;
        status = Status::Degenerate;
    }
    Ok(TauEstimate {
        window: Some(LagWindow::rectangular(width)),
        acf: rho[..width].to_vec(),
        ..TauEstimate::new(tau, n, status, 0)
    })
}

/// `Var[mean] = C_N(0)/N (1 + 2 sum_k w(k) (1 - k/N) C_N(k)/C_N(0))` with the
/// fitted window. The model tail is summed explicitly up to lag `N - 1`.
///
/// With doubling, the sum is evaluated on the doubled series, whose mean is
/// twice the original one, and scaled back by `4^-L`.
pub fn variance_of_mean(series: &[f64], options: &TauOptions) -> Result<f64> {
    check_series(series)?;
    let levels = options.doubling_levels;
    let (v, _) = apply_doubling(series, levels)?;
    let n = v.len();
    let n_lags = options.max_lags.unwrap_or_else(|| default_max_lags(n)).min(n);
    let cov = autocovariance(&v, n_lags)?.scalar_values();
    let selected = select_window(&cov, n_lags)?;
    let nf = n as f64;
    let mut sum = 1.0;
    for k in 1..n_lags {
        sum += 2.0 * selected.window.weights[k] * (1.0 - k as f64 / nf) * cov[k] / cov[0];
    }
    let fit = &selected.fit;
    let offset = selected.window.offset;
    let mut pow = fit.lambda.powi(n_lags as i32);
    for k in n_lags..n {
        let kf = k as f64;
        let w = if kf <= offset { 1.0 } else { fit.lambda.powf(kf - offset) };
        let term = 2.0 * w * (1.0 - kf / nf) * fit.c0 * pow / cov[0];
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        pow *= fit.lambda;
    }
    Ok(cov[0] * sum / nf / 4f64.powi(levels as i32))
}

/// Direct `1 + 2 sum_{k>=1} C(k)/C(0)` over the supplied lags, for exact
/// covariance sequences.
pub fn tau_from_covariances(cov: &[f64]) -> f64 {
    1.0 + 2.0 * cov[1..].iter().sum::<f64>() / cov[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ar1(lambda: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (1.0 - lambda * lambda).sqrt();
        let mut x: f64 = rng.sample(StandardNormal);
        (0..n)
            .map(|_| {
                x = lambda * x + s * rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect()
    }

    fn iid(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// Independent minimiser: bisection on the analytic derivative of the
    /// error expression, bracketed by a dense log-spaced scan of its values.
    fn minimise_error(fit: &AcfFit, hi: f64) -> f64 {
        let (lam, s2, amp) = (fit.lambda, fit.sigma * fit.sigma, fit.c0 / fit.acf0);
        let a = 4.0 * amp * lam * lam / (1.0 - lam * lam).powi(2);
        let slope = |mu: f64| a * (2.0 * mu - 2.0 * s2 * (1.0 + lam - mu)) + 4.0 * s2 / (mu * lam.ln());
        let f = |mu: f64| window_error(fit, mu);
        let grid: Vec<f64> = (0..=4000).map(|i| 10f64.powf(-12.0 + i as f64 * (12.0 + hi.log10()) / 4000.0)).collect();
        let best = (0..grid.len()).min_by(|&x, &y| f(grid[x]).total_cmp(&f(grid[y]))).unwrap();
        let (mut lo, mut up) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
        assert!(slope(lo) < 0.0 && slope(up) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                up = mid;
            }
        }
        0.5 * (lo + up)
    }

    fn model_fit(lambda: f64, sigma: f64) -> AcfFit {
        AcfFit {
            lambda,
            c0: 1.0,
            sigma,
            n_lags: 50,
            acf0: 1.0,
        }
    }

    #[test]
    fn exact_exponential_is_recovered() {
        let cov: Vec<f64> = (0..50).map(|k| 0.5 * 0.9f64.powi(k)).collect();
        let fit = fit_exponential_acf(&cov, 50).unwrap();
        assert!((fit.lambda - 0.9).abs() < 1e-6, "{}", fit.lambda);
        assert!((fit.c0 - 0.5).abs() < 1e-6);
        assert!(fit.sigma <= 1e-8);
    }

    #[test]
    fn noisy_exponential_fit() {
        // Generated once from seed 17; lambda = 0.8997, sigma = 0.00986.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cov: Vec<f64> = (0..50)
            .map(|k| 0.5 * 0.9f64.powi(k) + 0.01 * 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let fit = fit_exponential_acf(&cov, 50).unwrap();
        assert!((fit.lambda - 0.9).abs() < 0.05, "{}", fit.lambda);
        assert!((fit.sigma - 0.01).abs() < 0.005, "{}", fit.sigma);
    }

    #[test]
    fn fit_needs_three_lags() {
        assert!(matches!(fit_exponential_acf(&[1.0, 0.5], 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(fit_exponential_acf(&[1.0, 0.5, 0.2], 4), Err(Error::LagTooLarge { .. })));
    }

    #[test]
    fn growing_acf_is_degenerate() {
        let cov: Vec<f64> = (0..30).map(|k| 1.0 + 0.01 * k as f64).collect();
        assert!(matches!(fit_exponential_acf(&cov, 30), Err(Error::Degenerate(_))));
        let negative: Vec<f64> = (0..30).map(|k| if k == 0 { 1.0 } else { -0.5 }).collect();
        assert!(fit_exponential_acf(&negative, 30).map(|f| f.c0 > 0.0).unwrap_or(true));
    }

    #[test]
    fn offset_vanishes_without_noise() {
        let (_, mu, status) = optimal_window_offset(&model_fit(0.9, 1e-8)).unwrap();
        assert!(mu <= 1e-3 && mu > 0.0, "{mu}");
        assert_eq!(status, Status::Ok);
        let (offset, mu, _) = optimal_window_offset(&model_fit(0.9, 0.0)).unwrap();
        assert_eq!(mu, 0.0);
        assert!(offset.is_infinite());
    }

    #[test]
    fn closed_form_root_matches_direct_minimisation() {
        for (lambda, sigma) in [(0.9, 0.5), (0.9, 0.05), (0.5, 0.1), (0.99, 0.02)] {
            let fit = model_fit(lambda, sigma);
            let (_, mu, _) = optimal_window_offset(&fit).unwrap();
            let oracle = minimise_error(&fit, 1.0);
            assert!((mu - oracle).abs() <= 1e-8 * mu, "lambda {lambda} sigma {sigma}: {mu} vs {oracle}");
        }
    }

    #[test]
    fn large_noise_flags_insufficient_samples() {
        let fit = model_fit(0.99, 10.0);
        let (offset, mu, status) = optimal_window_offset(&fit).unwrap();
        assert!(mu > 1.0 && offset < 0.0);
        assert_eq!(status, Status::InsufficientSamples);
        let oracle = minimise_error(&fit, 1e3);
        assert!(oracle > 1.0 && (mu - oracle).abs() < 1e-6 * mu);
    }

    #[test]
    fn offset_rejects_invalid_fits() {
        assert!(optimal_window_offset(&model_fit(1.0, 0.1)).is_err());
        assert!(optimal_window_offset(&model_fit(0.5, -0.1)).is_err());
    }

    #[test]
    fn window_weights_are_valid() {
        for (lambda, sigma) in [(0.9, 0.05), (0.5, 0.3), (0.999, 0.01), (0.99, 10.0)] {
            let fit = model_fit(lambda, sigma);
            let (offset, mu, _) = optimal_window_offset(&fit).unwrap();
            let w = LagWindow::exponential(lambda, offset, mu, 200);
            for k in 0..200 {
                assert!((0.0..=1.0).contains(&w.weights[k]));
                if k > 0 {
                    assert!(w.weights[k] <= w.weights[k - 1]);
                }
                if (k as f64) <= offset {
                    assert_eq!(w.weights[k], 1.0);
                }
            }
        }
    }

    #[test]
    fn tail_closed_form_matches_summation() {
        for (lambda, offset, start) in [(0.9f64, 3.4, 10), (0.9, 25.0, 10), (0.5, -2.0, 5), (0.97, 40.7, 41)] {
            let direct: f64 = (start..20_000)
                .map(|k| {
                    let kf = k as f64;
                    let w: f64 = if kf <= offset { 1.0 } else { lambda.powf(kf - offset) };
                    w * lambda.powf(kf)
                })
                .sum();
            let closed = window_tail(lambda, offset, start);
            assert!((direct - closed).abs() < 1e-12 * direct.max(1e-300), "{lambda} {offset} {start}");
        }
    }

    #[test]
    fn lag_weights_reproduce_sum_plus_tail() {
        let xs = ar1(0.8, 20_000, 3);
        let c = autocovariance(&xs, 100).unwrap().scalar_values();
        let sel = select_window(&c, 100).unwrap();
        let direct_sum: f64 = 1.0 + 2.0 * (1..100).map(|k| sel.window.weights[k] * c[k] / c[0]).sum::<f64>();
        let tail = 2.0 * sel.fit.c0 * window_tail(sel.fit.lambda, sel.window.offset, 100) / c[0];
        assert!((sel.tau(&c) - (direct_sum + tail)).abs() < 1e-12 * sel.tau(&c));
    }

    #[test]
    fn iid_tau_is_one() {
        let est = estimate_tau(&iid(100_000, 1), &TauOptions::default()).unwrap();
        assert!((0.9..=1.1).contains(&est.tau), "{}", est.tau);
        assert!((est.ess * est.tau - 100_000.0).abs() <= 1e-9 * 100_000.0);
        let acor = estimate_tau_acor(&iid(100_000, 2)).unwrap();
        assert!((0.8..=1.2).contains(&acor.tau), "{}", acor.tau);
    }

    #[test]
    fn ar1_tau() {
        let xs = ar1(0.9, 1_000_000, 4);
        let est = estimate_tau(&xs, &TauOptions::default()).unwrap();
        assert!((est.tau / 19.0 - 1.0).abs() < 0.1, "{}", est.tau);
        assert_eq!(est.status, Status::Ok);
        let acor = estimate_tau_acor(&xs).unwrap();
        assert!((acor.tau / 19.0 - 1.0).abs() < 0.15, "{}", acor.tau);
    }

    #[test]
    fn acor_flags_short_chains() {
        let est = estimate_tau_acor(&ar1(0.99, 1000, 5)).unwrap();
        assert_eq!(est.status, Status::InsufficientSamples);
    }

    #[test]
    fn doubling_levels_compose() {
        let xs = ar1(0.95, 400_000, 6);
        let taus: Vec<f64> = (0..4)
            .map(|levels| {
                estimate_tau(
                    &xs,
                    &TauOptions {
                        doubling_levels: levels,
                        max_lags: None,
                    },
                )
                .unwrap()
                .tau
            })
            .collect();
        for t in &taus {
            assert!((t / 39.0 - 1.0).abs() < 0.1, "{taus:?}");
        }
    }

    #[test]
    fn constant_series_is_degenerate() {
        let est = estimate_tau(&[3.0; 100], &TauOptions::default()).unwrap();
        assert_eq!(est.status, Status::Degenerate);
        assert_eq!(est.tau, 1.0);
        assert_eq!(estimate_tau_acor(&[3.0; 100]).unwrap().status, Status::Degenerate);
        assert!(variance_of_mean(&[3.0; 100], &TauOptions::default()).is_err());
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(matches!(
            estimate_tau(&[1.0, 2.0, 3.0], &TauOptions::default()),
            Err(Error::TooShort { required: 16, got: 3 })
        ));
    }

    #[test]
    fn scale_invariance() {
        let xs = ar1(0.7, 50_000, 7);
        let base = estimate_tau(&xs, &TauOptions::default()).unwrap().tau;
        for c in [-3.0, 1e-6, 250.0] {
            let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
            let t = estimate_tau(&scaled, &TauOptions::default()).unwrap().tau;
            assert!((t - base).abs() <= 1e-9 * base, "c = {c}: {t} vs {base}");
        }
    }

    #[test]
    fn variance_of_mean_values() {
        let v = variance_of_mean(&iid(10_000, 8), &TauOptions::default()).unwrap();
        assert!((v / 1e-4 - 1.0).abs() < 0.2, "{v}");
        let xs = ar1(0.9, 1_000_000, 9);
        let c0 = autocovariance(&xs, 1).unwrap().scalar(0);
        let v = variance_of_mean(&xs, &TauOptions::default()).unwrap();
        assert!((v / (19.0 * c0 / 1e6) - 1.0).abs() < 0.15, "{v}");
    }

    #[test]
    fn acf_window_dump() {
        let est = estimate_tau(&ar1(0.5, 2000, 10), &TauOptions::default()).unwrap();
        let csv = est.acf_window_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k,acf,w"));
        assert!(lines.next().unwrap().starts_with("0,1,1"));
    }
}
