//! Lagged covariance estimation.
//!
//! All estimators use the biased divisor `N`:
//! `C_N(k) = 1/N sum_{n=0}^{N-k-1} (x_n - mean)(x_{n+k} - mean)`,
//! computed by FFT with zero padding to the next power of two `>= 2N` so the
//! circular correlation equals the linear one.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// A `d x N` matrix of observables along a chain, each row centred on its
/// sample mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    rows: Vec<Vec<f64>>,
    means: Vec<f64>,
    labels: Vec<String>,
}

impl ObservableSeries {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("at least one observable is required".into()));
        }
        if labels.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let n = rows[0].len();
        if n < 2 {
            return Err(Error::TooShort { required: 2, got: n });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("observable values must be finite".into()));
        }
        let mut rows = rows;
        let means = rows.iter_mut().map(|r| center(r)).collect();
        Ok(Self { rows, means, labels })
    }

    /// Rows labelled `u1..ud`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (1..=rows.len()).map(|i| format!("u{i}")).collect();
        Self::new(rows, labels)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// First `n` samples, recentred.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        let rows = self
            .rows
            .iter()
            .zip(&self.means)
            .map(|(r, m)| r[..n].iter().map(|v| v + m).collect())
            .collect();
        Self::new(rows, self.labels.clone())
    }

    /// Keeps only the listed rows.
    pub fn select(&self, keep: &[usize]) -> Self {
        Self {
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
            means: keep.iter().map(|&i| self.means[i]).collect(),
            labels: keep.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// The scalar series `sum_i a_i u_i` (centred, since every row is).
    pub fn combine(&self, a: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (row, &ai) in self.rows.iter().zip(a) {
            if ai != 0.0 {
                for (o, v) in out.iter_mut().zip(row) {
                    *o += ai * v;
                }
            }
        }
        out
    }

    /// Applies the pairwise doubling `v_i = u_{2i} + u_{2i+1}` to every row.
    pub fn doubled(&self) -> Result<Self> {
        if self.len() < 4 {
            return Err(Error::TooShort {
                required: 4,
                got: self.len(),
            });
        }
        let rows = self.rows.iter().map(|r| pair_sums(r)).collect();
        Self::new(rows, self.labels.clone())
    }
}

/// Subtracts the mean in place and returns it.
fn center(xs: &mut [f64]) -> f64 {
    if let Some(&first) = xs.first() {
        if xs.iter().all(|&x| x == first) {
            // exact zeros, free of rounding in the mean
            xs.fill(0.0);
            return first;
        }
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    for x in xs.iter_mut() {
        *x -= mean;
    }
    mean
}

fn pair_sums(xs: &[f64]) -> Vec<f64> {
    xs.chunks_exact(2).map(|p| p[0] + p[1]).collect()
}

/// Covariances at lags `0..n_lags`, scalar (`d = 1`) or `d x d` per lag.
#[derive(Debug, Clone, PartialEq)]
pub struct CovSeq {
    d: usize,
    n_samples: usize,
    /// Lag-major blocks of `d * d` row-major entries.
    data: Vec<f64>,
}

impl CovSeq {
    /// Scalar covariance sequence from explicit values.
    pub fn from_scalar(values: Vec<f64>, n_samples: usize) -> Self {
        Self {
            d: 1,
            n_samples,
            data: values,
        }
    }

    pub fn from_matrices(matrices: &[DMatrix<f64>], n_samples: usize) -> Self {
        let d = matrices.first().map(|m| m.nrows()).unwrap_or(1);
        let mut data = Vec::with_capacity(matrices.len() * d * d);
        for m in matrices {
            for i in 0..d {
                for j in 0..d {
                    data.push(m[(i, j)]);
                }
            }
        }
        Self { d, n_samples, data }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_lags(&self) -> usize {
        self.data.len() / (self.d * self.d)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn entry(&self, lag: usize, i: usize, j: usize) -> f64 {
        self.data[lag * self.d * self.d + i * self.d + j]
    }

    /// Scalar value at `lag`; for `d > 1` this is entry `(0, 0)`.
    pub fn scalar(&self, lag: usize) -> f64 {
        self.entry(lag, 0, 0)
    }

    pub fn scalar_values(&self) -> Vec<f64> {
        (0..self.n_lags()).map(|k| self.scalar(k)).collect()
    }

    pub fn matrix(&self, lag: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |i, j| self.entry(lag, i, j))
    }

    /// `a^T C_k a` for every lag.
    pub fn quadratic_form(&self, a: &[f64]) -> Vec<f64> {
        let d = self.d;
        self.data
            .chunks_exact(d * d)
            .map(|block| {
                let mut acc = 0.0;
                for i in 0..d {
                    let mut row = 0.0;
                    for j in 0..d {
                        row += block[i * d + j] * a[j];
                    }
                    acc += a[i] * row;
                }
                acc
            })
            .collect()
    }

    /// Diagonal entry `(i, i)` at every lag: the autocovariance of row `i`.
    pub fn diagonal(&self, i: usize) -> Vec<f64> {
        (0..self.n_lags()).map(|k| self.entry(k, i, i)).collect()
    }

    /// `lag,value` for scalar sequences, `lag,c_1_1,c_1_2,...` otherwise.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag");
        if self.d == 1 {
            out.push_str(",value");
        } else {
            for i in 1..=self.d {
                for j in 1..=self.d {
                    out.push_str(&format!(",c_{i}_{j}"));
                }
            }
        }
        out.push('\n');
        for (k, block) in self.data.chunks_exact(self.d * self.d).enumerate() {
            out.push_str(&k.to_string());
            for v in block {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_lags(n_lags: usize, n: usize) -> Result<()> {
    if n_lags > n {
        return Err(Error::LagTooLarge {
            requested: n_lags,
            available: n,
        });
    }
    if n_lags == 0 {
        return Err(Error::InvalidArgument("at least one lag is required".into()));
    }
    Ok(())
}

/// Autocovariance `C_N(k)` for `k = 0..n_lags` of a (not necessarily centred) series.
pub fn autocovariance(series: &[f64], n_lags: usize) -> Result<CovSeq> {
    let obs = ObservableSeries::from_rows(vec![series.to_vec()])?;
    cross_covariance_matrices(&obs, n_lags, false)
}

/// Lagged cross-covariance matrices, entry `(i, j)` of lag `k` being
/// `1/N sum_n u_i(n) u_j(n + k)`. With `symmetrize`, each matrix is replaced
/// by its symmetric part.
pub fn cross_covariance_matrices(series: &ObservableSeries, n_lags: usize, symmetrize: bool) -> Result<CovSeq> {
    let n = series.len();
    let d = series.dim();
    check_lags(n_lags, n)?;
    for (i, row) in series.rows().iter().enumerate() {
        if row.iter().all(|&v| v == 0.0) {
            return Err(Error::Degenerate(format!(
                "observable `{}` is constant",
                series.labels()[i]
            )));
        }
    }

    let len = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let spectra: Vec<Vec<Complex<f64>>> = series
        .rows()
        .iter()
        .map(|row| {
            let mut buf = vec![Complex::new(0.0, 0.0); len];
            for (b, &v) in buf.iter_mut().zip(row) {
                b.re = v;
            }
            forward.process(&mut buf);
            buf
        })
        .collect();

    let scale = 1.0 / (len as f64 * n as f64);
    let mut data = vec![0.0; n_lags * d * d];
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for i in 0..d {
        for j in i..d {
            for ((b, xi), xj) in buf.iter_mut().zip(&spectra[i]).zip(&spectra[j]) {
                *b = xi.conj() * xj;
            }
            inverse.process(&mut buf);
            // buf[k] = sum_n u_i(n) u_j(n + k); buf[len - k] = sum_n u_j(n) u_i(n + k)
            for k in 0..n_lags {
                let forward_lag = buf[k].re * scale;
                let backward_lag = buf[(len - k) % len].re * scale;
                data[k * d * d + i * d + j] = forward_lag;
                data[k * d * d + j * d + i] = backward_lag;
            }
        }
    }
    if symmetrize && d > 1 {
        for block in data.chunks_exact_mut(d * d) {
            for i in 0..d {
                for j in (i + 1)..d {
                    let avg = 0.5 * (block[i * d + j] + block[j * d + i]);
                    block[i * d + j] = avg;
                    block[j * d + i] = avg;
                }
            }
        }
    }
    for i in 0..d {
        if !(data[i * d + i] > 0.0) {
            return Err(Error::Degenerate(format!(
                "observable `{}` has zero variance",
                series.labels()[i]
            )));
        }
    }
    Ok(CovSeq {
        d,
        n_samples: n,
        data,
    })
}

/// Pairwise sums of the centred series and the variance ratio `C_v(0)/C_u(0)`
/// that converts an autocorrelation time of `v` back to one of `u`:
/// `tau_u = ratio * tau_v / 2`.
pub fn doubling_transform(series: &[f64]) -> Result<(Vec<f64>, f64)> {
    if series.len() < 4 {
        return Err(Error::TooShort {
            required: 4,
            got: series.len(),
        });
    }
    let mut u = series.to_vec();
    center(&mut u);
    let var_u = u.iter().map(|x| x * x).sum::<f64>() / u.len() as f64;
    if !(var_u > 0.0) {
        return Err(Error::Degenerate("constant series".into()));
    }
    let mut v = pair_sums(&u);
    center(&mut v);
    let var_v = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
    Ok((v, var_v / var_u))
}

/// Exact covariances of the doubled process from those of the original:
/// `C_v(k) = 2 C_u(2k) + C_u(2k+1) + C_u(|2k-1|)`. Uses `c[0..2K]` to
/// produce `K = (c.len() - 1) / 2` lags.
pub fn doubled_covariances(c: &[f64]) -> Vec<f64> {
    let lags = c.len().saturating_sub(1) / 2;
    (0..lags)
        .map(|k| {
            let back = if k == 0 { c[1] } else { c[2 * k - 1] };
            2.0 * c[2 * k] + c[2 * k + 1] + back
        })
        .collect()
}
