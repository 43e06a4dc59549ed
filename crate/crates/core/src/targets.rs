//! Target densities, expressed as potentials `U(q) = -log rho(q) + const`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A differentiable potential. Implementations must be pure so that a single
/// target can be shared by concurrently running chains.
pub trait Target: Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> &str;

    /// Writes `grad U(q)` into `grad` and returns `U(q)`.
    ///
    /// Callers guarantee `q.len() == grad.len() == self.dim()`.
    fn energy_grad(&self, q: &[f64], grad: &mut [f64]) -> f64;

    fn potential(&self, q: &[f64]) -> f64 {
        let mut scratch = vec![0.0; q.len()];
        self.energy_grad(q, &mut scratch)
    }
}

fn check_dim(target: &dyn Target, q: &[f64]) -> Result<()> {
    if q.len() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: q.len(),
        });
    }
    Ok(())
}

/// Returns `(U(q), grad U(q))`.
pub fn evaluate(target: &dyn Target, q: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim(target, q)?;
    let mut grad = vec![0.0; q.len()];
    let energy = target.energy_grad(q, &mut grad);
    Ok((energy, grad))
}

/// `log rho(q)` up to the target's additive constant, i.e. `-U(q)`.
pub fn log_density_unnormalized(target: &dyn Target, q: &[f64]) -> Result<f64> {
    check_dim(target, q)?;
    Ok(-target.potential(q))
}

/// `U(q) = |q|^2 / 2`.
#[derive(Debug, Clone)]
pub struct StdGaussian {
    dim: usize,
    label: String,
}

impl StdGaussian {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            label: format!("gaussian{dim}d"),
        })
    }
}

impl Target for StdGaussian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn energy_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        grad.copy_from_slice(q);
        0.5 * q.iter().map(|x| x * x).sum::<f64>()
    }
}

/// Equal-weight mixture of two elongated Gaussians forming an L-shaped basin:
///
/// `rho(q) ∝ exp(-(36 (q1+1)^2 + (q2-3)^2)/2) + exp(-((q1-2)^2 + 36 q2^2)/2)`.
///
/// The horizontal leg is centred at `(-1, 3)`, the vertical one at `(2, 0)`.
#[derive(Debug, Clone, Default)]
pub struct LMixture;

impl LMixture {
    pub const MODES: [[f64; 2]; 2] = [[-1.0, 3.0], [2.0, 0.0]];

    fn components(q: &[f64]) -> ([f64; 2], [[f64; 2]; 2]) {
        let (x, y) = (q[0], q[1]);
        let a = 0.5 * (36.0 * (x + 1.0).powi(2) + (y - 3.0).powi(2));
        let b = 0.5 * ((x - 2.0).powi(2) + 36.0 * y * y);
        let grad_a = [36.0 * (x + 1.0), y - 3.0];
        let grad_b = [x - 2.0, 36.0 * y];
        ([a, b], [grad_a, grad_b])
    }
}

impl Target for LMixture {
    fn dim(&self) -> usize {
        2
    }

    fn label(&self) -> &str {
        "lmixture"
    }

    fn energy_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        let ([a, b], [ga, gb]) = Self::components(q);
        // U = -log(e^-a + e^-b) = min(a, b) - log(1 + e^-|a-b|)
        let lo = a.min(b);
        let rest = (-(a - b).abs()).exp();
        let energy = lo - rest.ln_1p();
        // softmax weights of the two components
        let wa = (lo - a).exp() / (1.0 + rest);
        let wb = (lo - b).exp() / (1.0 + rest);
        grad[0] = wa * ga[0] + wb * gb[0];
        grad[1] = wa * ga[1] + wb * gb[1];
        energy
    }
}

/// Regression data `(x, y)` for the one-node network.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Seed of the bundled one-node-network fixture.
pub const NN_FIXTURE_SEED: u64 = 20_160_915;

const NN_FIXTURE_CSV: &str = include_str!("../data/nn_fixture.csv");

impl RegressionData {
    /// 100 points, `x` evenly spaced on `[-3, 3]`,
    /// `y = 2 tanh(1.5 x + 0.5) + N(0, 1/beta)` with `beta = 2.5`.
    pub fn synthetic(seed: u64) -> Self {
        let n = 100;
        let noise_sd = 1.0 / OneNodeNN::BETA.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
        let y = x
            .iter()
            .map(|&xi| {
                let eps: f64 = StandardNormal.sample(&mut rng);
                2.0 * (1.5 * xi + 0.5).tanh() + noise_sd * eps
            })
            .collect();
        Self { x, y }
    }

    /// The fixture shipped with the crate (`data/nn_fixture.csv`).
    pub fn bundled() -> Self {
        Self::from_csv(NN_FIXTURE_CSV).expect("bundled fixture is well formed")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "x,y" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected header `x,y`".into(),
                })
            }
        }
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.trim().parse().ok()).ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: format!("malformed row `{line}`"),
                })
            };
            let mut fields = line.split(',');
            x.push(parse(fields.next())?);
            y.push(parse(fields.next())?);
        }
        Ok(Self { x, y })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for (x, y) in self.x.iter().zip(&self.y) {
            out.push_str(&format!("{x:.16e},{y:.16e}\n"));
        }
        out
    }
}

/// Bayesian one-node neural network regression,
/// `u(q; x) = q3 tanh(q1 x + q2) + q4`, with Gaussian likelihood and prior:
///
/// `U(q) = beta/2 sum_i (y_i - u(q; x_i))^2 + alpha/2 |q|^2`.
#[derive(Debug, Clone)]
pub struct OneNodeNN {
    data: RegressionData,
    beta: f64,
    alpha: f64,
}

impl OneNodeNN {
    pub const BETA: f64 = 2.5;
    pub const ALPHA: f64 = 0.8;

    pub fn new(data: RegressionData) -> Self {
        Self::with_params(data, Self::BETA, Self::ALPHA)
    }

    pub fn with_params(data: RegressionData, beta: f64, alpha: f64) -> Self {
        Self { data, beta, alpha }
    }

    pub fn data(&self) -> &RegressionData {
        &self.data
    }

    pub fn predict(q: &[f64], x: f64) -> f64 {
        q[2] * (q[0] * x + q[1]).tanh() + q[3]
    }
}

impl Target for OneNodeNN {
    fn dim(&self) -> usize {
        4
    }

    fn label(&self) -> &str {
        "nn1"
    }

    fn energy_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        let mut sse = 0.0;
        let mut g = [0.0; 4];
        for (&x, &y) in self.data.x.iter().zip(&self.data.y) {
            let t = (q[0] * x + q[1]).tanh();
            let resid = y - (q[2] * t + q[3]);
            sse += resid * resid;
            // d resid / dq = -(q3 (1-t^2) x, q3 (1-t^2), t, 1)
            let dt = q[2] * (1.0 - t * t);
            g[0] -= resid * dt * x;
            g[1] -= resid * dt;
            g[2] -= resid * t;
            g[3] -= resid;
        }
        let mut prior = 0.0;
        for i in 0..4 {
            grad[i] = self.beta * g[i] + self.alpha * q[i];
            prior += q[i] * q[i];
        }
        0.5 * self.beta * sse + 0.5 * self.alpha * prior
    }
}

/// Bayesian logistic regression with a Gaussian prior:
///
/// `U(q) = -beta sum_i [y_i log s_i + (1-y_i) log(1-s_i)] + alpha/2 |q|^2`,
/// `s_i = 1/(1 + exp(-q.x_i))`.
#[derive(Debug, Clone)]
pub struct Logistic {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    beta: f64,
    alpha: f64,
    dim: usize,
}

impl Logistic {
    pub const BETA: f64 = 1.0;
    pub const ALPHA: f64 = 0.1;

    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        Self::with_params(features, labels, Self::BETA, Self::ALPHA)
    }

    pub fn with_params(features: Vec<Vec<f64>>, labels: Vec<f64>, beta: f64, alpha: f64) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        let dim = features.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidArgument("logistic target needs at least one feature row".into()));
        }
        if let Some(row) = features.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        Ok(Self {
            features,
            labels,
            beta,
            alpha,
            dim,
        })
    }

    pub fn probability(q: &[f64], x: &[f64]) -> f64 {
        let z: f64 = q.iter().zip(x).map(|(a, b)| a * b).sum();
        1.0 / (1.0 + (-z).exp())
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Target for Logistic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn label(&self) -> &str {
        "logistic"
    }

    fn energy_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        for (g, &qi) in grad.iter_mut().zip(q) {
            *g = self.alpha * qi;
        }
        let mut nll = 0.0;
        for (x, &y) in self.features.iter().zip(&self.labels) {
            let z: f64 = q.iter().zip(x).map(|(a, b)| a * b).sum();
            // -log s = softplus(-z), -log(1-s) = softplus(z)
            nll += y * softplus(-z) + (1.0 - y) * softplus(z);
            let s = 1.0 / (1.0 + (-z).exp());
            let coef = self.beta * (s - y);
            for (g, &xi) in grad.iter_mut().zip(x) {
                *g += coef * xi;
            }
        }
        let prior: f64 = q.iter().map(|v| v * v).sum();
        self.beta * nll + 0.5 * self.alpha * prior
    }
}

/// A user-supplied potential/gradient pair.
pub struct FnTarget<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Send + Sync,
{
    dim: usize,
    label: String,
    f: F,
}

impl<F> FnTarget<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, label: impl Into<String>, f: F) -> Self {
        Self {
            dim,
            label: label.into(),
            f,
        }
    }
}

impl<F> Target for FnTarget<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn energy_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        (self.f)(q, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn fd_gradient(target: &dyn Target, q: &[f64], h: f64) -> Vec<f64> {
        (0..q.len())
            .map(|i| {
                let mut plus = q.to_vec();
                let mut minus = q.to_vec();
                plus[i] += h;
                minus[i] -= h;
                (target.potential(&plus) - target.potential(&minus)) / (2.0 * h)
            })
            .collect()
    }

    fn check_gradients(target: &dyn Target, scale: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let q: Vec<f64> = (0..target.dim()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let (_, grad) = evaluate(target, &q).unwrap();
            let fd = fd_gradient(target, &q, 1e-5);
            for (g, f) in grad.iter().zip(&fd) {
                let denom = g.abs().max(1.0);
                assert!((g - f).abs() / denom <= 1e-5, "{}: grad {g} vs fd {f} at {q:?}", target.label());
            }
        }
    }

    fn toy_logistic() -> Logistic {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let features: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let mut row: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
                row.push(1.0);
                row
            })
            .collect();
        let labels = features
            .iter()
            .map(|x| if x[0] + 0.5 * x[1] > 0.0 { 1.0 } else { 0.0 })
            .collect();
        Logistic::new(features, labels).unwrap()
    }

    #[test]
    fn std_gaussian_values() {
        let t = StdGaussian::new(1).unwrap();
        assert_eq!(evaluate(&t, &[0.0]).unwrap(), (0.0, vec![0.0]));
        assert_eq!(evaluate(&t, &[2.0]).unwrap(), (2.0, vec![2.0]));
        assert_eq!(log_density_unnormalized(&t, &[0.0]).unwrap(), 0.0);
        let t2 = StdGaussian::new(2).unwrap();
        assert_eq!(log_density_unnormalized(&t2, &[1.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let t = StdGaussian::new(2).unwrap();
        assert_eq!(
            evaluate(&t, &[1.0]).unwrap_err(),
            Error::DimensionMismatch { expected: 2, got: 1 }
        );
        assert!(log_density_unnormalized(&LMixture, &[0.0; 3]).is_err());
    }

    #[test]
    fn lmixture_gradient_vanishes_at_deep_mode() {
        let (_, grad) = evaluate(&LMixture, &[-1.0, 3.0]).unwrap();
        let fd = fd_gradient(&LMixture, &[-1.0, 3.0], 1e-6);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm <= 1e-6);
        for (g, f) in grad.iter().zip(&fd) {
            assert!((g - f).abs() <= 1e-6);
        }
    }

    #[test]
    fn lmixture_log_density_at_vertical_mode() {
        let direct = ((-0.5f64 * (36.0 * 9.0 + 9.0)).exp() + 1.0).ln();
        let got = log_density_unnormalized(&LMixture, &[2.0, 0.0]).unwrap();
        assert!((got - direct).abs() < 1e-15);
        assert!(got.abs() < 1e-12);
    }

    #[test]
    fn lmixture_has_two_local_maxima() {
        // Each mode is a local minimum of U: gradient ~ 0 and U increases nearby.
        for mode in LMixture::MODES {
            let u0 = LMixture.potential(&mode);
            for (dx, dy) in [(0.05, 0.0), (-0.05, 0.0), (0.0, 0.05), (0.0, -0.05)] {
                assert!(LMixture.potential(&[mode[0] + dx, mode[1] + dy]) > u0);
            }
        }
        // The corner of the L sits on a barrier between them.
        let corner = LMixture.potential(&[-1.0, 0.0]);
        assert!(corner > LMixture.potential(&LMixture::MODES[0]) + 1.0);
        assert!(corner > LMixture.potential(&LMixture::MODES[1]) + 1.0);
    }

    #[test]
    fn lmixture_does_not_overflow_far_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let r = rng.random_range(0.0..1e3);
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            let q = [r * th.cos(), r * th.sin()];
            let (u, g) = evaluate(&LMixture, &q).unwrap();
            assert!(u.is_finite() && g.iter().all(|v| v.is_finite()), "{q:?}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        check_gradients(&StdGaussian::new(3).unwrap(), 3.0, 1);
        check_gradients(&LMixture, 3.0, 2);
        check_gradients(&OneNodeNN::new(RegressionData::bundled()), 1.5, 3);
        check_gradients(&toy_logistic(), 1.0, 4);
    }

    #[test]
    fn nn_energy_has_sign_symmetry() {
        let t = OneNodeNN::new(RegressionData::bundled());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let flipped = [-q[0], -q[1], -q[2], q[3]];
            assert!((t.potential(&q) - t.potential(&flipped)).abs() <= 1e-12 * t.potential(&q).abs().max(1.0));
        }
    }

    #[test]
    fn bundled_fixture_matches_generator() {
        let bundled = RegressionData::bundled();
        assert_eq!(bundled.x.len(), 100);
        assert_eq!(bundled, RegressionData::synthetic(NN_FIXTURE_SEED));
        assert_eq!(bundled.to_csv(), NN_FIXTURE_CSV);
    }

    #[test]
    fn logistic_is_convex_along_lines() {
        let t = toy_logistic();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            assert!(t.potential(&mid) <= 0.5 * (t.potential(&a) + t.potential(&b)) + 1e-12);
        }
    }

    #[test]
    fn logistic_rejects_bad_labels() {
        assert!(Logistic::new(vec![vec![1.0]], vec![0.5]).is_err());
        assert!(Logistic::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn fn_target_wraps_closures() {
        let t = FnTarget::new(1, "quartic", |q: &[f64], g: &mut [f64]| {
            g[0] = q[0].powi(3);
            0.25 * q[0].powi(4)
        });
        assert_eq!(evaluate(&t, &[2.0]).unwrap(), (4.0, vec![8.0]));
    }
}
