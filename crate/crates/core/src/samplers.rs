//! Fixed-parameter MCMC propagators.
//!
//! Every chain draws from a `ChaCha8Rng` seeded with [`ChainConfig::seed`] and
//! switched to stream [`ChainConfig::stream`], so the members of an ensemble are
//! independent, reproducible and can run in parallel. Normal variates come from
//! `rand_distr::StandardNormal`. Changing either choice invalidates stored fixtures.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::targets::Target;

/// Tolerance used to snap `1 - 2 gamma dt` to zero, so that the
/// Euler-Leimkuhler-Matthews setting `gamma = 1/(2 dt)` survives rounding.
const O_STAGE_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// Euler-Maruyama Brownian dynamics, no rejections.
    Em,
    /// Euler-Maruyama proposal with a Metropolis test.
    Mala,
    /// Hybrid Monte Carlo with full momentum refresh.
    Hmc,
    /// Generalized HMC followed by a momentum flip (reversible).
    Ghmc,
    /// Generalized HMC without the flip.
    GhmcModified,
    /// Five-stage BAOAB-type reversible Langevin integrator.
    Langevin,
    /// [`SamplerKind::Langevin`] with `gamma = 1/(2 dt)`.
    Elm,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 7] = [
        SamplerKind::Em,
        SamplerKind::Mala,
        SamplerKind::Hmc,
        SamplerKind::Ghmc,
        SamplerKind::GhmcModified,
        SamplerKind::Langevin,
        SamplerKind::Elm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SamplerKind::Em => "em",
            SamplerKind::Mala => "mala",
            SamplerKind::Hmc => "hmc",
            SamplerKind::Ghmc => "ghmc",
            SamplerKind::GhmcModified => "ghmc-modified",
            SamplerKind::Langevin => "langevin",
            SamplerKind::Elm => "elm",
        }
    }

    fn has_momentum(self) -> bool {
        matches!(
            self,
            SamplerKind::Ghmc | SamplerKind::GhmcModified | SamplerKind::Langevin | SamplerKind::Elm
        )
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sampler `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub step_size: f64,
    pub n_steps: usize,
    /// Keep every `stride`-th post-burn-in state.
    pub stride: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Independent RNG stream, one per ensemble member.
    pub stream: u64,
    /// Langevin friction.
    pub gamma: f64,
    pub hmc_leapfrog_steps: usize,
    /// Partial momentum refresh angle for GHMC, in `(0, pi/2]`.
    pub ghmc_mix_angle: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            step_size: 0.02,
            n_steps: 10_000,
            stride: 1,
            burn_in: 0,
            seed: 0,
            stream: 0,
            gamma: 1.0,
            hmc_leapfrog_steps: 10,
            ghmc_mix_angle: std::f64::consts::FRAC_PI_4,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self, kind: SamplerKind) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad(format!("step size must be positive, got {}", self.step_size));
        }
        if self.n_steps == 0 {
            return bad("n_steps must be positive".into());
        }
        if self.stride == 0 {
            return bad("stride must be positive".into());
        }
        if self.burn_in > self.n_steps {
            return bad(format!("burn_in {} exceeds n_steps {}", self.burn_in, self.n_steps));
        }
        match kind {
            SamplerKind::Hmc if self.hmc_leapfrog_steps == 0 => bad("hmc_leapfrog_steps must be at least 1".into()),
            SamplerKind::Ghmc | SamplerKind::GhmcModified
                if !(self.ghmc_mix_angle > 0.0 && self.ghmc_mix_angle <= std::f64::consts::FRAC_PI_2) =>
            {
                bad(format!("ghmc_mix_angle must lie in (0, pi/2], got {}", self.ghmc_mix_angle))
            }
            SamplerKind::Langevin => langevin_coefficients(self.step_size, self.gamma).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Number of states a chain with this configuration retains.
    pub fn n_retained(&self) -> usize {
        (self.n_steps - self.burn_in.min(self.n_steps)) / self.stride
    }

    pub fn rng(&self) -> ChaCha8Rng {
        chain_rng(self.seed, self.stream)
    }
}

pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Retained chain output, stored row-major (`n_samples x dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<f64>,
    dim: usize,
    pub sampler: SamplerKind,
    pub config: ChainConfig,
    pub target: String,
    pub acceptance_rate: f64,
}

impl Trajectory {
    /// Wraps externally produced states (all rows must have the same length).
    pub fn from_states(rows: Vec<Vec<f64>>, sampler: SamplerKind, config: ChainConfig, target: impl Into<String>) -> Self {
        let dim = rows.first().map_or(1, Vec::len);
        Self {
            states: rows.into_iter().flatten().collect(),
            dim,
            sampler,
            config,
            target: target.into(),
            acceptance_rate: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_samples(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    /// Coordinate `j` along the chain.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.states().map(|s| s[j]).collect()
    }

    /// The first `n` retained states.
    pub fn prefix(&self, n: usize) -> Trajectory {
        let n = n.min(self.n_samples());
        Trajectory {
            states: self.states[..n * self.dim].to_vec(),
            dim: self.dim,
            sampler: self.sampler,
            config: self.config.clone(),
            target: self.target.clone(),
            acceptance_rate: self.acceptance_rate,
        }
    }

    /// `key = value` lines written next to the CSV.
    pub fn metadata(&self) -> String {
        format!(
            "target = {}\nsampler = {}\ndt = {}\nstride = {}\nseed = {}\nstream = {}\nburn_in = {}\nn_steps = {}\ngamma = {}\nacceptance_rate = {}\n",
            self.target,
            self.sampler,
            self.config.step_size,
            self.config.stride,
            self.config.seed,
            self.config.stream,
            self.config.burn_in,
            self.config.n_steps,
            self.config.gamma,
            self.acceptance_rate
        )
    }

    /// CSV with header `q1,...,qd`, one row per retained state.
    pub fn to_csv(&self) -> String {
        let header: Vec<String> = (1..=self.dim).map(|j| format!("q{j}")).collect();
        let mut out = header.join(",");
        out.push('\n');
        for s in self.states() {
            let row: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Reusable buffers so that long chains do not allocate per step.
struct Workspace {
    grad: Vec<f64>,
    grad_new: Vec<f64>,
    proposal: Vec<f64>,
    q0: Vec<f64>,
    p0: Vec<f64>,
    /// `grad` holds `grad U(q)` for the current `q`.
    grad_valid: bool,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Self {
            grad: vec![0.0; dim],
            grad_new: vec![0.0; dim],
            proposal: vec![0.0; dim],
            q0: vec![0.0; dim],
            p0: vec![0.0; dim],
            grad_valid: false,
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn eval_checked(target: &dyn Target, q: &[f64], grad: &mut [f64]) -> Result<f64> {
    let energy = target.energy_grad(q, grad);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { state: q.to_vec() });
    }
    Ok(energy)
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

/// `q - dt grad U(q) + sqrt(2 dt) xi` for a given noise vector.
pub fn em_update(target: &dyn Target, q: &[f64], dt: f64, xi: &[f64]) -> Result<Vec<f64>> {
    check_dim(target, q)?;
    let mut grad = vec![0.0; q.len()];
    eval_checked(target, q, &mut grad)?;
    let scale = (2.0 * dt).sqrt();
    Ok(q.iter()
        .zip(&grad)
        .zip(xi)
        .map(|((q, g), x)| q - dt * g + scale * x)
        .collect())
}

fn em_kernel<R: Rng + ?Sized>(target: &dyn Target, q: &mut [f64], dt: f64, rng: &mut R, ws: &mut Workspace) -> Result<()> {
    eval_checked(target, q, &mut ws.grad)?;
    let scale = (2.0 * dt).sqrt();
    for (qi, gi) in q.iter_mut().zip(&ws.grad) {
        *qi += -dt * gi + scale * gaussian(rng);
    }
    Ok(())
}

/// One Euler-Maruyama step of Brownian dynamics.
pub fn em_brownian_step<R: Rng + ?Sized>(target: &dyn Target, q: &[f64], dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_dim(target, q)?;
    let mut out = q.to_vec();
    em_kernel(target, &mut out, dt, rng, &mut Workspace::new(q.len()))?;
    Ok(out)
}

/// `log[rho(q*) T(q | q*)] - log[rho(q) T(q* | q)]` for the Euler-Maruyama
/// proposal kernel `T(y | x) ∝ exp(-|y - x + dt grad U(x)|^2 / (4 dt))`.
pub fn mala_log_ratio(target: &dyn Target, q: &[f64], q_star: &[f64], dt: f64) -> Result<f64> {
    check_dim(target, q)?;
    check_dim(target, q_star)?;
    let mut g = vec![0.0; q.len()];
    let mut g_star = vec![0.0; q.len()];
    let u = eval_checked(target, q, &mut g)?;
    let u_star = eval_checked(target, q_star, &mut g_star)?;
    Ok(mala_log_ratio_with(q, u, &g, q_star, u_star, &g_star, dt))
}

fn mala_log_ratio_with(q: &[f64], u: f64, g: &[f64], q_star: &[f64], u_star: f64, g_star: &[f64], dt: f64) -> f64 {
    let mut forward = 0.0;
    let mut backward = 0.0;
    for i in 0..q.len() {
        let f = q_star[i] - q[i] + dt * g[i];
        let b = q[i] - q_star[i] + dt * g_star[i];
        forward += f * f;
        backward += b * b;
    }
    -(u_star - u) - (backward - forward) / (4.0 * dt)
}

fn mala_kernel<R: Rng + ?Sized>(target: &dyn Target, q: &mut [f64], dt: f64, rng: &mut R, ws: &mut Workspace) -> Result<bool> {
    let u = eval_checked(target, q, &mut ws.grad)?;
    let scale = (2.0 * dt).sqrt();
    for i in 0..q.len() {
        ws.proposal[i] = q[i] - dt * ws.grad[i] + scale * gaussian(rng);
    }
    let u_star = target.energy_grad(&ws.proposal, &mut ws.grad_new);
    if !u_star.is_finite() || ws.grad_new.iter().any(|g| !g.is_finite()) {
        return Ok(false);
    }
    let log_ratio = mala_log_ratio_with(q, u, &ws.grad, &ws.proposal, u_star, &ws.grad_new, dt);
    let uniform: f64 = rng.random();
    if log_ratio >= 0.0 || uniform.ln() < log_ratio {
        q.copy_from_slice(&ws.proposal);
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Metropolis-adjusted Langevin step. Returns the new state and whether the
/// proposal was accepted.
pub fn mala_step<R: Rng + ?Sized>(target: &dyn Target, q: &[f64], dt: f64, rng: &mut R) -> Result<(Vec<f64>, bool)> {
    check_dim(target, q)?;
    let mut out = q.to_vec();
    let accepted = mala_kernel(target, &mut out, dt, rng, &mut Workspace::new(q.len()))?;
    Ok((out, accepted))
}

/// Velocity Verlet with unit mass. `grad` must hold `grad U(q)` on entry and
/// holds `grad U(q_final)` on exit. Returns the final potential energy.
fn leapfrog_in_place(target: &dyn Target, q: &mut [f64], p: &mut [f64], grad: &mut [f64], dt: f64, steps: usize) -> f64 {
    let mut energy = f64::NAN;
    for _ in 0..steps {
        for (pi, gi) in p.iter_mut().zip(grad.iter()) {
            *pi -= 0.5 * dt * gi;
        }
        for (qi, pi) in q.iter_mut().zip(p.iter()) {
            *qi += dt * pi;
        }
        energy = target.energy_grad(q, grad);
        for (pi, gi) in p.iter_mut().zip(grad.iter()) {
            *pi -= 0.5 * dt * gi;
        }
    }
    energy
}

/// Integrates `steps` leapfrog steps from `(q, p)`.
pub fn leapfrog(target: &dyn Target, q: &[f64], p: &[f64], dt: f64, steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim(target, q)?;
    check_dim(target, p)?;
    let (mut q, mut p) = (q.to_vec(), p.to_vec());
    let mut grad = vec![0.0; q.len()];
    eval_checked(target, &q, &mut grad)?;
    leapfrog_in_place(target, &mut q, &mut p, &mut grad, dt, steps);
    Ok((q, p))
}

fn kinetic(p: &[f64]) -> f64 {
    0.5 * p.iter().map(|v| v * v).sum::<f64>()
}

/// Runs the Metropolis-corrected leapfrog on `(q, p)` in place. Returns
/// `(accepted, delta_h)`; non-finite energies count as rejections.
fn hamiltonian_move<R: Rng + ?Sized>(
    target: &dyn Target,
    q: &mut [f64],
    p: &mut [f64],
    dt: f64,
    steps: usize,
    rng: &mut R,
    ws: &mut Workspace,
) -> Result<(bool, f64)> {
    let u0 = eval_checked(target, q, &mut ws.grad)?;
    let h0 = u0 + kinetic(p);
    ws.q0.copy_from_slice(q);
    ws.p0.copy_from_slice(p);
    let u1 = leapfrog_in_place(target, q, p, &mut ws.grad, dt, steps);
    let delta_h = u1 + kinetic(p) - h0;
    let uniform: f64 = rng.random();
    let accept = delta_h.is_finite() && (delta_h <= 0.0 || uniform.ln() < -delta_h);
    if !accept {
        q.copy_from_slice(&ws.q0);
        p.copy_from_slice(&ws.p0);
    }
    Ok((accept, delta_h))
}

fn hmc_kernel<R: Rng + ?Sized>(
    target: &dyn Target,
    q: &mut [f64],
    dt: f64,
    steps: usize,
    rng: &mut R,
    ws: &mut Workspace,
) -> Result<(bool, f64)> {
    let mut p: Vec<f64> = (0..q.len()).map(|_| gaussian(rng)).collect();
    hamiltonian_move(target, q, &mut p, dt, steps, rng, ws)
}

/// Hybrid Monte Carlo step with a fresh momentum and `steps` leapfrog steps.
/// Returns `(q', accepted, delta_h)`.
pub fn hmc_step<R: Rng + ?Sized>(
    target: &dyn Target,
    q: &[f64],
    dt: f64,
    steps: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, bool, f64)> {
    check_dim(target, q)?;
    if steps == 0 {
        return Err(Error::Config("leapfrog steps must be at least 1".into()));
    }
    let mut out = q.to_vec();
    let (accepted, dh) = hmc_kernel(target, &mut out, dt, steps, rng, &mut Workspace::new(q.len()))?;
    Ok((out, accepted, dh))
}

fn ghmc_kernel<R: Rng + ?Sized>(
    target: &dyn Target,
    q: &mut [f64],
    p: &mut [f64],
    dt: f64,
    angle: f64,
    flip: bool,
    rng: &mut R,
    ws: &mut Workspace,
) -> Result<bool> {
    let (c, s) = (angle.cos(), angle.sin());
    for pi in p.iter_mut() {
        *pi = c * *pi + s * gaussian(rng);
    }
    let (accepted, _) = hamiltonian_move(target, q, p, dt, 1, rng, ws)?;
    if flip {
        for pi in p.iter_mut() {
            *pi = -*pi;
        }
    }
    Ok(accepted)
}

/// Generalized HMC: partial momentum refresh, one leapfrog step, Metropolis
/// test, then (if `flip`) a momentum negation regardless of the outcome.
pub fn ghmc_step<R: Rng + ?Sized>(
    target: &dyn Target,
    q: &[f64],
    p: &[f64],
    dt: f64,
    angle: f64,
    flip: bool,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    check_dim(target, q)?;
    check_dim(target, p)?;
    let (mut q, mut p) = (q.to_vec(), p.to_vec());
    let mut ws = Workspace::new(q.len());
    let accepted = ghmc_kernel(target, &mut q, &mut p, dt, angle, flip, rng, &mut ws)?;
    Ok((q, p, accepted))
}

/// Coefficients `(sqrt(1 - 2 gamma dt), sqrt(2 gamma dt))` of the O stage.
pub fn langevin_coefficients(dt: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(gamma >= 0.0) {
        return Err(Error::Config(format!("gamma must be nonnegative, got {gamma}")));
    }
    let mut damp = 1.0 - 2.0 * gamma * dt;
    if damp.abs() < O_STAGE_SNAP {
        damp = 0.0;
    }
    if damp < 0.0 {
        return Err(Error::Config(format!("2 gamma dt = {} exceeds 1", 2.0 * gamma * dt)));
    }
    Ok((damp.sqrt(), (1.0 - damp).sqrt()))
}

fn langevin_kernel<R: Rng + ?Sized>(
    target: &dyn Target,
    q: &mut [f64],
    p: &mut [f64],
    dt: f64,
    (damp, kick): (f64, f64),
    rng: &mut R,
    ws: &mut Workspace,
) -> Result<()> {
    if !ws.grad_valid {
        eval_checked(target, q, &mut ws.grad)?;
    }
    let half = 0.5 * dt;
    // B: force is -grad U
    for (pi, gi) in p.iter_mut().zip(&ws.grad) {
        *pi -= half * gi;
    }
    // A
    for (qi, pi) in q.iter_mut().zip(p.iter()) {
        *qi += half * pi;
    }
    // O
    for pi in p.iter_mut() {
        *pi = damp * *pi + kick * gaussian(rng);
    }
    // A
    for (qi, pi) in q.iter_mut().zip(p.iter()) {
        *qi += half * pi;
    }
    ws.grad_valid = false;
    eval_checked(target, q, &mut ws.grad)?;
    ws.grad_valid = true;
    // B
    for (pi, gi) in p.iter_mut().zip(&ws.grad) {
        *pi -= half * gi;
    }
    Ok(())
}

/// One step of the B-A-O-A-B reversible Langevin integrator.
pub fn reversible_langevin_step<R: Rng + ?Sized>(
    target: &dyn Target,
    q: &[f64],
    p: &[f64],
    dt: f64,
    gamma: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim(target, q)?;
    check_dim(target, p)?;
    let coefs = langevin_coefficients(dt, gamma)?;
    let (mut q, mut p) = (q.to_vec(), p.to_vec());
    let mut ws = Workspace::new(q.len());
    langevin_kernel(target, &mut q, &mut p, dt, coefs, rng, &mut ws)?;
    Ok((q, p))
}

/// Runs a chain, discarding `burn_in` steps and then keeping every
/// `stride`-th state. The initial state itself is never retained.
pub fn run_chain(target: &dyn Target, kind: SamplerKind, config: &ChainConfig, initial: &[f64]) -> Result<Trajectory> {
    config.validate(kind)?;
    check_dim(target, initial)?;
    let dim = target.dim();
    let dt = config.step_size;
    let mut rng = config.rng();
    let mut ws = Workspace::new(dim);
    let mut q = initial.to_vec();
    let mut p: Vec<f64> = if kind.has_momentum() {
        (0..dim).map(|_| gaussian(&mut rng)).collect()
    } else {
        Vec::new()
    };
    let coefs = match kind {
        SamplerKind::Elm => (0.0, 1.0),
        SamplerKind::Langevin => langevin_coefficients(dt, config.gamma)?,
        _ => (0.0, 0.0),
    };

    let mut states = Vec::with_capacity(config.n_retained() * dim);
    let mut accepted = 0usize;
    for step in 1..=config.n_steps {
        let ok = match kind {
            SamplerKind::Em => em_kernel(target, &mut q, dt, &mut rng, &mut ws).map(|_| true),
            SamplerKind::Mala => mala_kernel(target, &mut q, dt, &mut rng, &mut ws),
            SamplerKind::Hmc => {
                hmc_kernel(target, &mut q, dt, config.hmc_leapfrog_steps, &mut rng, &mut ws).map(|(a, _)| a)
            }
            SamplerKind::Ghmc | SamplerKind::GhmcModified => ghmc_kernel(
                target,
                &mut q,
                &mut p,
                dt,
                config.ghmc_mix_angle,
                kind == SamplerKind::Ghmc,
                &mut rng,
                &mut ws,
            ),
            SamplerKind::Langevin | SamplerKind::Elm => {
                langevin_kernel(target, &mut q, &mut p, dt, coefs, &mut rng, &mut ws).map(|_| true)
            }
        }
        .map_err(|e| Error::AtStep {
            step,
            source: Box::new(e),
        })?;
        accepted += ok as usize;
        if step > config.burn_in && (step - config.burn_in) % config.stride == 0 {
            states.extend_from_slice(&q);
        }
    }
    Ok(Trajectory {
        states,
        dim,
        sampler: kind,
        config: config.clone(),
        target: target.label().to_string(),
        acceptance_rate: accepted as f64 / config.n_steps as f64,
    })
}

/// Runs `members` chains in parallel on streams `0..members`.
pub fn run_ensemble(
    target: &dyn Target,
    kind: SamplerKind,
    config: &ChainConfig,
    initial: &[f64],
    members: usize,
) -> Result<Vec<Trajectory>> {
    (0..members as u64)
        .into_par_iter()
        .map(|stream| {
            let cfg = ChainConfig {
                stream,
                ..config.clone()
            };
            run_chain(target, kind, &cfg, initial)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{FnTarget, StdGaussian};

    fn gauss1() -> StdGaussian {
        StdGaussian::new(1).unwrap()
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    fn lag1(xs: &[f64]) -> f64 {
        let (mean, var) = mean_var(xs);
        let n = xs.len();
        let c1: f64 = (0..n - 1).map(|i| (xs[i] - mean) * (xs[i + 1] - mean)).sum::<f64>() / n as f64;
        c1 / var
    }

    fn cfg(dt: f64, n_steps: usize, stride: usize, seed: u64) -> ChainConfig {
        ChainConfig {
            step_size: dt,
            n_steps,
            stride,
            seed,
            ..ChainConfig::default()
        }
    }

    #[test]
    fn em_update_without_noise_contracts() {
        let q = em_update(&gauss1(), &[1.0], 0.02, &[0.0]).unwrap();
        assert!((q[0] - 0.98).abs() < 1e-15);
    }

    #[test]
    fn em_nonfinite_gradient_reports_state() {
        let t = FnTarget::new(1, "bad", |_q: &[f64], g: &mut [f64]| {
            g[0] = f64::NAN;
            0.0
        });
        let mut rng = chain_rng(0, 0);
        let err = em_brownian_step(&t, &[0.5], 0.1, &mut rng).unwrap_err();
        assert_eq!(err, Error::NonFiniteGradient { state: vec![0.5] });
        let err = run_chain(&t, SamplerKind::Em, &cfg(0.1, 10, 1, 0), &[0.5]).unwrap_err();
        assert!(matches!(err, Error::AtStep { step: 1, .. }));
    }

    #[test]
    fn em_chain_matches_ar1_statistics() {
        let traj = run_chain(&gauss1(), SamplerKind::Em, &cfg(0.02, 1_000_000, 1, 1), &[0.0]).unwrap();
        let xs = traj.coordinate(0);
        assert!((lag1(&xs) - 0.98).abs() < 0.001, "lag1 {}", lag1(&xs));
        let (_, var) = mean_var(&xs);
        // AR(1) stationary variance 2 dt / (1 - (1 - dt)^2) = 1/(1 - dt/2)
        assert!((var - 1.0 / 0.99).abs() < 0.05, "var {var}");
    }

    #[test]
    fn strided_em_chain_has_lag1_near_exp_minus_point_one() {
        let traj = run_chain(&gauss1(), SamplerKind::Em, &cfg(0.02, 2_000_000, 5, 2), &[0.0]).unwrap();
        assert_eq!(traj.n_samples(), 400_000);
        let rho = lag1(&traj.coordinate(0));
        assert!((rho - 0.98f64.powi(5)).abs() < 0.005, "rho {rho}");
    }

    #[test]
    fn mala_stationary_proposal_is_accepted() {
        let r = mala_log_ratio(&gauss1(), &[0.0], &[0.0], 0.02).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn mala_ratio_is_antisymmetric() {
        let t = crate::targets::LMixture;
        let q = [0.3, 1.7];
        let q_star = [0.1, 1.9];
        let fwd = mala_log_ratio(&t, &q, &q_star, 0.02).unwrap();
        let bwd = mala_log_ratio(&t, &q_star, &q, 0.02).unwrap();
        assert!((fwd.exp() * bwd.exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mala_acceptance_is_high_for_small_steps() {
        let traj = run_chain(&gauss1(), SamplerKind::Mala, &cfg(0.02, 100_000, 1, 3), &[0.0]).unwrap();
        assert!(traj.acceptance_rate >= 0.99, "{}", traj.acceptance_rate);
    }

    #[test]
    fn mala_satisfies_detailed_balance_on_bins() {
        let traj = run_chain(&gauss1(), SamplerKind::Mala, &cfg(0.5, 1_000_000, 1, 4), &[0.0]).unwrap();
        let bin = |x: f64| if x <= -1.0 { 0 } else if x <= 1.0 { 1 } else { 2 };
        let xs = traj.coordinate(0);
        let mut flow = [[0f64; 3]; 3];
        for w in xs.windows(2) {
            flow[bin(w[0])][bin(w[1])] += 1.0;
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let (a, b) = (flow[i][j], flow[j][i]);
                let se = (a + b).sqrt().max(1.0);
                assert!((a - b).abs() <= 3.0 * se, "flow {i}->{j} {a} vs {b}");
            }
        }
    }

    #[test]
    fn leapfrog_is_time_reversible() {
        let t = crate::targets::LMixture;
        let (q1, p1) = leapfrog(&t, &[0.2, 1.0], &[0.3, -0.4], 0.01, 10).unwrap();
        let back_p: Vec<f64> = p1.iter().map(|v| -v).collect();
        let (q2, _) = leapfrog(&t, &q1, &back_p, 0.01, 10).unwrap();
        assert!((q2[0] - 0.2).abs() < 1e-10 && (q2[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hmc_energy_error_is_second_order() {
        let t = gauss1();
        // Trajectory length is held at 1 so only the step size changes.
        let mean_abs_dh = |dt: f64| {
            let steps = (1.0 / dt).round() as usize;
            let mut rng = chain_rng(5, 0);
            let mut q = vec![0.0];
            let mut total = 0.0;
            for _ in 0..20_000 {
                let (next, _, dh) = hmc_step(&t, &q, dt, steps, &mut rng).unwrap();
                total += dh.abs();
                q = next;
            }
            total / 20_000.0
        };
        let ratio = mean_abs_dh(0.1) / mean_abs_dh(0.05);
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
        assert!(mean_abs_dh(1e-3) < 1e-5);
    }

    #[test]
    fn ghmc_rejection_flips_momentum() {
        // A potential that is finite only at the start forces rejection.
        let t = FnTarget::new(1, "wall", |q: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            if q[0] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        });
        let mut rng = chain_rng(0, 0);
        let angle = 1e-300; // no refresh
        let (q, p, acc) = ghmc_step(&t, &[0.0], &[0.7], 0.1, angle, true, &mut rng).unwrap();
        assert!(!acc);
        assert_eq!(q, vec![0.0]);
        assert_eq!(p, vec![-0.7]);
        let (_, p, _) = ghmc_step(&t, &[0.0], &[0.7], 0.1, angle, false, &mut rng).unwrap();
        assert_eq!(p, vec![0.7]);
    }

    #[test]
    fn ghmc_full_refresh_ignores_the_flip_for_positions() {
        let t = gauss1();
        let right = std::f64::consts::FRAC_PI_2;
        let mut a = chain_rng(9, 0);
        let mut b = chain_rng(9, 0);
        // With angle pi/2, cos is ~6e-17, so the old momentum barely matters.
        let (qa, _, _) = ghmc_step(&t, &[0.4], &[1.0], 0.1, right, true, &mut a).unwrap();
        let (qb, _, _) = ghmc_step(&t, &[0.4], &[-1.0], 0.1, right, true, &mut b).unwrap();
        assert!((qa[0] - qb[0]).abs() < 1e-15);
    }

    #[test]
    fn ghmc_stationary_variance() {
        let mut c = cfg(0.1, 10_000_000, 10, 6);
        c.ghmc_mix_angle = 0.5;
        let traj = run_chain(&gauss1(), SamplerKind::GhmcModified, &c, &[0.0]).unwrap();
        let (_, var) = mean_var(&traj.coordinate(0));
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn elm_coefficients_are_exact() {
        for dt in [0.1, 0.05, 0.02, 0.03, 0.07] {
            let gamma = 1.0 / (2.0 * dt);
            assert_eq!(langevin_coefficients(dt, gamma).unwrap(), (0.0, 1.0));
        }
        assert!(langevin_coefficients(0.1, 5.1).is_err());
        assert!(langevin_coefficients(0.1, -1.0).is_err());
    }

    #[test]
    fn langevin_free_flight() {
        let free = FnTarget::new(2, "free", |_q: &[f64], g: &mut [f64]| {
            g.fill(0.0);
            0.0
        });
        let mut rng = chain_rng(0, 0);
        let (q, p) = reversible_langevin_step(&free, &[1.0, 2.0], &[0.5, -1.0], 0.1, 0.0, &mut rng).unwrap();
        assert_eq!(p, vec![0.5, -1.0]);
        assert!((q[0] - 1.05).abs() < 1e-15 && (q[1] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn langevin_rejects_large_friction() {
        let mut c = cfg(0.1, 10, 1, 0);
        c.gamma = 6.0;
        assert!(matches!(
            run_chain(&gauss1(), SamplerKind::Langevin, &c, &[0.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn langevin_stationary_variance() {
        // 10^6 retained states, thinned so that sampling error sits well below 0.01.
        let mut c = cfg(0.05, 20_000_000, 20, 7);
        c.gamma = 1.0;
        let traj = run_chain(&gauss1(), SamplerKind::Langevin, &c, &[0.0]).unwrap();
        assert_eq!(traj.n_samples(), 1_000_000);
        let (_, var) = mean_var(&traj.coordinate(0));
        assert!((var - 1.0).abs() <= 0.01, "var {var}");
    }

    #[test]
    fn retained_count_and_determinism() {
        let t = gauss1();
        let c = cfg(0.02, 100, 5, 42);
        let a = run_chain(&t, SamplerKind::Em, &c, &[0.0]).unwrap();
        assert_eq!(a.n_samples(), 20);
        let b = run_chain(&t, SamplerKind::Em, &c, &[0.0]).unwrap();
        assert_eq!(a, b);
        let mut c2 = c.clone();
        c2.burn_in = 7;
        assert_eq!(run_chain(&t, SamplerKind::Em, &c2, &[0.0]).unwrap().n_samples(), 18);
        for kind in SamplerKind::ALL {
            let x = run_chain(&t, kind, &c, &[0.1]).unwrap();
            let y = run_chain(&t, kind, &c, &[0.1]).unwrap();
            assert_eq!(x, y, "{kind}");
        }
    }

    #[test]
    fn streams_are_independent() {
        let t = gauss1();
        let runs = run_ensemble(&t, SamplerKind::Em, &cfg(0.02, 50, 1, 1), &[0.0], 3).unwrap();
        assert_ne!(runs[0].coordinate(0), runs[1].coordinate(0));
        assert_eq!(runs[2].config.stream, 2);
    }

    #[test]
    fn sampler_ids_round_trip() {
        for kind in SamplerKind::ALL {
            assert_eq!(kind.id().parse::<SamplerKind>().unwrap(), kind);
        }
        assert!("nuts".parse::<SamplerKind>().is_err());
    }
}
