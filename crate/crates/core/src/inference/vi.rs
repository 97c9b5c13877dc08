//! Stochastic mean-field Gaussian variational inference.
//!
//! The guide is a product of independent Gaussians parameterized by means
//! and log standard deviations. Gradients of the variational free energy
//! `E_q[ln q(z) - ln p(y, z)]` use the reparameterization `z = mean + sd * eps`
//! with the analytic Gaussian entropy, and the parameters are updated by Adam.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A differentiable unnormalized log-density over a flat latent vector.
pub trait LatentModel {
    fn dim(&self) -> usize;

    /// `ln p(y, z)`.
    fn log_joint(&self, z: &[f64]) -> f64;

    /// Add `d ln p(y, z) / dz` into `grad`.
    fn accumulate_grad(&self, z: &[f64], grad: &mut [f64]);
}

/// Independent Gaussian factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanField {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl MeanField {
    pub fn new(mean: Vec<f64>, sd: Vec<f64>) -> Result<Self> {
        if mean.len() != sd.len() {
            return Err(Error::invalid("mean and sd lengths differ"));
        }
        if let Some(s) = sd.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("sd must be positive and finite, got {s}")));
        }
        Ok(Self { mean, sd })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// `ln q(z)`.
    pub fn log_density(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(&self.mean)
            .zip(&self.sd)
            .map(|((&x, &m), &s)| {
                let u = (x - m) / s;
                -0.5 * (LN_2PI + u * u) - s.ln()
            })
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        self.sd
            .iter()
            .map(|s| 0.5 * (LN_2PI + 1.0) + s.ln())
            .sum()
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for ((o, &m), &s) in out.iter_mut().zip(&self.mean).zip(&self.sd) {
            let e: f64 = rng.sample(StandardNormal);
            *o = m + s * e;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViConfig {
    pub step_count: usize,
    pub learning_rate: f64,
    pub mc_samples_per_step: usize,
    pub seed: u64,
    /// Steps used when refitting from a warm start.
    #[serde(default = "default_warm_steps")]
    pub warm_steps: usize,
}

fn default_warm_steps() -> usize {
    120
}

impl Default for ViConfig {
    fn default() -> Self {
        Self {
            step_count: 500,
            learning_rate: 0.05,
            mc_samples_per_step: 8,
            seed: 0,
            warm_steps: default_warm_steps(),
        }
    }
}

impl ViConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_count == 0 || self.warm_steps == 0 {
            return Err(Error::validation("vi.step_count", "must be at least 1"));
        }
        if self.mc_samples_per_step == 0 {
            return Err(Error::validation("vi.mc_samples_per_step", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation("vi.learning_rate", "must be positive"));
        }
        Ok(())
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Monte Carlo estimate of `E_q[ln q(z) - ln p(y, z)]` from `s` draws.
pub fn free_energy<M: LatentModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    q: &MeanField,
    s: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if s == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if q.len() != model.dim() {
        return Err(Error::invalid(format!(
            "guide has {} latents, model has {}",
            q.len(),
            model.dim()
        )));
    }
    let mut z = vec![0.0; q.len()];
    let terms: Vec<f64> = (0..s)
        .map(|_| {
            q.sample_into(rng, &mut z);
            q.log_density(&z) - model.log_joint(&z)
        })
        .collect();
    Ok(Estimate::from_samples(&terms))
}

/// Gradient of the reparameterized free-energy estimate with respect to the
/// guide's means and log-sds, using the fixed noise `eps` (rows of length `dim`).
pub fn free_energy_grad<M: LatentModel + ?Sized>(
    model: &M,
    q: &MeanField,
    eps: &[f64],
    grad_mean: &mut [f64],
    grad_log_sd: &mut [f64],
) {
    let dim = q.len();
    let n = eps.len() / dim;
    grad_mean.fill(0.0);
    grad_log_sd.fill(0.0);
    let mut z = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for row in eps.chunks_exact(dim) {
        for k in 0..dim {
            z[k] = q.mean[k] + q.sd[k] * row[k];
        }
        g.fill(0.0);
        model.accumulate_grad(&z, &mut g);
        for k in 0..dim {
            grad_mean[k] -= g[k];
            grad_log_sd[k] -= g[k] * row[k] * q.sd[k];
        }
    }
    let inv = 1.0 / n as f64;
    for k in 0..dim {
        grad_mean[k] *= inv;
        // entropy term: d(-sum ln sd)/d ln sd = -1
        grad_log_sd[k] = grad_log_sd[k] * inv - 1.0;
    }
}

/// Reparameterized free energy with fixed noise; the deterministic surrogate
/// whose gradient [`free_energy_grad`] returns (analytic entropy form).
pub fn free_energy_surrogate<M: LatentModel + ?Sized>(model: &M, q: &MeanField, eps: &[f64]) -> f64 {
    let dim = q.len();
    let n = eps.len() / dim;
    let mut z = vec![0.0; dim];
    let mut acc = 0.0;
    for row in eps.chunks_exact(dim) {
        for k in 0..dim {
            z[k] = q.mean[k] + q.sd[k] * row[k];
        }
        acc -= model.log_joint(&z);
    }
    acc / n as f64 - q.entropy()
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Learning rate decays geometrically to this fraction over a fit.
const FINAL_LR_FRACTION: f64 = 0.1;
const MIN_LOG_SD: f64 = -12.0;
const MAX_LOG_SD: f64 = 6.0;

/// Minimize the free energy starting from `init` for `steps` Adam steps.
pub fn fit<M: LatentModel + ?Sized>(
    model: &M,
    init: &MeanField,
    steps: usize,
    learning_rate: f64,
    samples: usize,
    seed: u64,
) -> Result<MeanField> {
    let dim = model.dim();
    if init.len() != dim {
        return Err(Error::invalid(format!(
            "initial guide has {} latents, model has {dim}",
            init.len()
        )));
    }
    if steps == 0 || samples == 0 {
        return Err(Error::invalid("steps and samples must be at least 1"));
    }
    let mut rng = seeded(seed);
    let mut q = init.clone();
    let mut params: Vec<f64> = init.mean.iter().copied().chain(init.sd.iter().map(|s| s.ln())).collect();
    let mut adam = Adam::new(2 * dim);
    let mut eps = vec![0.0; samples * dim];
    let mut grad = vec![0.0; 2 * dim];

    for step in 0..steps {
        for e in eps.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        let (gm, gs) = grad.split_at_mut(dim);
        free_energy_grad(model, &q, &eps, gm, gs);
        if let Some(bad) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::InferenceFailure {
                step,
                message: format!("non-finite gradient for parameter {bad}"),
            });
        }
        let lr = learning_rate * FINAL_LR_FRACTION.powf(step as f64 / steps as f64);
        adam.step(&mut params, &grad, lr);
        for k in 0..dim {
            q.mean[k] = params[k];
            params[dim + k] = params[dim + k].clamp(MIN_LOG_SD, MAX_LOG_SD);
            q.sd[k] = params[dim + k].exp();
        }
        if !q.mean.iter().all(|m| m.is_finite()) {
            return Err(Error::InferenceFailure {
                step,
                message: "free energy diverged".into(),
            });
        }
    }

    let check = free_energy_surrogate(model, &q, &eps);
    if !check.is_finite() {
        return Err(Error::InferenceFailure {
            step: steps,
            message: format!("non-finite free energy {check}"),
        });
    }
    Ok(q)
}
