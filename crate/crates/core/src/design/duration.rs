//! Log-normal response-time model used to penalize slow items.
//!
//! Each item `j` has `ln tau ~ Normal(mu_j, exp(eta_j))`. Both location and
//! log-scale get Gaussian priors and Gaussian mean-field posteriors fitted
//! with the same stochastic VI as the ability model. Durations do not enter
//! the item-response likelihood, so under the factorized guide this fit is
//! identical to fitting them jointly with abilities and difficulties.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{vi, Gaussian, LatentModel, MeanField, ViConfig};
use crate::model::{normal_logpdf, ResponseRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationPrior {
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub eta_mean: f64,
    pub eta_sd: f64,
}

impl Default for DurationPrior {
    fn default() -> Self {
        Self {
            mu_mean: 10f64.ln(),
            mu_sd: 1.5,
            eta_mean: -0.5,
            eta_sd: 0.75,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemDuration {
    /// Posterior over the log-duration location.
    pub mu: Gaussian,
    /// Posterior over the log of the log-duration scale.
    pub eta: Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationModel {
    pub items: Vec<ItemDuration>,
    /// Threshold above which a response counts as slow, in seconds.
    pub sigma_tau: f64,
    /// Maximum penalty for a surely-slow item, in nats.
    pub gamma_slow: f64,
}

impl DurationModel {
    pub fn from_prior(prior: &DurationPrior, n_items: usize, sigma_tau: f64, gamma_slow: f64) -> Result<Self> {
        let item = ItemDuration {
            mu: Gaussian { mean: prior.mu_mean, sd: prior.mu_sd },
            eta: Gaussian { mean: prior.eta_mean, sd: prior.eta_sd },
        };
        let m = Self {
            items: vec![item; n_items],
            sigma_tau,
            gamma_slow,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_tau > 0.0) {
            return Err(Error::validation("duration.sigma_tau", "must be positive"));
        }
        if !(self.gamma_slow >= 0.0 && self.gamma_slow.is_finite()) {
            return Err(Error::validation("duration.gamma_slow", "must be nonnegative"));
        }
        Ok(())
    }

    /// Draw one duration from the item's posterior predictive.
    pub fn sample_duration<R: Rng + ?Sized>(&self, item_id: usize, rng: &mut R) -> f64 {
        let it = &self.items[item_id];
        let e: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let mu = it.mu.mean + it.mu.sd * e[0];
        let eta = it.eta.mean + it.eta.sd * e[1];
        (mu + eta.exp() * e[2]).exp()
    }
}

/// Latents `[mu_0.., eta_0..]` for items observed in `(item, duration)` pairs.
struct LogNormalDurations<'a> {
    prior: DurationPrior,
    n_items: usize,
    obs: &'a [(usize, f64)],
}

impl LatentModel for LogNormalDurations<'_> {
    fn dim(&self) -> usize {
        2 * self.n_items
    }

    fn log_joint(&self, z: &[f64]) -> f64 {
        let p = &self.prior;
        let (mu, eta) = z.split_at(self.n_items);
        let mut acc: f64 = mu.iter().map(|&m| normal_logpdf(m, p.mu_mean, p.mu_sd)).sum::<f64>()
            + eta.iter().map(|&e| normal_logpdf(e, p.eta_mean, p.eta_sd)).sum::<f64>();
        for &(j, ln_tau) in self.obs {
            acc += normal_logpdf(ln_tau, mu[j], eta[j].exp()) - ln_tau;
        }
        acc
    }

    fn accumulate_grad(&self, z: &[f64], grad: &mut [f64]) {
        let p = &self.prior;
        let n = self.n_items;
        for j in 0..n {
            grad[j] -= (z[j] - p.mu_mean) / (p.mu_sd * p.mu_sd);
            grad[n + j] -= (z[n + j] - p.eta_mean) / (p.eta_sd * p.eta_sd);
        }
        for &(j, ln_tau) in self.obs {
            let inv_var = (-2.0 * z[n + j]).exp();
            let r = ln_tau - z[j];
            grad[j] += r * inv_var;
            grad[n + j] += r * r * inv_var - 1.0;
        }
    }
}

/// Fit item duration posteriors from the records carrying `duration_s`.
pub fn fit_duration_model(
    prior: &DurationPrior,
    records: &[ResponseRecord],
    n_items: usize,
    sigma_tau: f64,
    gamma_slow: f64,
    cfg: &ViConfig,
) -> Result<DurationModel> {
    let obs: Vec<(usize, f64)> = records
        .iter()
        .filter_map(|r| r.duration_s.map(|d| (r.item_id, d)))
        .map(|(j, d)| {
            if j >= n_items {
                Err(Error::invalid(format!("item {j} outside {n_items} items")))
            } else if !(d > 0.0) {
                Err(Error::invalid(format!("non-positive duration {d}")))
            } else {
                Ok((j, d.ln()))
            }
        })
        .collect::<Result<_>>()?;
    let model = LogNormalDurations {
        prior: *prior,
        n_items,
        obs: &obs,
    };
    let init = MeanField::new(
        std::iter::repeat_n(prior.mu_mean, n_items)
            .chain(std::iter::repeat_n(prior.eta_mean, n_items))
            .collect(),
        std::iter::repeat_n(prior.mu_sd, n_items)
            .chain(std::iter::repeat_n(prior.eta_sd, n_items))
            .collect(),
    )?;
    let q = vi::fit(
        &model,
        &init,
        cfg.step_count,
        cfg.learning_rate,
        cfg.mc_samples_per_step,
        cfg.seed,
    )?;
    let items = (0..n_items)
        .map(|j| ItemDuration {
            mu: Gaussian { mean: q.mean[j], sd: q.sd[j] },
            eta: Gaussian { mean: q.mean[n_items + j], sd: q.sd[n_items + j] },
        })
        .collect();
    let dm = DurationModel {
        items,
        sigma_tau,
        gamma_slow,
    };
    dm.validate()?;
    Ok(dm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_gradient_matches_finite_differences() {
        let obs = vec![(0, 1.2), (1, 3.0), (1, 2.5), (0, 0.4)];
        let m = LogNormalDurations {
            prior: DurationPrior::default(),
            n_items: 2,
            obs: &obs,
        };
        let z = [1.0, 2.0, -0.3, 0.2];
        let mut g = [0.0; 4];
        m.accumulate_grad(&z, &mut g);
        for k in 0..4 {
            let h = 1e-6;
            let mut zp = z;
            let mut zm = z;
            zp[k] += h;
            zm[k] -= h;
            let fd = (m.log_joint(&zp) - m.log_joint(&zm)) / (2.0 * h);
            assert!((g[k] - fd).abs() / fd.abs().max(1e-3) < 1e-4, "{k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn fit_learns_slow_item() {
        let mut recs = Vec::new();
        for p in 0..30 {
            for (j, d) in [(0usize, 100.0), (1, 5.0)] {
                let mut r = ResponseRecord::new(p, j, 1);
                r.duration_s = Some(d * (1.0 + 0.05 * ((p % 5) as f64 - 2.0)));
                recs.push(r);
            }
        }
        let dm = fit_duration_model(&DurationPrior::default(), &recs, 2, 20.0, 1.0, &ViConfig::default()).unwrap();
        assert!((dm.items[0].mu.mean - 100f64.ln()).abs() < 0.2, "{:?}", dm.items[0]);
        assert!((dm.items[1].mu.mean - 5f64.ln()).abs() < 0.2, "{:?}", dm.items[1]);
    }

    #[test]
    fn invalid_threshold_rejected() {
        assert!(DurationModel::from_prior(&DurationPrior::default(), 2, 0.0, 1.0).is_err());
        assert!(DurationModel::from_prior(&DurationPrior::default(), 2, 5.0, -1.0).is_err());
    }
}
