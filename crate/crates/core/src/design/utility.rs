//! Expected-utility terms `E_q[ln p*(outcome)]` from preference priors.
//! Normalization constants of the preference priors are dropped; only
//! differences across designs matter for selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::duration::DurationModel;
use crate::error::{Error, Result};
use crate::inference::GroupedTreatmentPosterior;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferencePrior {
    pub gamma: f64,
}

impl PreferencePrior {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::validation("preference.gamma", format!("must be >= 0, got {gamma}")));
        }
        Ok(Self { gamma })
    }
}

impl Default for PreferencePrior {
    fn default() -> Self {
        Self { gamma: 0.1 }
    }
}

/// Balanced two-group recruitment.
pub const BALANCED_GROUPS: [f64; 2] = [0.5, 0.5];

/// Preference for outcomes matching the group (`y = z`), weighted by the
/// group marginal `q(z)`: `gamma * [q(y = z | j) - q(y != z | j)]`.
pub fn utility_discrimination_weighted(
    gp: &GroupedTreatmentPosterior,
    treatment: usize,
    pref: &PreferencePrior,
    group_weights: [f64; 2],
) -> f64 {
    let p11 = gp.get(treatment, 1).mean();
    let p10 = gp.get(treatment, 0).mean();
    let [w0, w1] = group_weights;
    let matched = w1 * p11 + w0 * (1.0 - p10);
    let mismatched = w1 * (1.0 - p11) + w0 * p10;
    pref.gamma * (matched - mismatched)
}

/// [`utility_discrimination_weighted`] with balanced groups.
pub fn utility_discrimination(gp: &GroupedTreatmentPosterior, treatment: usize, pref: &PreferencePrior) -> f64 {
    utility_discrimination_weighted(gp, treatment, pref, BALANCED_GROUPS)
}

/// Preference for success (`ln p*(1) = gamma`, `ln p*(0) = -gamma`) on the
/// group-mixture predictive: `gamma * (2 q(y = 1 | j) - 1)`.
pub fn utility_success(gp: &GroupedTreatmentPosterior, treatment: usize, pref: &PreferencePrior, group_weights: &[f64]) -> f64 {
    let q = gp.mixture_mean(treatment, group_weights);
    pref.gamma * (2.0 * q - 1.0)
}

/// Penalty for items likely to exceed the duration threshold:
/// `-(gamma_slow / s) * #{tau_s > sigma_tau}` over predictive draws.
pub fn utility_slow_penalty<R: Rng + ?Sized>(
    dm: &DurationModel,
    item_id: usize,
    s: usize,
    rng: &mut R,
) -> Result<f64> {
    if s == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if item_id >= dm.items.len() {
        return Err(Error::invalid(format!("no duration model for item {item_id}")));
    }
    if dm.gamma_slow == 0.0 {
        return Ok(0.0);
    }
    let slow = (0..s)
        .filter(|_| dm.sample_duration(item_id, rng) > dm.sigma_tau)
        .count();
    Ok(-dm.gamma_slow * slow as f64 / s as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::duration::{DurationPrior, ItemDuration};
    use crate::inference::{BetaPosterior, Gaussian};
    use crate::rng::seeded;

    fn grid(p11: f64, p00: f64) -> GroupedTreatmentPosterior {
        // predictive of Beta(a, b) is a / (a + b); use large totals for exact ratios
        let mut g = GroupedTreatmentPosterior::uniform(1, 2).unwrap();
        let cell = |p: f64| {
            if p == 0.0 {
                BetaPosterior { alpha: 0.0, beta: 1.0 }
            } else if p == 1.0 {
                BetaPosterior { alpha: 1.0, beta: 0.0 }
            } else {
                BetaPosterior::new(p * 100.0, (1.0 - p) * 100.0).unwrap()
            }
        };
        g.set(0, 1, cell(p11));
        g.set(0, 0, cell(1.0 - p00));
        g
    }

    #[test]
    fn discrimination_examples() {
        let pref = PreferencePrior::new(0.1).unwrap();
        assert!(utility_discrimination(&grid(0.5, 0.5), 0, &pref).abs() < 1e-12);
        assert!((utility_discrimination(&grid(1.0, 1.0), 0, &pref) - 0.1).abs() < 1e-12);
        assert!((utility_discrimination(&grid(0.0, 0.0), 0, &pref) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn discrimination_is_odd_around_half() {
        let pref = PreferencePrior::new(0.3).unwrap();
        for (a, b) in [(0.7, 0.2), (0.15, 0.9), (0.5, 0.61)] {
            let u = utility_discrimination(&grid(a, b), 0, &pref);
            let flipped = utility_discrimination(&grid(1.0 - a, 1.0 - b), 0, &pref);
            assert!((u + flipped).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_must_be_nonnegative() {
        assert!(PreferencePrior::new(-0.1).is_err());
        assert!(PreferencePrior::new(f64::NAN).is_err());
    }

    fn pinned(ln_tau: f64, sigma_tau: f64) -> DurationModel {
        DurationModel {
            items: vec![ItemDuration {
                mu: Gaussian { mean: ln_tau, sd: 1e-12 },
                eta: Gaussian { mean: -60.0, sd: 1e-12 },
            }],
            sigma_tau,
            gamma_slow: 0.7,
        }
    }

    #[test]
    fn slow_penalty_limits() {
        let mut rng = seeded(4);
        let mut dm = DurationModel::from_prior(&DurationPrior::default(), 1, f64::INFINITY, 0.7).unwrap();
        assert_eq!(utility_slow_penalty(&dm, 0, 500, &mut rng).unwrap(), 0.0);
        dm.sigma_tau = f64::MIN_POSITIVE;
        assert_eq!(utility_slow_penalty(&dm, 0, 500, &mut rng).unwrap(), -0.7);

        let ten = 10f64.ln();
        assert_eq!(utility_slow_penalty(&pinned(ten, 20.0), 0, 100, &mut rng).unwrap(), 0.0);
        assert_eq!(utility_slow_penalty(&pinned(ten, 5.0), 0, 100, &mut rng).unwrap(), -0.7);
        assert!(utility_slow_penalty(&pinned(ten, 5.0), 1, 100, &mut rng).is_err());
    }

    #[test]
    fn slow_penalty_bounded() {
        let dm = DurationModel::from_prior(&DurationPrior::default(), 1, 10.0, 0.4).unwrap();
        let u = utility_slow_penalty(&dm, 0, 2000, &mut seeded(8)).unwrap();
        assert!((-0.4..=0.0).contains(&u));
        assert!(u < 0.0 && u > -0.4);
    }
}
