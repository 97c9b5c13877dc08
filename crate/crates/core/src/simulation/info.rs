//! Information-gain bookkeeping.

use crate::model::{log_sigmoid, PriorSpec};

/// Entropy reduction between two Gaussian marginals, `ln(prior_sd / posterior_sd)`.
/// Negative when the posterior is wider than the prior.
pub fn information_gain(prior_sd: f64, posterior_sd: f64) -> f64 {
    (prior_sd / posterior_sd).ln()
}

pub const GRID_POINTS: usize = 2001;

/// Posterior mean and sd of one ability given answers to items with known
/// difficulties, by quadrature on an evenly spaced grid spanning six prior
/// standard deviations either side of the prior mean.
pub fn grid_ability_posterior(answers: &[(bool, f64)], prior: &PriorSpec) -> (f64, f64) {
    let lo = prior.theta_mean - 6.0 * prior.theta_sd;
    let step = 12.0 * prior.theta_sd / (GRID_POINTS - 1) as f64;
    let log_w: Vec<f64> = (0..GRID_POINTS)
        .map(|k| {
            let t = lo + k as f64 * step;
            let z = (t - prior.theta_mean) / prior.theta_sd;
            let ll: f64 = answers
                .iter()
                .map(|&(y, d)| if y { log_sigmoid(t - d) } else { log_sigmoid(d - t) })
                .sum();
            -0.5 * z * z + ll
        })
        .collect();
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let mean = w
        .iter()
        .enumerate()
        .map(|(k, wk)| wk * (lo + k as f64 * step))
        .sum::<f64>()
        / total;
    let var = w
        .iter()
        .enumerate()
        .map(|(k, wk)| wk * (lo + k as f64 * step - mean).powi(2))
        .sum::<f64>()
        / total;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_examples() {
        assert!((information_gain(2.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(information_gain(1.3, 1.3), 0.0);
        assert!(information_gain(1.0, 1.5) < 0.0);
    }

    #[test]
    fn grid_without_data_recovers_prior() {
        let prior = PriorSpec::default();
        let (m, s) = grid_ability_posterior(&[], &prior);
        assert!(m.abs() < 1e-9);
        assert!((s - 2.0).abs() < 1e-3);
    }

    #[test]
    fn more_answers_shrink_the_grid_posterior() {
        let prior = PriorSpec::default();
        let few: Vec<(bool, f64)> = (0..4).map(|k| (k % 2 == 0, 0.0)).collect();
        let many: Vec<(bool, f64)> = (0..16).map(|k| (k % 2 == 0, 0.0)).collect();
        assert!(grid_ability_posterior(&many, &prior).1 < grid_ability_posterior(&few, &prior).1);
    }
}
