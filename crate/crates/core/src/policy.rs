//! Turning scores and posteriors into the next design.
//!
//! Ties are always broken toward the lowest design id (or arm index) so that
//! seeded runs are reproducible.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::DesignScore;
use crate::error::{Error, Result};
use crate::inference::GroupedTreatmentPosterior;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    /// Stop once the best remaining design gains fewer nats than this.
    pub epsilon: f64,
    /// Designs always administered before the rule applies.
    pub min_trials: usize,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            min_trials: 1,
        }
    }
}

impl StoppingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::validation("stopping.epsilon", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDecision {
    /// `None` means stop.
    pub chosen: Option<usize>,
    pub scores: Vec<DesignScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_weights: Option<Vec<f64>>,
}

impl PolicyDecision {
    pub fn stop(scores: Vec<DesignScore>) -> Self {
        Self {
            chosen: None,
            scores,
            sampling_weights: None,
        }
    }

    pub fn is_stop(&self) -> bool {
        self.chosen.is_none()
    }
}

fn best_by<F>(scores: &[DesignScore], better: F) -> Option<&DesignScore>
where
    F: Fn(&DesignScore, &DesignScore) -> bool,
{
    scores.iter().fold(None, |best, s| match best {
        None => Some(s),
        Some(b) if better(s, b) || (!better(b, s) && s.design_id < b.design_id) => Some(s),
        Some(b) => Some(b),
    })
}

/// Maximize EIG; stop when the best EIG falls below `epsilon` once
/// `min_trials` designs have been administered.
pub fn select_greedy_eig(scores: &[DesignScore], stop: &StoppingConfig, trials_done: usize) -> PolicyDecision {
    let Some(best) = best_by(scores, |a, b| a.eig > b.eig) else {
        return PolicyDecision::stop(Vec::new());
    };
    if trials_done >= stop.min_trials && best.eig < stop.epsilon {
        return PolicyDecision::stop(scores.to_vec());
    }
    PolicyDecision {
        chosen: Some(best.design_id),
        scores: scores.to_vec(),
        sampling_weights: None,
    }
}

/// Minimize expected free energy. With `allow_stop`, doing nothing competes
/// at `G = 0` and is chosen only when every design has strictly positive `G`.
pub fn select_min_efe(scores: &[DesignScore], allow_stop: bool) -> PolicyDecision {
    let Some(best) = best_by(scores, |a, b| a.efe < b.efe) else {
        return PolicyDecision::stop(Vec::new());
    };
    if allow_stop && best.efe > 0.0 {
        return PolicyDecision::stop(scores.to_vec());
    }
    PolicyDecision {
        chosen: Some(best.design_id),
        scores: scores.to_vec(),
        sampling_weights: None,
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Monte Carlo probability that each treatment has the highest
/// group-mixture success rate under a joint posterior draw.
pub fn thompson_probabilities<R: Rng + ?Sized>(
    gp: &GroupedTreatmentPosterior,
    group_weights: &[f64],
    s: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let k = gp.n_treatments();
    if k < 2 {
        return Err(Error::invalid("Thompson probabilities need at least two arms"));
    }
    if s == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if group_weights.len() != gp.n_groups() {
        return Err(Error::invalid("one weight per group required"));
    }
    let mut wins = vec![0usize; k];
    let mut draw = vec![0.0; k];
    for _ in 0..s {
        for (arm, d) in draw.iter_mut().enumerate() {
            *d = group_weights
                .iter()
                .enumerate()
                .map(|(z, w)| w * gp.get(arm, z).sample(rng))
                .sum();
        }
        wins[argmax(&draw)] += 1;
    }
    Ok(wins.into_iter().map(|w| w as f64 / s as f64).collect())
}

/// Exploration-sampling reweighting `p_j (1 - p_j)`, renormalized; falls back
/// to a point mass on the most likely arm when every weight vanishes.
pub fn exploration_sampling_weights(p: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = (0..p.len())
        .map(|j| {
            let rest: f64 = p.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, v)| v).sum();
            p[j] * rest
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.into_iter().map(|w| w / total).collect()
    } else {
        let mut point = vec![0.0; p.len()];
        if !p.is_empty() {
            point[argmax(p)] = 1.0;
        }
        point
    }
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_arm<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Least-administered arm, lowest index on ties.
pub fn select_uniform_fixed(administration_counts: &[usize]) -> usize {
    administration_counts
        .iter()
        .enumerate()
        .min_by_key(|&(i, &c)| (c, i))
        .map(|(i, _)| i)
        .expect("at least one arm")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::BetaPosterior;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn eigs(values: &[f64]) -> Vec<DesignScore> {
        values
            .iter()
            .enumerate()
            .map(|(i, &e)| DesignScore::from_eig(i, e))
            .collect()
    }

    #[test]
    fn greedy_examples() {
        let stop = StoppingConfig { epsilon: 0.005, min_trials: 1 };
        assert!(select_greedy_eig(&eigs(&[0.004, 0.001]), &stop, 1).is_stop());
        assert_eq!(select_greedy_eig(&eigs(&[0.004, 0.001]), &stop, 0).chosen, Some(0));
        let stop = StoppingConfig { epsilon: 0.01, min_trials: 0 };
        assert_eq!(select_greedy_eig(&eigs(&[0.1, 0.3, 0.2]), &stop, 0).chosen, Some(1));
        assert_eq!(select_greedy_eig(&eigs(&[0.2, 0.2]), &stop, 0).chosen, Some(0));
        let empty = select_greedy_eig(&[], &stop, 0);
        assert!(empty.is_stop() && empty.scores.is_empty());
    }

    #[test]
    fn tie_break_uses_design_id_not_position() {
        let scores = vec![DesignScore::from_eig(7, 0.2), DesignScore::from_eig(3, 0.2)];
        let stop = StoppingConfig { epsilon: 0.0, min_trials: 0 };
        assert_eq!(select_greedy_eig(&scores, &stop, 0).chosen, Some(3));
        assert_eq!(select_min_efe(&scores, false).chosen, Some(3));
    }

    #[test]
    fn min_efe_examples() {
        let scores = vec![DesignScore::new(0, 0.3, 0.0), DesignScore::new(1, 0.1, 0.0)];
        assert_eq!(select_min_efe(&scores, false).chosen, Some(0));
        let costly = vec![DesignScore::new(0, 0.01, -0.05), DesignScore::new(1, 0.02, -0.03)];
        assert!(select_min_efe(&costly, true).is_stop());
        assert_eq!(select_min_efe(&costly, false).chosen, Some(1));
        // an action at exactly G = 0 is still taken
        let tie = vec![DesignScore::new(0, 0.05, -0.05)];
        assert_eq!(select_min_efe(&tie, true).chosen, Some(0));
    }

    #[test]
    fn exploration_weights_examples() {
        assert_eq!(exploration_sampling_weights(&[0.9, 0.1]), vec![0.5, 0.5]);
        let w = exploration_sampling_weights(&[0.5, 0.3, 0.2]);
        for (a, b) in w.iter().zip([0.403226, 0.338710, 0.258065]) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(exploration_sampling_weights(&[1.0, 0.0, 0.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn sample_arm_examples() {
        let mut rng = seeded(5);
        for _ in 0..100 {
            assert_eq!(sample_arm(&[1.0, 0.0], &mut rng), 0);
            assert_eq!(sample_arm(&[0.0, 1.0], &mut rng), 1);
        }
        let n = 100_000;
        let zeros = (0..n).filter(|_| sample_arm(&[0.5, 0.5], &mut rng) == 0).count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
        let a: Vec<usize> = (0..20).map(|_| sample_arm(&[0.2, 0.3, 0.5], &mut seeded(9))).collect();
        let b: Vec<usize> = (0..20).map(|_| sample_arm(&[0.2, 0.3, 0.5], &mut seeded(9))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_fixed_round_robin() {
        assert_eq!(select_uniform_fixed(&[3, 1, 2]), 1);
        assert_eq!(select_uniform_fixed(&[2, 2, 2]), 0);
        let mut counts = vec![0usize; 4];
        for _ in 0..4 * 6 {
            let arm = select_uniform_fixed(&counts);
            counts[arm] += 1;
        }
        assert!(counts.iter().all(|&c| c == 6));
    }

    #[test]
    fn thompson_dominance_and_symmetry() {
        let mut gp = GroupedTreatmentPosterior::uniform(2, 1).unwrap();
        gp.set(0, 0, BetaPosterior::new(9000.0, 1000.0).unwrap());
        gp.set(1, 0, BetaPosterior::new(1000.0, 9000.0).unwrap());
        let p = thompson_probabilities(&gp, &[1.0], 2000, &mut seeded(1)).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);

        let gp = GroupedTreatmentPosterior::uniform(4, 1).unwrap();
        let s = 40_000;
        let p = thompson_probabilities(&gp, &[1.0], s, &mut seeded(2)).unwrap();
        let se = (0.25 * 0.75 / s as f64).sqrt();
        assert!(p.iter().all(|pj| (pj - 0.25).abs() < 3.0 * se), "{p:?}");
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thompson_rejects_single_arm() {
        let gp = GroupedTreatmentPosterior::uniform(1, 1).unwrap();
        assert!(thompson_probabilities(&gp, &[1.0], 10, &mut seeded(0)).is_err());
    }

    proptest! {
        #[test]
        fn exploration_weights_sum_to_one(raw in proptest::collection::vec(0.0f64..1.0, 2..8)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 0.0);
            let p: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let w = exploration_sampling_weights(&p);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(w.iter().all(|x| *x >= 0.0));
        }

        #[test]
        fn two_arm_exploration_is_even(p in 0.0001f64..0.9999) {
            prop_assert_eq!(exploration_sampling_weights(&[p, 1.0 - p]), vec![0.5, 0.5]);
        }

        #[test]
        fn stopping_is_monotone_in_epsilon(values in proptest::collection::vec(0.0f64..0.5, 1..10), eps in 0.0f64..0.5, bump in 0.0f64..0.5) {
            let scores = eigs(&values);
            let lo = StoppingConfig { epsilon: eps, min_trials: 0 };
            let hi = StoppingConfig { epsilon: eps + bump, min_trials: 0 };
            if select_greedy_eig(&scores, &lo, 3).is_stop() {
                prop_assert!(select_greedy_eig(&scores, &hi, 3).is_stop());
            }
        }

        #[test]
        fn greedy_and_min_efe_agree_without_utility(values in proptest::collection::vec(0.0f64..1.0, 1..12)) {
            let scores = eigs(&values);
            let stop = StoppingConfig { epsilon: 0.0, min_trials: 0 };
            prop_assert_eq!(
                select_greedy_eig(&scores, &stop, 0).chosen,
                select_min_efe(&scores, false).chosen
            );
        }
    }
}
