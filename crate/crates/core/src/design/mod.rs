//! Per-candidate design scores: information gain, expected utility and the
//! expected free energy that combines them.

pub mod duration;
pub mod eig;
pub mod utility;

use serde::{Deserialize, Serialize};

pub use duration::{fit_duration_model, DurationModel, DurationPrior, ItemDuration};
pub use eig::{
    eig_beta_bernoulli, eig_beta_bernoulli_exact, eig_joint_theta_delta, eig_marginal_bound,
    eig_nested_mc, eig_theta_only, marginal_bound_at, AbilityDesign, BetaBernoulliDesign,
    BinaryOutcomeDesign, EigEstimate, JointDesign, MarginalBound, SampleBudget, LIKELIHOOD_FLOOR,
};
pub use utility::{
    utility_discrimination, utility_discrimination_weighted, utility_slow_penalty, utility_success,
    PreferencePrior, BALANCED_GROUPS,
};

/// `G = -(EIG + U)`.
#[inline]
pub fn expected_free_energy(eig: f64, utility: f64) -> f64 {
    -(eig + utility)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignScore {
    pub design_id: usize,
    pub eig: f64,
    pub utility: f64,
    pub efe: f64,
}

impl DesignScore {
    pub fn new(design_id: usize, eig: f64, utility: f64) -> Self {
        Self {
            design_id,
            eig,
            utility,
            efe: expected_free_energy(eig, utility),
        }
    }

    /// Pure information-gain score.
    pub fn from_eig(design_id: usize, eig: f64) -> Self {
        Self::new(design_id, eig, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn efe_examples() {
        assert!((expected_free_energy(0.2, 0.1) + 0.3).abs() < 1e-15);
        assert_eq!(expected_free_energy(0.37, 0.0), -0.37);
        assert_eq!(expected_free_energy(0.0, -0.05), 0.05);
    }

    #[test]
    fn scores_serialize_as_json_array() {
        let s = vec![DesignScore::new(0, 0.1, 0.0), DesignScore::new(3, 0.2, -0.1)];
        let text = serde_json::to_string(&s).unwrap();
        let back: Vec<DesignScore> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #[test]
        fn score_consistency(eig in 0.0f64..5.0, u in -5.0f64..5.0) {
            let s = DesignScore::new(0, eig, u);
            let scale = eig.abs().max(u.abs()).max(1e-300);
            prop_assert!((s.efe + s.eig + s.utility).abs() <= 1e-12 * scale);
        }
    }
}
