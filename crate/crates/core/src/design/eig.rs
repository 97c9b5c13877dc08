//! Expected information gain of a single binary-outcome design.
//!
//! Every design here reduces to a distribution over the success probability
//! `p(y = 1 | latents, design)`, sampled by [`BinaryOutcomeDesign::draw`].
//! Estimators enumerate both outcomes inside each sample instead of drawing
//! `y`, which keeps the estimate unbiased for the same expectation while
//! removing the outcome-sampling noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::inference::{BetaPosterior, Estimate, Gaussian, GroupedTreatmentPosterior, MeanFieldPosterior};
use crate::model::sigmoid;

/// Inner marginal likelihoods are clamped here before taking logs.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBudget {
    /// Outer samples (N).
    pub n_outer: usize,
    /// Inner samples for the marginal (M).
    pub n_inner: usize,
    /// Samples for utility terms (S).
    pub s_util: usize,
}

impl Default for SampleBudget {
    fn default() -> Self {
        Self {
            n_outer: 2000,
            n_inner: 2000,
            s_util: 1000,
        }
    }
}

impl SampleBudget {
    pub fn validate(&self) -> Result<()> {
        if self.n_outer == 0 || self.n_inner == 0 || self.s_util == 0 {
            return Err(Error::validation("budget", "all sample counts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Times the inner marginal hit [`LIKELIHOOD_FLOOR`].
    pub floor_hits: usize,
    /// Estimated marginal `p(y = 1 | design)`.
    pub marginal_success: f64,
}

/// A design whose outcome is Bernoulli given the latents.
pub trait BinaryOutcomeDesign {
    /// Draw latents from the current belief and return `p(y = 1 | latents)`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

/// Success probability itself is Beta distributed.
#[derive(Debug, Clone, Copy)]
pub struct BetaBernoulliDesign(pub BetaPosterior);

impl BinaryOutcomeDesign for BetaBernoulliDesign {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.0.sample(rng)
    }
}

/// 1PL item with an uncertain ability and a plug-in difficulty.
#[derive(Debug, Clone, Copy)]
pub struct AbilityDesign {
    pub ability: Gaussian,
    pub difficulty: f64,
}

impl BinaryOutcomeDesign for AbilityDesign {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = rng.sample(StandardNormal);
        sigmoid(self.ability.mean + self.ability.sd * e - self.difficulty)
    }
}

/// 1PL item with ability and difficulty both uncertain.
#[derive(Debug, Clone, Copy)]
pub struct JointDesign {
    pub ability: Gaussian,
    pub difficulty: Gaussian,
}

impl BinaryOutcomeDesign for JointDesign {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        sigmoid(
            self.ability.mean + self.ability.sd * e1 - (self.difficulty.mean + self.difficulty.sd * e2),
        )
    }
}

#[inline]
fn xlogx_ratio(p: f64, ln_q: f64) -> f64 {
    if p > 0.0 {
        p * (p.ln() - ln_q)
    } else {
        0.0
    }
}

/// Nested Monte Carlo EIG: `N` outer draws, each scored against a marginal
/// averaged over `M` independent inner draws.
pub fn eig_nested_mc<D: BinaryOutcomeDesign, R: Rng + ?Sized>(
    design: &D,
    budget: &SampleBudget,
    rng: &mut R,
) -> Result<EigEstimate> {
    budget.validate()?;
    let inner = (0..budget.n_inner).map(|_| design.draw(rng)).sum::<f64>() / budget.n_inner as f64;
    let mut floor_hits = 0;
    let mut clamp = |p: f64| {
        if p < LIKELIHOOD_FLOOR {
            floor_hits += 1;
            LIKELIHOOD_FLOOR
        } else {
            p
        }
    };
    let ln_m1 = clamp(inner).ln();
    let ln_m0 = clamp(1.0 - inner).ln();
    let terms: Vec<f64> = (0..budget.n_outer)
        .map(|_| {
            let p = design.draw(rng);
            xlogx_ratio(p, ln_m1) + xlogx_ratio(1.0 - p, ln_m0)
        })
        .collect();
    let est = Estimate::from_samples(&terms);
    Ok(EigEstimate {
        value: est.value,
        std_error: est.std_error,
        floor_hits,
        marginal_success: inner,
    })
}

/// EIG about `(theta_i, delta_j)` jointly for administering item `j` to
/// participant `i`.
pub fn eig_joint_theta_delta<R: Rng + ?Sized>(
    posterior: &MeanFieldPosterior,
    participant_id: usize,
    item_id: usize,
    budget: &SampleBudget,
    rng: &mut R,
) -> Result<EigEstimate> {
    if participant_id >= posterior.n_participants() || item_id >= posterior.n_items() {
        return Err(Error::invalid(format!(
            "no latent for participant {participant_id} / item {item_id}"
        )));
    }
    let design = JointDesign {
        ability: posterior.theta(participant_id),
        difficulty: posterior.delta(item_id),
    };
    eig_nested_mc(&design, budget, rng)
}

/// EIG about `theta_i` alone with the item difficulty fixed at its posterior mean.
pub fn eig_theta_only<R: Rng + ?Sized>(
    posterior: &MeanFieldPosterior,
    participant_id: usize,
    item_id: usize,
    budget: &SampleBudget,
    rng: &mut R,
) -> Result<EigEstimate> {
    if participant_id >= posterior.n_participants() || item_id >= posterior.n_items() {
        return Err(Error::invalid(format!(
            "no latent for participant {participant_id} / item {item_id}"
        )));
    }
    let design = AbilityDesign {
        ability: posterior.theta(participant_id),
        difficulty: posterior.delta(item_id).mean,
    };
    eig_nested_mc(&design, budget, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalBound {
    pub estimate: EigEstimate,
    /// Fitted `q(y = 1) = sigmoid(phi)`.
    pub q_success: f64,
}

/// Upper bound `E[ln p(y|latents) - ln q(y)]` at a fixed marginal `q(y = 1)`.
pub fn marginal_bound_at<D: BinaryOutcomeDesign, R: Rng + ?Sized>(
    design: &D,
    q_success: f64,
    n: usize,
    rng: &mut R,
) -> Result<EigEstimate> {
    if n == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if !(q_success > 0.0 && q_success < 1.0) {
        return Err(Error::invalid(format!("marginal must lie in (0, 1), got {q_success}")));
    }
    let ln_q1 = q_success.ln();
    let ln_q0 = (1.0 - q_success).ln();
    let mut mean_p = 0.0;
    let terms: Vec<f64> = (0..n)
        .map(|_| {
            let p = design.draw(rng);
            mean_p += p;
            xlogx_ratio(p, ln_q1) + xlogx_ratio(1.0 - p, ln_q0)
        })
        .collect();
    let est = Estimate::from_samples(&terms);
    Ok(EigEstimate {
        value: est.value,
        std_error: est.std_error,
        floor_hits: 0,
        marginal_success: mean_p / n as f64,
    })
}

const MARGINAL_LR: f64 = 1.0;
const MAX_LOGIT: f64 = 30.0;

/// Variational upper bound on the EIG with an inverse-logit Bernoulli
/// marginal `q(y = 1) = sigmoid(phi)`, fitted by stochastic gradient descent
/// on `opt_steps` batches of `n_inner` draws, then evaluated on `n_outer`
/// fresh draws.
pub fn eig_marginal_bound<D: BinaryOutcomeDesign, R: Rng + ?Sized>(
    design: &D,
    opt_steps: usize,
    budget: &SampleBudget,
    rng: &mut R,
) -> Result<MarginalBound> {
    budget.validate()?;
    let mut phi = 0.0f64;
    for step in 0..opt_steps {
        let batch_mean =
            (0..budget.n_inner).map(|_| design.draw(rng)).sum::<f64>() / budget.n_inner as f64;
        // d/dphi of -[p1 ln sigmoid(phi) + p0 ln sigmoid(-phi)]
        let grad = sigmoid(phi) - batch_mean;
        phi -= MARGINAL_LR * grad;
        if !phi.is_finite() {
            return Err(Error::InferenceFailure {
                step,
                message: "marginal parameter diverged".into(),
            });
        }
        phi = phi.clamp(-MAX_LOGIT, MAX_LOGIT);
    }
    let q_success = sigmoid(phi);
    let estimate = marginal_bound_at(design, q_success, budget.n_outer, rng)?;
    Ok(MarginalBound { estimate, q_success })
}

/// Monte Carlo EIG for a Beta-Bernoulli cell: draw `phi ~ Beta`, `y ~ Bernoulli(phi)`,
/// and average `ln p(y|phi) - ln p(y)` with the exact predictive.
pub fn eig_beta_bernoulli<R: Rng + ?Sized>(
    gp: &GroupedTreatmentPosterior,
    treatment: usize,
    group: usize,
    s: usize,
    rng: &mut R,
) -> Result<EigEstimate> {
    if s == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if treatment >= gp.n_treatments() || group >= gp.n_groups() {
        return Err(Error::invalid(format!("no cell ({treatment}, {group})")));
    }
    let post = gp.get(treatment, group);
    let pred = post.mean();
    let (ln_m1, ln_m0) = (pred.ln(), (1.0 - pred).ln());
    let terms: Vec<f64> = (0..s)
        .map(|_| {
            let phi = post.sample(rng);
            if rng.random::<f64>() < phi {
                phi.max(LIKELIHOOD_FLOOR).ln() - ln_m1
            } else {
                (1.0 - phi).max(LIKELIHOOD_FLOOR).ln() - ln_m0
            }
        })
        .collect();
    let est = Estimate::from_samples(&terms);
    Ok(EigEstimate {
        value: est.value,
        std_error: est.std_error,
        floor_hits: 0,
        marginal_success: pred,
    })
}

/// Closed-form Beta-Bernoulli mutual information
/// `H(E[phi]) - E[H(phi)]`, with `E[phi ln phi]` from digamma identities.
pub fn eig_beta_bernoulli_exact(post: &BetaPosterior) -> f64 {
    let (a, b) = (post.alpha, post.beta);
    let s = a + b;
    let m = a / s;
    let marginal_entropy = -(m * m.ln() + (1.0 - m) * (1.0 - m).ln());
    let e_phi_ln_phi = m * (digamma(a + 1.0) - digamma(s + 1.0));
    let e_1m_ln_1m = (1.0 - m) * (digamma(b + 1.0) - digamma(s + 1.0));
    (marginal_entropy + e_phi_ln_phi + e_1m_ln_1m).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn point_mass_gives_zero() {
        let d = BetaBernoulliDesign(BetaPosterior::new(1e9, 1e9).unwrap());
        let e = eig_nested_mc(&d, &SampleBudget::default(), &mut seeded(1)).unwrap();
        assert!(e.value.abs() < 0.005, "{e:?}");

        let pinned = JointDesign {
            ability: Gaussian { mean: 0.4, sd: 1e-9 },
            difficulty: Gaussian { mean: -0.2, sd: 1e-9 },
        };
        let e = eig_nested_mc(&pinned, &SampleBudget::default(), &mut seeded(2)).unwrap();
        assert!(e.value.abs() < 0.005, "{e:?}");
    }

    #[test]
    fn floor_is_counted() {
        let certain = AbilityDesign {
            ability: Gaussian { mean: 0.0, sd: 1e-12 },
            difficulty: -1000.0,
        };
        let e = eig_nested_mc(&certain, &SampleBudget::default(), &mut seeded(3)).unwrap();
        assert_eq!(e.floor_hits, 1);
        assert!(e.value.is_finite());
    }

    #[test]
    fn exact_beta_eig_uniform() {
        let v = eig_beta_bernoulli_exact(&BetaPosterior::uniform());
        assert!((v - (std::f64::consts::LN_2 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn zero_budget_rejected() {
        let d = BetaBernoulliDesign(BetaPosterior::uniform());
        let bad = SampleBudget { n_outer: 0, ..SampleBudget::default() };
        assert!(eig_nested_mc(&d, &bad, &mut seeded(0)).is_err());
        let gp = GroupedTreatmentPosterior::uniform(1, 1).unwrap();
        assert!(eig_beta_bernoulli(&gp, 0, 0, 0, &mut seeded(0)).is_err());
        assert!(eig_beta_bernoulli(&gp, 1, 0, 10, &mut seeded(0)).is_err());
    }

    #[test]
    fn marginal_bound_converges_to_marginal() {
        let d = BetaBernoulliDesign(BetaPosterior::new(3.0, 1.0).unwrap());
        let mb = eig_marginal_bound(&d, 200, &SampleBudget::default(), &mut seeded(5)).unwrap();
        assert!((mb.q_success - 0.75).abs() < 0.02, "{mb:?}");
    }
}
