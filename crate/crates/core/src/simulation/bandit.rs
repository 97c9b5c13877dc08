//! Bernoulli bandit benchmarks comparing active inference with Thompson
//! sampling, exploration sampling and even allocation.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{eig_beta_bernoulli, eig_beta_bernoulli_exact, utility_success, DesignScore, PreferencePrior};
use crate::error::{Error, Result};
use crate::inference::GroupedTreatmentPosterior;
use crate::policy::{argmax, exploration_sampling_weights, sample_arm, select_min_efe, select_uniform_fixed, thompson_probabilities};
use crate::rng::{derive, derive_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setup {
    /// One reward per arm.
    A,
    /// Two participant groups with separate rewards; the arm's reward is
    /// their average.
    B,
}

impl Setup {
    pub fn n_groups(self) -> usize {
        match self {
            Setup::A => 1,
            Setup::B => 2,
        }
    }

    pub fn group_weights(self) -> &'static [f64] {
        match self {
            Setup::A => &[1.0],
            Setup::B => &[0.5, 0.5],
        }
    }

    /// Group of the participant arriving at step `t`.
    pub fn group_at(self, t: usize) -> usize {
        t % self.n_groups()
    }
}

impl std::fmt::Display for Setup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setup::A => "A",
            Setup::B => "B",
        })
    }
}

impl std::str::FromStr for Setup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Setup::A),
            "B" | "b" => Ok(Setup::B),
            other => Err(Error::invalid(format!("unknown setup {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditEnv {
    pub setup: Setup,
    /// `k x n_groups`, row-major by arm.
    group_rewards: Vec<f64>,
}

impl BanditEnv {
    /// Setup A environment with the given per-arm rewards.
    pub fn setup_a(rewards: Vec<f64>) -> Result<Self> {
        Self::new(Setup::A, rewards)
    }

    /// Setup B environment from `(group 0, group 1)` rewards per arm.
    pub fn setup_b(rewards: &[(f64, f64)]) -> Result<Self> {
        Self::new(Setup::B, rewards.iter().flat_map(|&(a, b)| [a, b]).collect())
    }

    fn new(setup: Setup, group_rewards: Vec<f64>) -> Result<Self> {
        if group_rewards.is_empty() || group_rewards.len() % setup.n_groups() != 0 {
            return Err(Error::invalid("need a reward for every arm and group"));
        }
        if let Some(r) = group_rewards.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::invalid(format!("reward {r} outside [0, 1]")));
        }
        Ok(Self { setup, group_rewards })
    }

    /// Fresh rewards from Beta(2, 2) for every arm and group.
    pub fn sample<R: Rng + ?Sized>(setup: Setup, k: usize, rng: &mut R) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("need at least one arm"));
        }
        let dist = Beta::new(2.0, 2.0).expect("valid parameters");
        let rewards = (0..k * setup.n_groups()).map(|_| dist.sample(rng)).collect();
        Self::new(setup, rewards)
    }

    pub fn k(&self) -> usize {
        self.group_rewards.len() / self.setup.n_groups()
    }

    pub fn group_reward(&self, arm: usize, group: usize) -> f64 {
        self.group_rewards[arm * self.setup.n_groups() + group]
    }

    pub fn true_reward(&self, arm: usize) -> f64 {
        self.setup
            .group_weights()
            .iter()
            .enumerate()
            .map(|(z, w)| w * self.group_reward(arm, z))
            .sum()
    }

    pub fn true_rewards(&self) -> Vec<f64> {
        (0..self.k()).map(|j| self.true_reward(j)).collect()
    }

    pub fn best_arm(&self) -> usize {
        argmax(&self.true_rewards())
    }

    pub fn best_reward(&self) -> f64 {
        self.true_reward(self.best_arm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigMethod {
    /// Closed-form Beta-Bernoulli mutual information.
    Exact,
    /// Monte Carlo with this many samples.
    MonteCarlo(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum BanditPolicy {
    /// Round-robin, least-administered arm first.
    Uniform,
    /// Play the argmax of one joint posterior draw.
    Thompson,
    /// Draw from the exploration-sampling reweighting of Monte Carlo
    /// Thompson probabilities.
    ExplorationSampling { samples: usize },
    /// Minimize expected free energy: information about the current group's
    /// cell plus a success preference of strength `gamma`.
    ActiveInference { gamma: f64, eig: EigMethod },
    /// Play the arm with the highest posterior-mean reward.
    Greedy,
    /// Always play the true best arm.
    Oracle,
}

impl BanditPolicy {
    pub fn label(&self) -> String {
        match self {
            BanditPolicy::Uniform => "uniform".into(),
            BanditPolicy::Thompson => "thompson".into(),
            BanditPolicy::ExplorationSampling { .. } => "exploration".into(),
            BanditPolicy::ActiveInference { gamma, .. } => format!("active_inference_g{gamma}"),
            BanditPolicy::Greedy => "greedy".into(),
            BanditPolicy::Oracle => "oracle".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BanditPolicy::ExplorationSampling { samples: 0 } => Err(Error::invalid("exploration sampling needs samples")),
            BanditPolicy::ActiveInference { gamma, eig } => {
                PreferencePrior::new(gamma)?;
                if eig == EigMethod::MonteCarlo(0) {
                    return Err(Error::invalid("Monte Carlo EIG needs samples"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

pub const DEFAULT_EXPLORATION_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditReport {
    pub arms: Vec<usize>,
    pub outcomes: Vec<bool>,
    pub groups: Vec<usize>,
    /// Whether each administered arm had the highest posterior-mean reward
    /// when it was chosen.
    pub exploited: Vec<bool>,
    /// Estimated best arm after each step.
    pub estimated_best: Vec<usize>,
    pub final_posterior: GroupedTreatmentPosterior,
}

impl BanditReport {
    pub fn horizon(&self) -> usize {
        self.arms.len()
    }

    pub fn final_estimated_best(&self) -> usize {
        *self.estimated_best.last().expect("non-empty report")
    }
}

fn posterior_means(gp: &GroupedTreatmentPosterior, weights: &[f64]) -> Vec<f64> {
    (0..gp.n_treatments()).map(|j| gp.mixture_mean(j, weights)).collect()
}

/// Outcomes come from one stream per (arm, group) cell, so two policies run
/// on the same seed see the same n-th outcome from a cell.
struct OutcomeStreams {
    streams: Vec<SimRng>,
}

impl OutcomeStreams {
    fn new(seed: u64, cells: usize) -> Self {
        Self {
            streams: (0..cells).map(|c| derive(seed, &[1, c as u64])).collect(),
        }
    }

    fn draw(&mut self, cell: usize, p: f64) -> bool {
        self.streams[cell].random::<f64>() < p
    }
}

fn choose<R: Rng + ?Sized>(
    policy: &BanditPolicy,
    env: &BanditEnv,
    gp: &GroupedTreatmentPosterior,
    counts: &[usize],
    group: usize,
    rng: &mut R,
) -> Result<usize> {
    let weights = env.setup.group_weights();
    let k = env.k();
    Ok(match *policy {
        BanditPolicy::Uniform => select_uniform_fixed(counts),
        BanditPolicy::Oracle => env.best_arm(),
        BanditPolicy::Greedy => argmax(&posterior_means(gp, weights)),
        BanditPolicy::Thompson => {
            let draws: Vec<f64> = (0..k)
                .map(|j| weights.iter().enumerate().map(|(z, w)| w * gp.get(j, z).sample(rng)).sum())
                .collect();
            argmax(&draws)
        }
        BanditPolicy::ExplorationSampling { samples } => {
            if k == 1 {
                0
            } else {
                let p = thompson_probabilities(gp, weights, samples, rng)?;
                sample_arm(&exploration_sampling_weights(&p), rng)
            }
        }
        BanditPolicy::ActiveInference { gamma, eig } => {
            let pref = PreferencePrior::new(gamma)?;
            let scores = (0..k)
                .map(|j| {
                    let info = match eig {
                        EigMethod::Exact => eig_beta_bernoulli_exact(gp.get(j, group)),
                        EigMethod::MonteCarlo(s) => eig_beta_bernoulli(gp, j, group, s, rng)?.value,
                    };
                    Ok(DesignScore::new(j, info, utility_success(gp, j, &pref, weights)))
                })
                .collect::<Result<Vec<_>>>()?;
            select_min_efe(&scores, false).chosen.expect("no stop option")
        }
    })
}

/// Run `policy` for `horizon` steps on `env`, updating a uniform-prior
/// Beta posterior per (arm, group) after every outcome.
pub fn run_treatment_sim(env: &BanditEnv, policy: &BanditPolicy, horizon: usize, seed: u64) -> Result<BanditReport> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    policy.validate()?;
    let k = env.k();
    let n_groups = env.setup.n_groups();
    let weights = env.setup.group_weights();
    let mut gp = GroupedTreatmentPosterior::uniform(k, n_groups)?;
    let mut outcomes_rng = OutcomeStreams::new(seed, k * n_groups);
    let mut policy_rng = derive(seed, &[2]);
    let mut counts = vec![0usize; k];
    let mut report = BanditReport {
        arms: Vec::with_capacity(horizon),
        outcomes: Vec::with_capacity(horizon),
        groups: Vec::with_capacity(horizon),
        exploited: Vec::with_capacity(horizon),
        estimated_best: Vec::with_capacity(horizon),
        final_posterior: gp.clone(),
    };
    let mut means = posterior_means(&gp, weights);
    for t in 0..horizon {
        let group = env.setup.group_at(t);
        let arm = choose(policy, env, &gp, &counts, group, &mut policy_rng)?;
        let leader = argmax(&means);
        let y = outcomes_rng.draw(arm * n_groups + group, env.group_reward(arm, group));
        gp.update(arm, group, y);
        counts[arm] += 1;
        means[arm] = gp.mixture_mean(arm, weights);
        report.arms.push(arm);
        report.outcomes.push(y);
        report.groups.push(group);
        report.exploited.push(arm == leader);
        report.estimated_best.push(argmax(&means));
    }
    report.final_posterior = gp;
    Ok(report)
}

/// 1 when the final estimated-best arm is the true best arm.
pub fn best_arm_identification(report: &BanditReport, env: &BanditEnv) -> bool {
    report.final_estimated_best() == env.best_arm()
}

pub fn policy_regret(report: &BanditReport, env: &BanditEnv) -> f64 {
    env.best_reward() - env.true_reward(report.final_estimated_best())
}

/// Policy regret had the experiment stopped after `steps` steps.
pub fn policy_regret_at(report: &BanditReport, env: &BanditEnv, steps: usize) -> f64 {
    let j = report.estimated_best[steps.clamp(1, report.horizon()) - 1];
    env.best_reward() - env.true_reward(j)
}

pub fn average_regret(report: &BanditReport, env: &BanditEnv) -> f64 {
    let earned: f64 = report.arms.iter().map(|&j| env.true_reward(j)).sum();
    (env.best_reward() - earned / report.horizon() as f64).max(0.0)
}

pub fn exploitation_probability(report: &BanditReport) -> f64 {
    report.exploited.iter().filter(|&&e| e).count() as f64 / report.horizon() as f64
}

/// Sample mean with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, half_width: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let half_width = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, half_width, n }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.half_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub setup: Setup,
    pub k: usize,
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub identified: bool,
    pub policy_regret: f64,
    pub average_regret: f64,
    pub exploitation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub setup: Setup,
    pub k: usize,
    pub horizon: usize,
    pub identification: MeanCi,
    pub policy_regret: MeanCi,
    pub average_regret: MeanCi,
    pub exploitation: MeanCi,
    pub runs: Vec<RunMetrics>,
}

/// Environment and seed of run `r`; identical for every policy.
pub fn benchmark_run_env(spec: &BenchmarkSpec, r: usize) -> Result<(BanditEnv, u64)> {
    let run_seed = derive_seed(spec.seed, &[r as u64]);
    let env = BanditEnv::sample(spec.setup, spec.k, &mut derive(run_seed, &[0]))?;
    Ok((env, run_seed))
}

/// `spec.runs` paired runs of one policy, optionally in parallel.
pub fn run_benchmark(spec: &BenchmarkSpec, policy: &BanditPolicy, parallel: bool) -> Result<PolicySummary> {
    if spec.runs == 0 {
        return Err(Error::invalid("need at least one run"));
    }
    let one = |r: usize| -> Result<RunMetrics> {
        let (env, run_seed) = benchmark_run_env(spec, r)?;
        let report = run_treatment_sim(&env, policy, spec.horizon, run_seed)?;
        Ok(RunMetrics {
            identified: best_arm_identification(&report, &env),
            policy_regret: policy_regret(&report, &env),
            average_regret: average_regret(&report, &env),
            exploitation: exploitation_probability(&report),
        })
    };
    let runs: Vec<RunMetrics> = if parallel {
        (0..spec.runs).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..spec.runs).map(one).collect::<Result<_>>()?
    };
    let col = |f: fn(&RunMetrics) -> f64| MeanCi::from_samples(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(PolicySummary {
        policy: policy.label(),
        setup: spec.setup,
        k: spec.k,
        horizon: spec.horizon,
        identification: col(|m| m.identified as u8 as f64),
        policy_regret: col(|m| m.policy_regret),
        average_regret: col(|m| m.average_regret),
        exploitation: col(|m| m.exploitation),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::BetaPosterior;

    const POLICIES: [BanditPolicy; 5] = [
        BanditPolicy::Uniform,
        BanditPolicy::Thompson,
        BanditPolicy::ExplorationSampling { samples: 50 },
        BanditPolicy::ActiveInference { gamma: 0.2, eig: EigMethod::Exact },
        BanditPolicy::Greedy,
    ];

    #[test]
    fn setup_b_reward_is_group_average() {
        let env = BanditEnv::setup_b(&[(0.2, 0.6), (0.9, 0.1)]).unwrap();
        assert!((env.true_reward(0) - 0.4).abs() < 1e-15);
        assert!((env.true_reward(1) - 0.5).abs() < 1e-15);
        assert_eq!(env.best_arm(), 1);
        assert!(BanditEnv::setup_a(vec![0.5, 1.2]).is_err());
    }

    #[test]
    fn oracle_policy_has_no_regret() {
        let env = BanditEnv::setup_a(vec![0.3, 0.7, 0.5]).unwrap();
        let report = run_treatment_sim(&env, &BanditPolicy::Oracle, 100, 1).unwrap();
        assert_eq!(average_regret(&report, &env), 0.0);
    }

    #[test]
    fn uniform_average_regret_matches_expectation() {
        let env = BanditEnv::setup_a(vec![0.8, 0.2]).unwrap();
        let report = run_treatment_sim(&env, &BanditPolicy::Uniform, 1000, 1).unwrap();
        assert!((average_regret(&report, &env) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn reports_are_deterministic_and_consistent() {
        let env = BanditEnv::sample(Setup::B, 4, &mut derive(3, &[])).unwrap();
        for policy in POLICIES {
            let a = run_treatment_sim(&env, &policy, 60, 9).unwrap();
            let b = run_treatment_sim(&env, &policy, 60, 9).unwrap();
            assert_eq!(a, b, "{policy:?}");
            assert_eq!(a.arms.len(), 60);
            assert_eq!(a.outcomes.len(), 60);
            assert_eq!(a.estimated_best.len(), 60);
            assert!((a.final_posterior.total_observations() - 60.0).abs() < 1e-9);
            let e = exploitation_probability(&a);
            assert!((0.0..=1.0).contains(&e));
            assert!(average_regret(&a, &env) >= 0.0);
            assert_eq!(a.groups, (0..60).map(|t| t % 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn greedy_always_exploits() {
        let env = BanditEnv::setup_a(vec![0.3, 0.6, 0.5]).unwrap();
        let report = run_treatment_sim(&env, &BanditPolicy::Greedy, 200, 4).unwrap();
        assert_eq!(exploitation_probability(&report), 1.0);
    }

    #[test]
    fn identification_from_point_masses() {
        let env = BanditEnv::setup_a(vec![0.8, 0.2]).unwrap();
        let mut report = run_treatment_sim(&env, &BanditPolicy::Uniform, 2, 0).unwrap();
        let mut gp = GroupedTreatmentPosterior::uniform(2, 1).unwrap();
        gp.set(0, 0, BetaPosterior::new(8e8, 2e8).unwrap());
        gp.set(1, 0, BetaPosterior::new(2e8, 8e8).unwrap());
        report.final_posterior = gp;
        *report.estimated_best.last_mut().unwrap() = 0;
        assert!(best_arm_identification(&report, &env));
        assert_eq!(policy_regret(&report, &env), 0.0);
        *report.estimated_best.last_mut().unwrap() = 1;
        assert!(!best_arm_identification(&report, &env));
        assert!((policy_regret(&report, &env) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn paired_runs_share_environments() {
        let spec = BenchmarkSpec { setup: Setup::A, k: 3, horizon: 10, runs: 4, seed: 5 };
        let a = benchmark_run_env(&spec, 2).unwrap();
        let b = benchmark_run_env(&spec, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(benchmark_run_env(&spec, 1).unwrap().0, a.0);
    }

    #[test]
    fn parallel_and_serial_benchmarks_agree() {
        let spec = BenchmarkSpec { setup: Setup::B, k: 3, horizon: 30, runs: 8, seed: 1 };
        let policy = BanditPolicy::Thompson;
        assert_eq!(run_benchmark(&spec, &policy, true).unwrap(), run_benchmark(&spec, &policy, false).unwrap());
    }

    #[test]
    fn mean_ci_basics() {
        let ci = MeanCi::from_samples(&[1.0, 1.0, 1.0]);
        assert_eq!((ci.mean, ci.half_width), (1.0, 0.0));
        let ci = MeanCi::from_samples(&[0.0, 2.0]);
        assert!((ci.half_width - 1.96).abs() < 1e-12);
    }
}
