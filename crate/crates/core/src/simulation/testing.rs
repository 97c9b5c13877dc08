//! Replay of adaptive testing against a complete oracle.

use serde::{Deserialize, Serialize};

use super::info::{grid_ability_posterior, information_gain};
use super::oracle::OracleDataset;
use crate::design::{eig_joint_theta_delta, DesignScore, SampleBudget};
use crate::error::{Error, Result};
use crate::inference::{refit_mean_field, Gaussian, MeanFieldPosterior, ViConfig};
use crate::model::{PriorSpec, ResponseRecord};
use crate::policy::{select_greedy_eig, PolicyDecision, StoppingConfig};
use crate::rng::{derive, derive_seed};

/// When a participant's test ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Termination {
    /// Greedy EIG with the threshold stopping rule.
    Rule(StoppingConfig),
    /// Exactly this many items (or the whole bank, if smaller).
    FixedBudget { trials: usize },
}

impl Default for Termination {
    fn default() -> Self {
        Termination::Rule(StoppingConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestingSimConfig {
    pub prior: PriorSpec,
    pub termination: Termination,
    pub budget: SampleBudget,
    pub vi: ViConfig,
}

/// One scored decision in the replay, for the audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub participant_id: usize,
    pub trial: usize,
    pub seed: u64,
    pub decision: PolicyDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trial_counts: Vec<usize>,
    pub item_frequencies: Vec<usize>,
    /// Ability posterior of each participant when their test ended.
    pub final_abilities: Vec<Gaussian>,
    /// `ln(prior_sd / posterior_sd)` of each participant's ability.
    pub information_gains: Vec<f64>,
    pub total_information_gain: f64,
    /// Participants whose posterior ended wider than the prior.
    pub negative_gain_participants: Vec<usize>,
    /// Difficulty posterior means at the end of the run.
    pub difficulty_means: Vec<f64>,
    /// Answers consumed, in administration order.
    pub administered: Vec<ResponseRecord>,
    pub audit: Vec<DecisionRecord>,
    #[serde(skip)]
    pub final_posterior: Option<MeanFieldPosterior>,
}

impl SimReport {
    pub fn total_trials(&self) -> usize {
        self.trial_counts.iter().sum()
    }

    pub fn mean_trials(&self) -> f64 {
        self.total_trials() as f64 / self.trial_counts.len().max(1) as f64
    }
}

/// Greedy EIG replay with the stopping rule.
pub fn run_adaptive_testing_sim(
    oracle: &OracleDataset,
    stop: &StoppingConfig,
    budget: &SampleBudget,
    cfg: &ViConfig,
) -> Result<SimReport> {
    run_testing_sim(
        oracle,
        &TestingSimConfig {
            prior: PriorSpec::default(),
            termination: Termination::Rule(*stop),
            budget: *budget,
            vi: *cfg,
        },
    )
}

/// Participants arrive in id order; each answers items chosen by maximal
/// joint (ability, difficulty) EIG until the termination condition, with a
/// warm-started posterior refit after every answer.
pub fn run_testing_sim(oracle: &OracleDataset, cfg: &TestingSimConfig) -> Result<SimReport> {
    cfg.budget.validate()?;
    cfg.vi.validate()?;
    cfg.prior.validate()?;
    if let Termination::Rule(stop) = cfg.termination {
        stop.validate()?;
    }
    let n_items = oracle.n_items();
    let root = cfg.vi.seed;
    let mut posterior = MeanFieldPosterior::from_prior(&cfg.prior, 0, n_items);
    let mut data: Vec<ResponseRecord> = Vec::new();
    let mut trial_counts = Vec::with_capacity(oracle.n_participants());
    let mut final_abilities = Vec::with_capacity(oracle.n_participants());
    let mut item_frequencies = vec![0usize; n_items];
    let mut audit = Vec::new();

    for p in 0..oracle.n_participants() {
        posterior.add_participants(&cfg.prior, 1);
        let mut administered = vec![false; n_items];
        let mut trials = 0;
        loop {
            let remaining: Vec<usize> = (0..n_items).filter(|&j| !administered[j]).collect();
            let seed = derive_seed(root, &[1, p as u64, trials as u64]);
            if remaining.is_empty() {
                audit.push(DecisionRecord {
                    participant_id: p,
                    trial: trials,
                    seed,
                    decision: PolicyDecision::stop(Vec::new()),
                });
                break;
            }
            let mut rng = derive(seed, &[]);
            let scores = remaining
                .iter()
                .map(|&j| {
                    eig_joint_theta_delta(&posterior, p, j, &cfg.budget, &mut rng)
                        .map(|e| DesignScore::from_eig(j, e.value))
                })
                .collect::<Result<Vec<_>>>()?;
            let decision = match cfg.termination {
                Termination::Rule(stop) => select_greedy_eig(&scores, &stop, trials),
                Termination::FixedBudget { trials: limit } => {
                    let unlimited = StoppingConfig {
                        epsilon: 0.0,
                        min_trials: usize::MAX,
                    };
                    let mut d = select_greedy_eig(&scores, &unlimited, trials);
                    if trials >= limit {
                        d.chosen = None;
                    }
                    d
                }
            };
            let chosen = decision.chosen;
            audit.push(DecisionRecord {
                participant_id: p,
                trial: trials,
                seed,
                decision,
            });
            let Some(j) = chosen else { break };

            let mut record = oracle.response(p, j).clone();
            record.participant_id = p;
            record.timestamp = data.len() as u64;
            data.push(record);
            administered[j] = true;
            item_frequencies[j] += 1;
            trials += 1;

            let refit_seed = derive_seed(root, &[2, data.len() as u64]);
            posterior = refit_mean_field(&posterior, &cfg.prior, &data, &cfg.vi, refit_seed).map_err(|e| match e {
                Error::InferenceFailure { step, message } => Error::InferenceFailure {
                    step,
                    message: format!("{message} (participant {p}, trial {trials})"),
                },
                other => other,
            })?;
        }
        trial_counts.push(trials);
        final_abilities.push(posterior.theta(p));
    }

    let information_gains: Vec<f64> = final_abilities
        .iter()
        .map(|g| information_gain(cfg.prior.theta_sd, g.sd))
        .collect();
    let negative_gain_participants = information_gains
        .iter()
        .enumerate()
        .filter(|(_, g)| **g < 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(SimReport {
        trial_counts,
        item_frequencies,
        final_abilities,
        total_information_gain: information_gains.iter().sum(),
        information_gains,
        negative_gain_participants,
        difficulty_means: (0..n_items).map(|j| posterior.delta(j).mean).collect(),
        administered: data,
        audit,
        final_posterior: Some(posterior),
    })
}

/// Grid-quadrature ability information gained from the items each
/// participant actually answered, relative to answering every item, with
/// difficulties held fixed. Returns `(adaptive, full)` summed over participants.
pub fn information_retention(
    report: &SimReport,
    oracle: &OracleDataset,
    prior: &PriorSpec,
    difficulties: &[f64],
) -> Result<(f64, f64)> {
    if difficulties.len() != oracle.n_items() {
        return Err(Error::invalid("one difficulty per item required"));
    }
    let mut per_participant: Vec<Vec<(bool, f64)>> = vec![Vec::new(); oracle.n_participants()];
    for r in &report.administered {
        per_participant[r.participant_id].push((r.success(), difficulties[r.item_id]));
    }
    let mut adaptive = 0.0;
    let mut full = 0.0;
    for (p, answers) in per_participant.iter().enumerate() {
        let all: Vec<(bool, f64)> = oracle
            .participant_records(p)
            .iter()
            .map(|r| (r.success(), difficulties[r.item_id]))
            .collect();
        adaptive += information_gain(prior.theta_sd, grid_ability_posterior(answers, prior).1);
        full += information_gain(prior.theta_sd, grid_ability_posterior(&all, prior).1);
    }
    Ok((adaptive, full))
}
