//! Response time saved by penalizing slow items.

use serde::{Deserialize, Serialize};

use super::bandit::MeanCi;
use super::oracle::OracleDataset;
use crate::design::{eig_joint_theta_delta, utility_slow_penalty, DesignScore, DurationModel, SampleBudget};
use crate::error::{Error, Result};
use crate::inference::{refit_mean_field, MeanFieldPosterior, ViConfig};
use crate::model::{PriorSpec, ResponseRecord};
use crate::policy::{argmax, select_greedy_eig, select_min_efe, StoppingConfig};
use crate::rng::{derive, derive_seed};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSavedConfig {
    pub prior: PriorSpec,
    pub budget: SampleBudget,
    pub vi: ViConfig,
    pub stop: StoppingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSavedReport {
    /// `tau(EIG choice) - tau(EFE choice)` for every step, in seconds.
    pub savings: Vec<f64>,
    pub summary: MeanCi,
    /// Steps where the two choices differed.
    pub disagreements: usize,
}

/// [`time_saved_estimate_with`] using default prior, VI and stopping settings.
pub fn time_saved_estimate(
    oracle: &OracleDataset,
    dm: &DurationModel,
    budget: &SampleBudget,
    seed: u64,
) -> Result<TimeSavedReport> {
    let cfg = TimeSavedConfig {
        budget: *budget,
        vi: ViConfig { seed, ..ViConfig::default() },
        ..TimeSavedConfig::default()
    };
    time_saved_estimate_with(oracle, dm, &cfg)
}

/// Replays the oracle following the slow-penalized EFE choice. At each step
/// the pure-EIG choice is computed from the same EIG values and the oracle
/// durations of the two choices are compared.
pub fn time_saved_estimate_with(oracle: &OracleDataset, dm: &DurationModel, cfg: &TimeSavedConfig) -> Result<TimeSavedReport> {
    if !oracle.has_durations() {
        return Err(Error::validation("oracle", "every record needs a duration"));
    }
    if dm.items.len() != oracle.n_items() {
        return Err(Error::invalid("duration model must cover every oracle item"));
    }
    dm.validate()?;
    cfg.budget.validate()?;
    cfg.vi.validate()?;
    cfg.stop.validate()?;
    let n_items = oracle.n_items();
    let root = cfg.vi.seed;
    let mut posterior = MeanFieldPosterior::from_prior(&cfg.prior, 0, n_items);
    let mut data: Vec<ResponseRecord> = Vec::new();
    let mut savings = Vec::new();
    let mut disagreements = 0;

    for p in 0..oracle.n_participants() {
        posterior.add_participants(&cfg.prior, 1);
        let mut administered = vec![false; n_items];
        let mut trials = 0;
        loop {
            let remaining: Vec<usize> = (0..n_items).filter(|&j| !administered[j]).collect();
            if remaining.is_empty() {
                break;
            }
            let mut rng = derive(root, &[3, p as u64, trials as u64]);
            let mut eig_scores = Vec::with_capacity(remaining.len());
            let mut efe_scores = Vec::with_capacity(remaining.len());
            for &j in &remaining {
                let eig = eig_joint_theta_delta(&posterior, p, j, &cfg.budget, &mut rng)?.value;
                let penalty = utility_slow_penalty(dm, j, cfg.budget.s_util, &mut rng)?;
                eig_scores.push(DesignScore::from_eig(j, eig));
                efe_scores.push(DesignScore::new(j, eig, penalty));
            }
            if select_greedy_eig(&eig_scores, &cfg.stop, trials).is_stop() {
                break;
            }
            let j_eig = eig_scores[argmax(&eig_scores.iter().map(|s| s.eig).collect::<Vec<_>>())].design_id;
            let j_efe = select_min_efe(&efe_scores, false).chosen.expect("no stop option");
            let tau = |j: usize| oracle.response(p, j).duration_s.expect("checked above");
            savings.push(tau(j_eig) - tau(j_efe));
            disagreements += (j_eig != j_efe) as usize;

            let mut record = oracle.response(p, j_efe).clone();
            record.timestamp = data.len() as u64;
            data.push(record);
            administered[j_efe] = true;
            trials += 1;
            posterior = refit_mean_field(&posterior, &cfg.prior, &data, &cfg.vi, derive_seed(root, &[4, data.len() as u64]))?;
        }
    }
    Ok(TimeSavedReport {
        summary: MeanCi::from_samples(&savings),
        savings,
        disagreements,
    })
}
