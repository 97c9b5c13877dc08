//! Replay of adaptive treatment assignment against a grouped oracle: each
//! participant receives a fixed number of distinct treatments chosen by
//! minimal expected free energy.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::oracle::OracleDataset;
use crate::design::{eig_beta_bernoulli, utility_discrimination_weighted, DesignScore, PreferencePrior, BALANCED_GROUPS};
use crate::error::{Error, Result};
use crate::inference::GroupedTreatmentPosterior;
use crate::policy::select_min_efe;
use crate::rng::derive;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreatmentReplayConfig {
    pub gamma: f64,
    pub trials_per_participant: usize,
    /// Monte Carlo samples per EIG estimate.
    pub eig_samples: usize,
    /// Shuffle participant arrival order.
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for TreatmentReplayConfig {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            trials_per_participant: 5,
            eig_samples: 1000,
            shuffle: true,
            seed: 0,
        }
    }
}

/// EFE decomposition of one administered treatment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositionPoint {
    pub step: usize,
    pub participant_id: usize,
    pub group: u8,
    pub treatment: usize,
    pub eig: f64,
    pub utility: f64,
    pub efe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentReplayReport {
    pub frequencies: Vec<usize>,
    pub composition: Vec<CompositionPoint>,
    pub final_posterior: GroupedTreatmentPosterior,
    /// Posterior from every oracle answer, for comparison.
    pub oracle_posterior: GroupedTreatmentPosterior,
}

impl TreatmentReplayReport {
    /// Discrimination utility per treatment under a posterior, best first.
    pub fn ranking(gp: &GroupedTreatmentPosterior) -> Vec<usize> {
        let mut order: Vec<usize> = (0..gp.n_treatments()).collect();
        let gap = |j: usize| gp.get(j, 1).mean() - gp.get(j, 0).mean();
        order.sort_by(|&a, &b| gap(b).total_cmp(&gap(a)).then(a.cmp(&b)));
        order
    }
}

pub fn run_treatment_replay(oracle: &OracleDataset, cfg: &TreatmentReplayConfig) -> Result<TreatmentReplayReport> {
    let pref = PreferencePrior::new(cfg.gamma)?;
    if cfg.trials_per_participant == 0 || cfg.eig_samples == 0 {
        return Err(Error::invalid("trials and samples must be positive"));
    }
    let n_items = oracle.n_items();
    let mut groups = Vec::with_capacity(oracle.n_participants());
    for p in 0..oracle.n_participants() {
        match oracle.group(p) {
            Some(z @ (0 | 1)) => groups.push(z),
            _ => {
                return Err(Error::validation(
                    "oracle",
                    format!("participant {p} needs a group label 0 or 1"),
                ))
            }
        }
    }
    let n = groups.len() as f64;
    let share1 = groups.iter().filter(|&&z| z == 1).count() as f64 / n;
    let weights = if share1 > 0.0 && share1 < 1.0 { [1.0 - share1, share1] } else { BALANCED_GROUPS };

    let mut order: Vec<usize> = (0..oracle.n_participants()).collect();
    if cfg.shuffle {
        order.shuffle(&mut derive(cfg.seed, &[0]));
    }
    let mut rng = derive(cfg.seed, &[1]);
    let mut gp = GroupedTreatmentPosterior::uniform(n_items, 2)?;
    let mut frequencies = vec![0usize; n_items];
    let mut composition = Vec::new();
    for &p in &order {
        let z = groups[p];
        let mut given = vec![false; n_items];
        for _ in 0..cfg.trials_per_participant.min(n_items) {
            let scores = (0..n_items)
                .filter(|&j| !given[j])
                .map(|j| {
                    let eig = eig_beta_bernoulli(&gp, j, z as usize, cfg.eig_samples, &mut rng)?.value;
                    Ok(DesignScore::new(j, eig, utility_discrimination_weighted(&gp, j, &pref, weights)))
                })
                .collect::<Result<Vec<_>>>()?;
            let decision = select_min_efe(&scores, false);
            let j = decision.chosen.expect("no stop option");
            let s = scores.iter().find(|s| s.design_id == j).expect("chosen from scores");
            composition.push(CompositionPoint {
                step: composition.len(),
                participant_id: p,
                group: z,
                treatment: j,
                eig: s.eig,
                utility: s.utility,
                efe: s.efe,
            });
            gp.update(j, z as usize, oracle.response(p, j).success());
            given[j] = true;
            frequencies[j] += 1;
        }
    }
    let mut oracle_posterior = GroupedTreatmentPosterior::uniform(n_items, 2)?;
    for r in oracle.records() {
        oracle_posterior.update(r.item_id, groups[r.participant_id] as usize, r.success());
    }
    Ok(TreatmentReplayReport {
        frequencies,
        composition,
        final_posterior: gp,
        oracle_posterior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ResponseRecord;

    /// Item 0 separates the groups perfectly; the rest are coin flips.
    fn discriminating_oracle(n: usize, m: usize) -> OracleDataset {
        let mut records = Vec::new();
        for p in 0..n {
            let z = (p % 2) as u8;
            for j in 0..m {
                let y = if j == 0 { z } else { ((p / 2 + j) % 2) as u8 };
                let mut r = ResponseRecord::new(p, j, y);
                r.z = Some(z);
                records.push(r);
            }
        }
        OracleDataset::from_records(records).unwrap()
    }

    #[test]
    fn fixed_budget_and_conservation() {
        let oracle = discriminating_oracle(40, 6);
        let cfg = TreatmentReplayConfig {
            eig_samples: 200,
            ..TreatmentReplayConfig::default()
        };
        let report = run_treatment_replay(&oracle, &cfg).unwrap();
        assert_eq!(report.frequencies.iter().sum::<usize>(), 40 * 5);
        assert_eq!(report.composition.len(), 200);
        assert!((report.final_posterior.total_observations() - 200.0).abs() < 1e-9);
        for c in &report.composition {
            assert!((c.efe + c.eig + c.utility).abs() < 1e-12);
        }
    }

    #[test]
    fn discriminating_item_is_favoured() {
        let oracle = discriminating_oracle(60, 8);
        let cfg = TreatmentReplayConfig {
            gamma: 0.3,
            trials_per_participant: 2,
            eig_samples: 300,
            ..TreatmentReplayConfig::default()
        };
        let report = run_treatment_replay(&oracle, &cfg).unwrap();
        let most = crate::policy::argmax(&report.frequencies.iter().map(|&f| f as f64).collect::<Vec<_>>());
        assert_eq!(most, 0, "{:?}", report.frequencies);
        assert_eq!(TreatmentReplayReport::ranking(&report.oracle_posterior)[0], 0);
    }

    #[test]
    fn missing_groups_rejected() {
        let oracle = OracleDataset::from_records(vec![ResponseRecord::new(0, 0, 1)]).unwrap();
        assert!(run_treatment_replay(&oracle, &TreatmentReplayConfig::default()).is_err());
    }
}
