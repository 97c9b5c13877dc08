//! Complete response grids for counterfactual replay.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_prior, sigmoid, LatentState, PriorSpec, ResponseRecord};
use crate::rng::derive;

/// Every participant's answer to every item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDataset {
    n_participants: usize,
    n_items: usize,
    /// Row-major: participant, then item.
    responses: Vec<ResponseRecord>,
    /// Generating latents, when the oracle is synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<LatentState>,
}

impl OracleDataset {
    /// Validate completeness and per-participant group consistency.
    pub fn from_records(records: Vec<ResponseRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::validation("oracle", "no records"));
        }
        let n_participants = records.iter().map(|r| r.participant_id + 1).max().unwrap_or(0);
        let n_items = records.iter().map(|r| r.item_id + 1).max().unwrap_or(0);
        let mut grid: Vec<Option<ResponseRecord>> = vec![None; n_participants * n_items];
        for r in records {
            r.validate()?;
            let k = r.participant_id * n_items + r.item_id;
            if grid[k].is_some() {
                return Err(Error::validation(
                    "oracle",
                    format!("duplicate record for participant {} item {}", r.participant_id, r.item_id),
                ));
            }
            grid[k] = Some(r);
        }
        let mut responses = Vec::with_capacity(grid.len());
        for (k, cell) in grid.into_iter().enumerate() {
            let r = cell.ok_or_else(|| {
                Error::validation(
                    "oracle",
                    format!(
                        "incomplete grid: participant {} has no answer for item {}",
                        k / n_items,
                        k % n_items
                    ),
                )
            })?;
            responses.push(r);
        }
        for p in 0..n_participants {
            let row = &responses[p * n_items..(p + 1) * n_items];
            if row.iter().any(|r| r.z != row[0].z) {
                return Err(Error::validation(
                    "oracle",
                    format!("participant {p} has inconsistent group labels"),
                ));
            }
        }
        Ok(Self {
            n_participants,
            n_items,
            responses,
            ground_truth: None,
        })
    }

    pub fn n_participants(&self) -> usize {
        self.n_participants
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.responses
    }

    pub fn response(&self, participant: usize, item: usize) -> &ResponseRecord {
        &self.responses[participant * self.n_items + item]
    }

    pub fn participant_records(&self, participant: usize) -> &[ResponseRecord] {
        &self.responses[participant * self.n_items..(participant + 1) * self.n_items]
    }

    pub fn group(&self, participant: usize) -> Option<u8> {
        self.response(participant, 0).z
    }

    pub fn has_durations(&self) -> bool {
        self.responses.iter().all(|r| r.duration_s.is_some())
    }

    /// One JSON record per line.
    pub fn from_jsonl<R: Read>(reader: R) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: ResponseRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(r);
        }
        Self::from_records(records)
    }

    pub fn from_jsonl_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_jsonl(std::fs::File::open(path)?)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.responses {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// How synthetic response times are generated: `ln tau ~ Normal(base +
/// slope * delta_j, log_sd)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDurations {
    pub base_log_mean: f64,
    pub difficulty_slope: f64,
    pub log_sd: f64,
}

impl Default for SyntheticDurations {
    fn default() -> Self {
        Self {
            base_log_mean: 8f64.ln(),
            difficulty_slope: 0.3,
            log_sd: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOptions {
    /// Alternate group labels 0, 1, 0, ... across participants.
    pub with_groups: bool,
    pub durations: Option<SyntheticDurations>,
}

pub fn generate_synthetic_oracle(
    prior: &PriorSpec,
    n_participants: usize,
    n_items: usize,
    seed: u64,
) -> Result<OracleDataset> {
    generate_synthetic_oracle_with(prior, n_participants, n_items, seed, &SyntheticOptions::default())
}

/// Sample latents from the prior and a full grid of 1PL answers.
pub fn generate_synthetic_oracle_with(
    prior: &PriorSpec,
    n_participants: usize,
    n_items: usize,
    seed: u64,
    opts: &SyntheticOptions,
) -> Result<OracleDataset> {
    let truth = sample_prior(prior, n_participants, n_items, &mut derive(seed, &[0]))?;
    oracle_from_latents(truth, seed, opts)
}

/// Full answer grid generated from fixed latents.
pub fn oracle_from_latents(truth: LatentState, seed: u64, opts: &SyntheticOptions) -> Result<OracleDataset> {
    let mut rng = derive(seed, &[1]);
    let mut dur_rng = derive(seed, &[2]);
    let mut records = Vec::with_capacity(truth.n_participants() * truth.n_items());
    for p in 0..truth.n_participants() {
        for j in 0..truth.n_items() {
            let prob = sigmoid(truth.theta[p] - truth.delta[j]);
            let mut r = ResponseRecord::new(p, j, (rng.random::<f64>() < prob) as u8);
            r.timestamp = (p * truth.n_items() + j) as u64;
            if opts.with_groups {
                r.z = Some((p % 2) as u8);
            }
            if let Some(d) = opts.durations {
                let mean = d.base_log_mean + d.difficulty_slope * truth.delta[j];
                let dist = Normal::new(mean, d.log_sd)
                    .map_err(|e| Error::invalid(format!("bad duration spec: {e}")))?;
                r.duration_s = Some(dist.sample(&mut dur_rng).exp());
            }
            records.push(r);
        }
    }
    let mut oracle = OracleDataset::from_records(records)?;
    oracle.ground_truth = Some(truth);
    Ok(oracle)
}
