//! One-parameter logistic (1PL) item-response model.
//!
//! A participant with ability `theta` answers an item of difficulty `delta`
//! correctly with probability `sigmoid(theta - delta)`. Abilities share a
//! Gaussian prior; difficulties are Gaussian around a shared intercept `b`,
//! which itself has a Gaussian prior.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Logistic function, accurate for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln sigmoid(x)` without overflow or catastrophic cancellation.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * (LN_2PI + z * z) - sd.ln()
}

/// Probability that a participant of ability `theta` answers an item of
/// difficulty `delta` correctly.
pub fn irt_success_prob(theta: f64, delta: f64) -> Result<f64> {
    if !theta.is_finite() || !delta.is_finite() {
        return Err(Error::invalid(format!(
            "success probability needs finite inputs, got theta={theta}, delta={delta}"
        )));
    }
    Ok(sigmoid(theta - delta))
}

/// Log-likelihood of a single binary outcome under the 1PL model.
#[inline]
pub fn bernoulli_logit_loglik(success: bool, logit: f64) -> f64 {
    if success {
        log_sigmoid(logit)
    } else {
        log_sigmoid(-logit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub theta_mean: f64,
    pub theta_sd: f64,
    pub delta_sd: f64,
    pub b_mean: f64,
    pub b_sd: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            theta_mean: 0.0,
            theta_sd: 2.0,
            delta_sd: 1.0,
            b_mean: 0.0,
            b_sd: 1.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, sd) in [
            ("theta_sd", self.theta_sd),
            ("delta_sd", self.delta_sd),
            ("b_sd", self.b_sd),
        ] {
            if !(sd > 0.0 && sd.is_finite()) {
                return Err(Error::validation(
                    format!("prior.{name}"),
                    format!("must be finite and strictly positive, got {sd}"),
                ));
            }
        }
        for (name, m) in [("theta_mean", self.theta_mean), ("b_mean", self.b_mean)] {
            if !m.is_finite() {
                return Err(Error::validation(format!("prior.{name}"), "must be finite"));
            }
        }
        Ok(())
    }

    /// Prior marginal sd of an item difficulty once the intercept is integrated out.
    pub fn delta_marginal_sd(&self) -> f64 {
        self.delta_sd.hypot(self.b_sd)
    }
}

/// One observed answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub participant_id: usize,
    pub item_id: usize,
    /// 1 = correct.
    pub y: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default)]
    pub timestamp: u64,
}

impl ResponseRecord {
    pub fn new(participant_id: usize, item_id: usize, y: u8) -> Self {
        Self {
            participant_id,
            item_id,
            y,
            z: None,
            duration_s: None,
            timestamp: 0,
        }
    }

    #[inline]
    pub fn success(&self) -> bool {
        self.y == 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.y > 1 {
            return Err(Error::invalid(format!("y must be 0 or 1, got {}", self.y)));
        }
        if let Some(z) = self.z {
            if z > 1 {
                return Err(Error::invalid(format!("z must be 0 or 1, got {z}")));
            }
        }
        if let Some(d) = self.duration_s {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::invalid(format!("duration_s must be positive, got {d}")));
            }
        }
        Ok(())
    }
}

/// Check record-level invariants and (participant, item) uniqueness.
pub fn validate_records(records: &[ResponseRecord]) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        r.validate()?;
        if !seen.insert((r.participant_id, r.item_id)) {
            return Err(Error::invalid(format!(
                "duplicate response for participant {} on item {}",
                r.participant_id, r.item_id
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub theta: Vec<f64>,
    pub delta: Vec<f64>,
    pub b: f64,
}

impl LatentState {
    pub fn n_participants(&self) -> usize {
        self.theta.len()
    }

    pub fn n_items(&self) -> usize {
        self.delta.len()
    }

    pub fn at_prior_means(prior: &PriorSpec, n_participants: usize, n_items: usize) -> Self {
        Self {
            theta: vec![prior.theta_mean; n_participants],
            delta: vec![prior.b_mean; n_items],
            b: prior.b_mean,
        }
    }
}

fn check_indices(state: &LatentState, data: &[ResponseRecord]) -> Result<()> {
    for r in data {
        if r.participant_id >= state.n_participants() || r.item_id >= state.n_items() {
            return Err(Error::invalid(format!(
                "record (participant {}, item {}) outside a state with {} participants and {} items",
                r.participant_id,
                r.item_id,
                state.n_participants(),
                state.n_items()
            )));
        }
    }
    Ok(())
}

/// Log-likelihood of the data alone.
pub fn log_likelihood(state: &LatentState, data: &[ResponseRecord]) -> Result<f64> {
    check_indices(state, data)?;
    Ok(data
        .iter()
        .map(|r| {
            bernoulli_logit_loglik(r.success(), state.theta[r.participant_id] - state.delta[r.item_id])
        })
        .sum())
}

/// Log prior density of the latent state.
pub fn log_prior(state: &LatentState, prior: &PriorSpec) -> f64 {
    let theta: f64 = state
        .theta
        .iter()
        .map(|&t| normal_logpdf(t, prior.theta_mean, prior.theta_sd))
        .sum();
    let delta: f64 = state
        .delta
        .iter()
        .map(|&d| normal_logpdf(d, state.b, prior.delta_sd))
        .sum();
    theta + delta + normal_logpdf(state.b, prior.b_mean, prior.b_sd)
}

/// Joint log-density `ln p(y, theta, delta, b)` in nats.
pub fn log_joint(state: &LatentState, prior: &PriorSpec, data: &[ResponseRecord]) -> Result<f64> {
    let ll = log_likelihood(state, data)?;
    if !state.theta.iter().chain(&state.delta).all(|v| v.is_finite()) || !state.b.is_finite() {
        return Err(Error::invalid("latent state contains non-finite values"));
    }
    Ok(log_prior(state, prior) + ll)
}

/// Draw a latent state from the prior.
pub fn sample_prior<R: Rng + ?Sized>(
    prior: &PriorSpec,
    n_participants: usize,
    n_items: usize,
    rng: &mut R,
) -> Result<LatentState> {
    if n_participants == 0 || n_items == 0 {
        return Err(Error::invalid("need at least one participant and one item"));
    }
    let normal = |m: f64, s: f64| {
        Normal::new(m, s).map_err(|e| Error::invalid(format!("bad prior N({m}, {s}): {e}")))
    };
    let b = normal(prior.b_mean, prior.b_sd)?.sample(rng);
    let delta_dist = normal(b, prior.delta_sd)?;
    let delta = (0..n_items).map(|_| delta_dist.sample(rng)).collect();
    let theta_dist = normal(prior.theta_mean, prior.theta_sd)?;
    let theta = (0..n_participants).map(|_| theta_dist.sample(rng)).collect();
    Ok(LatentState { theta, delta, b })
}

/// Lowercase, trim and collapse internal whitespace.
pub fn normalize_answer(raw: &str) -> String {
    raw.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub item_id: usize,
    pub prompt: String,
    pub accepted_answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemBank {
    items: Vec<Item>,
}

#[derive(Deserialize)]
struct ItemRow {
    item_id: usize,
    prompt: String,
    accepted_answers: String,
}

impl ItemBank {
    pub fn new(mut items: Vec<Item>) -> Result<Self> {
        for item in &mut items {
            item.accepted_answers = item
                .accepted_answers
                .iter()
                .map(|a| normalize_answer(a))
                .filter(|a| !a.is_empty())
                .collect();
        }
        items.sort_by_key(|i| i.item_id);
        for (pos, item) in items.iter().enumerate() {
            if item.item_id != pos {
                return Err(Error::validation(
                    "item_id",
                    format!("item ids must be unique and contiguous from 0; expected {pos}, found {}", item.item_id),
                ));
            }
            if item.prompt.trim().is_empty() {
                return Err(Error::validation(format!("items[{pos}].prompt"), "prompt is empty"));
            }
            if item.accepted_answers.is_empty() {
                return Err(Error::validation(
                    format!("items[{pos}].accepted_answers"),
                    "no accepted answers",
                ));
            }
        }
        if items.is_empty() {
            return Err(Error::validation("items", "item bank is empty"));
        }
        Ok(Self { items })
    }

    /// Parse `item_id,prompt,accepted_answers` CSV with pipe-separated answers.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut items = Vec::new();
        for row in rdr.deserialize() {
            let row: ItemRow = row?;
            items.push(Item {
                item_id: row.item_id,
                prompt: row.prompt,
                accepted_answers: row.accepted_answers.split('|').map(str::to_owned).collect(),
            });
        }
        Self::new(items)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file)
    }

    /// `n` generic items, handy for simulations without prompts.
    pub fn synthetic(n: usize) -> Self {
        let items = (0..n)
            .map(|i| Item {
                item_id: i,
                prompt: format!("Item {i}"),
                accepted_answers: vec![format!("answer {i}")],
            })
            .collect();
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn get(&self, item_id: usize) -> Option<&Item> {
        self.items.get(item_id)
    }

    /// Exact match of the normalized answer against the accepted list.
    pub fn grade(&self, item_id: usize, raw_answer: &str) -> Result<bool> {
        let item = self
            .get(item_id)
            .ok_or_else(|| Error::invalid(format!("unknown item {item_id}")))?;
        let norm = normalize_answer(raw_answer);
        Ok(item.accepted_answers.contains(&norm))
    }
}
