//! Mean-field posterior for the 1PL model.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vi::{self, Estimate, LatentModel, MeanField, ViConfig};
use crate::error::{Error, Result};
use crate::model::{normal_logpdf, LatentState, PriorSpec, ResponseRecord};

/// Latent layout: `theta[0..P]`, then `delta[0..I]`, then `b`.
pub struct IrtModel<'a> {
    prior: PriorSpec,
    data: &'a [ResponseRecord],
    n_participants: usize,
    n_items: usize,
}

impl<'a> IrtModel<'a> {
    pub fn new(
        prior: PriorSpec,
        data: &'a [ResponseRecord],
        n_participants: usize,
        n_items: usize,
    ) -> Result<Self> {
        prior.validate()?;
        for r in data {
            r.validate()?;
            if r.participant_id >= n_participants || r.item_id >= n_items {
                return Err(Error::invalid(format!(
                    "record (participant {}, item {}) outside {n_participants}x{n_items} model",
                    r.participant_id, r.item_id
                )));
            }
        }
        Ok(Self {
            prior,
            data,
            n_participants,
            n_items,
        })
    }

    #[inline]
    fn b_index(&self) -> usize {
        self.n_participants + self.n_items
    }

    pub fn unpack(&self, z: &[f64]) -> LatentState {
        LatentState {
            theta: z[..self.n_participants].to_vec(),
            delta: z[self.n_participants..self.b_index()].to_vec(),
            b: z[self.b_index()],
        }
    }
}

impl LatentModel for IrtModel<'_> {
    fn dim(&self) -> usize {
        self.n_participants + self.n_items + 1
    }

    fn log_joint(&self, z: &[f64]) -> f64 {
        let p = &self.prior;
        let np = self.n_participants;
        let b = z[self.b_index()];
        let mut acc = normal_logpdf(b, p.b_mean, p.b_sd);
        for &t in &z[..np] {
            acc += normal_logpdf(t, p.theta_mean, p.theta_sd);
        }
        for &d in &z[np..self.b_index()] {
            acc += normal_logpdf(d, b, p.delta_sd);
        }
        for r in self.data {
            let x = z[r.participant_id] - z[np + r.item_id];
            acc += crate::model::bernoulli_logit_loglik(r.success(), x);
        }
        acc
    }

    fn accumulate_grad(&self, z: &[f64], grad: &mut [f64]) {
        let p = &self.prior;
        let np = self.n_participants;
        let bi = self.b_index();
        let b = z[bi];
        let theta_prec = 1.0 / (p.theta_sd * p.theta_sd);
        let delta_prec = 1.0 / (p.delta_sd * p.delta_sd);
        for i in 0..np {
            grad[i] -= (z[i] - p.theta_mean) * theta_prec;
        }
        let mut db = -(b - p.b_mean) / (p.b_sd * p.b_sd);
        for j in np..bi {
            let r = (z[j] - b) * delta_prec;
            grad[j] -= r;
            db += r;
        }
        grad[bi] += db;
        for r in self.data {
            let x = z[r.participant_id] - z[np + r.item_id];
            let resid = r.y as f64 - crate::model::sigmoid(x);
            grad[r.participant_id] += resid;
            grad[np + r.item_id] -= resid;
        }
    }
}

/// Gaussian marginal of a single latent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

/// Factorized Gaussian posterior over every `theta_i`, `delta_j` and `b`.
/// Serializes as a versioned map from latent name to `{mean, sd}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Snapshot", into = "Snapshot")]
pub struct MeanFieldPosterior {
    n_participants: usize,
    n_items: usize,
    params: MeanField,
}

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    n_participants: usize,
    n_items: usize,
    latents: BTreeMap<String, Gaussian>,
}

impl MeanFieldPosterior {
    /// Guide initialized at the prior (difficulties at their marginal).
    pub fn from_prior(prior: &PriorSpec, n_participants: usize, n_items: usize) -> Self {
        let mut mean = Vec::with_capacity(n_participants + n_items + 1);
        let mut sd = Vec::with_capacity(n_participants + n_items + 1);
        mean.extend(std::iter::repeat_n(prior.theta_mean, n_participants));
        sd.extend(std::iter::repeat_n(prior.theta_sd, n_participants));
        mean.extend(std::iter::repeat_n(prior.b_mean, n_items));
        sd.extend(std::iter::repeat_n(prior.delta_marginal_sd(), n_items));
        mean.push(prior.b_mean);
        sd.push(prior.b_sd);
        Self {
            n_participants,
            n_items,
            params: MeanField { mean, sd },
        }
    }

    pub fn from_parts(n_participants: usize, n_items: usize, params: MeanField) -> Result<Self> {
        if params.len() != n_participants + n_items + 1 {
            return Err(Error::invalid("parameter vector does not match latent layout"));
        }
        let params = MeanField::new(params.mean, params.sd)?;
        Ok(Self {
            n_participants,
            n_items,
            params,
        })
    }

    pub fn n_participants(&self) -> usize {
        self.n_participants
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn params(&self) -> &MeanField {
        &self.params
    }

    fn get(&self, k: usize) -> Gaussian {
        Gaussian {
            mean: self.params.mean[k],
            sd: self.params.sd[k],
        }
    }

    pub fn theta(&self, i: usize) -> Gaussian {
        assert!(i < self.n_participants, "participant {i} out of range");
        self.get(i)
    }

    pub fn delta(&self, j: usize) -> Gaussian {
        assert!(j < self.n_items, "item {j} out of range");
        self.get(self.n_participants + j)
    }

    pub fn b(&self) -> Gaussian {
        self.get(self.n_participants + self.n_items)
    }

    pub fn means(&self) -> LatentState {
        let np = self.n_participants;
        let m = &self.params.mean;
        LatentState {
            theta: m[..np].to_vec(),
            delta: m[np..np + self.n_items].to_vec(),
            b: m[np + self.n_items],
        }
    }

    /// Append participants initialized at the prior.
    pub fn add_participants(&mut self, prior: &PriorSpec, count: usize) {
        let np = self.n_participants;
        for _ in 0..count {
            self.params.mean.insert(np, prior.theta_mean);
            self.params.sd.insert(np, prior.theta_sd);
        }
        self.n_participants += count;
    }

    /// Replace a participant's factor, e.g. to pin a latent in a test.
    pub fn set_theta(&mut self, i: usize, g: Gaussian) {
        assert!(i < self.n_participants);
        self.params.mean[i] = g.mean;
        self.params.sd[i] = g.sd;
    }

    pub fn set_delta(&mut self, j: usize, g: Gaussian) {
        assert!(j < self.n_items);
        let k = self.n_participants + j;
        self.params.mean[k] = g.mean;
        self.params.sd[k] = g.sd;
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl From<MeanFieldPosterior> for Snapshot {
    fn from(post: MeanFieldPosterior) -> Self {
        let mut latents = BTreeMap::new();
        for i in 0..post.n_participants {
            latents.insert(format!("theta[{i}]"), post.theta(i));
        }
        for j in 0..post.n_items {
            latents.insert(format!("delta[{j}]"), post.delta(j));
        }
        latents.insert("b".to_owned(), post.b());
        Snapshot {
            version: SNAPSHOT_VERSION,
            n_participants: post.n_participants,
            n_items: post.n_items,
            latents,
        }
    }
}

impl TryFrom<Snapshot> for MeanFieldPosterior {
    type Error = Error;

    fn try_from(snap: Snapshot) -> Result<Self> {
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::validation(
                "version",
                format!("unsupported snapshot version {}", snap.version),
            ));
        }
        let dim = snap.n_participants + snap.n_items + 1;
        let mut mean = vec![f64::NAN; dim];
        let mut sd = vec![f64::NAN; dim];
        for (name, g) in &snap.latents {
            let k = parse_latent_name(name, snap.n_participants, snap.n_items)
                .ok_or_else(|| Error::validation(format!("latents.{name}"), "unknown latent"))?;
            mean[k] = g.mean;
            sd[k] = g.sd;
        }
        if mean.iter().any(|m| m.is_nan()) {
            return Err(Error::validation("latents", "snapshot does not cover every latent"));
        }
        Self::from_parts(snap.n_participants, snap.n_items, MeanField::new(mean, sd)?)
    }
}

fn parse_latent_name(name: &str, np: usize, ni: usize) -> Option<usize> {
    if name == "b" {
        return Some(np + ni);
    }
    let idx = |prefix: &str| -> Option<usize> {
        name.strip_prefix(prefix)?.strip_suffix(']')?.parse().ok()
    };
    if let Some(i) = idx("theta[") {
        return (i < np).then_some(i);
    }
    if let Some(j) = idx("delta[") {
        return (j < ni).then_some(np + j);
    }
    None
}

fn infer_shape(data: &[ResponseRecord]) -> (usize, usize) {
    let np = data.iter().map(|r| r.participant_id + 1).max().unwrap_or(1);
    let ni = data.iter().map(|r| r.item_id + 1).max().unwrap_or(1);
    (np, ni)
}

/// Cold-start fit with an explicit latent shape.
pub fn fit_mean_field_shaped(
    prior: &PriorSpec,
    data: &[ResponseRecord],
    n_participants: usize,
    n_items: usize,
    cfg: &ViConfig,
) -> Result<MeanFieldPosterior> {
    cfg.validate()?;
    let init = MeanFieldPosterior::from_prior(prior, n_participants, n_items);
    fit_from(init, prior, data, cfg.step_count, cfg)
}

/// Cold-start fit; the latent shape is inferred from the records.
pub fn fit_mean_field(
    prior: &PriorSpec,
    data: &[ResponseRecord],
    cfg: &ViConfig,
) -> Result<MeanFieldPosterior> {
    let (np, ni) = infer_shape(data);
    fit_mean_field_shaped(prior, data, np, ni, cfg)
}

/// Warm-start refit from a previous posterior using `cfg.warm_steps` steps
/// and the given seed.
pub fn refit_mean_field(
    previous: &MeanFieldPosterior,
    prior: &PriorSpec,
    data: &[ResponseRecord],
    cfg: &ViConfig,
    seed: u64,
) -> Result<MeanFieldPosterior> {
    cfg.validate()?;
    let cfg = ViConfig { seed, ..*cfg };
    fit_from(previous.clone(), prior, data, cfg.warm_steps, &cfg)
}

fn fit_from(
    init: MeanFieldPosterior,
    prior: &PriorSpec,
    data: &[ResponseRecord],
    steps: usize,
    cfg: &ViConfig,
) -> Result<MeanFieldPosterior> {
    let model = IrtModel::new(*prior, data, init.n_participants, init.n_items)?;
    let params = vi::fit(
        &model,
        &init.params,
        steps,
        cfg.learning_rate,
        cfg.mc_samples_per_step,
        cfg.seed,
    )?;
    Ok(MeanFieldPosterior { params, ..init })
}

/// Monte Carlo estimate of the variational free energy of `posterior`.
pub fn variational_free_energy<R: Rng + ?Sized>(
    posterior: &MeanFieldPosterior,
    prior: &PriorSpec,
    data: &[ResponseRecord],
    s: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let model = IrtModel::new(*prior, data, posterior.n_participants, posterior.n_items)?;
    vi::free_energy(&model, &posterior.params, s, rng)
}
