//! Exact Beta-Bernoulli updating for treatment success rates.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BetaPosterior {
    fn default() -> Self {
        Self::uniform()
    }
}

impl BetaPosterior {
    pub fn uniform() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::invalid(format!("invalid Beta({alpha}, {beta})")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn mean(&self) -> f64 {
        beta_predictive(self)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    /// Observations absorbed beyond the uniform prior.
    pub fn observations(&self) -> f64 {
        self.alpha + self.beta - 2.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Beta::new(self.alpha, self.beta)
            .expect("validated Beta parameters")
            .sample(rng)
    }
}

/// Conjugate update with one binary outcome.
pub fn beta_update(post: BetaPosterior, y: bool) -> BetaPosterior {
    if y {
        BetaPosterior {
            alpha: post.alpha + 1.0,
            ..post
        }
    } else {
        BetaPosterior {
            beta: post.beta + 1.0,
            ..post
        }
    }
}

/// Posterior predictive `p(y = 1)`.
pub fn beta_predictive(post: &BetaPosterior) -> f64 {
    post.alpha / (post.alpha + post.beta)
}

/// Beta posteriors for every (treatment, group) cell. Serializes as its
/// list of [`BetaCell`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<BetaCell>", into = "Vec<BetaCell>")]
pub struct GroupedTreatmentPosterior {
    n_treatments: usize,
    n_groups: usize,
    cells: Vec<BetaPosterior>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaCell {
    pub treatment: usize,
    pub group: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl GroupedTreatmentPosterior {
    /// Uniform priors on a `n_treatments x n_groups` grid.
    pub fn uniform(n_treatments: usize, n_groups: usize) -> Result<Self> {
        if n_treatments == 0 || n_groups == 0 {
            return Err(Error::invalid("need at least one treatment and one group"));
        }
        Ok(Self {
            n_treatments,
            n_groups,
            cells: vec![BetaPosterior::uniform(); n_treatments * n_groups],
        })
    }

    pub fn n_treatments(&self) -> usize {
        self.n_treatments
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn get(&self, treatment: usize, group: usize) -> &BetaPosterior {
        &self.cells[self.index(treatment, group)]
    }

    pub fn set(&mut self, treatment: usize, group: usize, post: BetaPosterior) {
        let k = self.index(treatment, group);
        self.cells[k] = post;
    }

    fn index(&self, treatment: usize, group: usize) -> usize {
        assert!(
            treatment < self.n_treatments && group < self.n_groups,
            "cell ({treatment}, {group}) outside {}x{} grid",
            self.n_treatments,
            self.n_groups
        );
        treatment * self.n_groups + group
    }

    pub fn update(&mut self, treatment: usize, group: usize, y: bool) {
        let k = self.index(treatment, group);
        self.cells[k] = beta_update(self.cells[k], y);
    }

    /// Predictive success rate averaged over groups with weights `q(z)`.
    pub fn mixture_mean(&self, treatment: usize, group_weights: &[f64]) -> f64 {
        group_weights
            .iter()
            .enumerate()
            .map(|(z, w)| w * self.get(treatment, z).mean())
            .sum()
    }

    pub fn total_observations(&self) -> f64 {
        self.cells.iter().map(BetaPosterior::observations).sum()
    }

    pub fn cells(&self) -> Vec<BetaCell> {
        (0..self.n_treatments)
            .flat_map(|t| (0..self.n_groups).map(move |g| (t, g)))
            .map(|(t, g)| {
                let p = self.get(t, g);
                BetaCell {
                    treatment: t,
                    group: g,
                    alpha: p.alpha,
                    beta: p.beta,
                }
            })
            .collect()
    }

    pub fn from_cells(cells: &[BetaCell]) -> Result<Self> {
        let nt = cells.iter().map(|c| c.treatment + 1).max().unwrap_or(0);
        let ng = cells.iter().map(|c| c.group + 1).max().unwrap_or(0);
        let mut grid = Self::uniform(nt, ng)?;
        let mut seen = vec![false; nt * ng];
        for c in cells {
            let k = grid.index(c.treatment, c.group);
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::invalid(format!(
                    "duplicate cell ({}, {})",
                    c.treatment, c.group
                )));
            }
            grid.cells[k] = BetaPosterior::new(c.alpha, c.beta)?;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("incomplete treatment x group grid"));
        }
        Ok(grid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.cells())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cells: Vec<BetaCell> = serde_json::from_str(text)?;
        Self::from_cells(&cells)
    }
}

impl TryFrom<Vec<BetaCell>> for GroupedTreatmentPosterior {
    type Error = Error;

    fn try_from(cells: Vec<BetaCell>) -> Result<Self> {
        Self::from_cells(&cells)
    }
}

impl From<GroupedTreatmentPosterior> for Vec<BetaCell> {
    fn from(gp: GroupedTreatmentPosterior) -> Self {
        gp.cells()
    }
}
