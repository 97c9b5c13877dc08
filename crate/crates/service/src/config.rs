//! Service and experiment configuration.

use std::path::{Path, PathBuf};

use bayesadapt::design::{PreferencePrior, SampleBudget};
use bayesadapt::inference::ViConfig;
use bayesadapt::model::{Item, ItemBank, PriorSpec};
use bayesadapt::simulation::Termination;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

pub const PORT_ENV: &str = "BAYESADAPT_PORT";
pub const DATA_DIR_ENV: &str = "BAYESADAPT_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub data_dir: PathBuf,
    /// Required as a bearer token to create experiments, when set.
    pub admin_token: Option<String>,
    /// Write a state snapshot every this many events.
    pub snapshot_every: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            data_dir: PathBuf::from("data"),
            admin_token: None,
            snapshot_every: 50,
        }
    }
}

impl ServiceConfig {
    /// Read the JSON file (if any), then apply environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ServiceError::validation("config", format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| ServiceError::validation("config", format!("{}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        if let Some(port) = get(PORT_ENV) {
            self.port = port
                .parse()
                .map_err(|_| ServiceError::validation(PORT_ENV, format!("not a port number: {port:?}")))?;
        }
        if let Some(dir) = get(DATA_DIR_ENV) {
            self.data_dir = PathBuf::from(dir);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    AdaptiveTesting,
    TreatmentAssignment,
}

/// Where the items come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemBankSource {
    /// CSV file with `item_id,prompt,accepted_answers` columns.
    Csv(PathBuf),
    Items(Vec<Item>),
    /// `n` placeholder items.
    Synthetic(usize),
}

impl ItemBankSource {
    pub fn load(&self) -> Result<ItemBank, ServiceError> {
        match self {
            ItemBankSource::Csv(path) => ItemBank::from_csv_path(path).map_err(|e| {
                ServiceError::validation("item_bank.csv", format!("cannot load item bank {}: {e}", path.display()))
            }),
            ItemBankSource::Items(items) => ItemBank::new(items.clone()).map_err(|e| prefix_field(e, "item_bank.items")),
            ItemBankSource::Synthetic(0) => Err(ServiceError::validation("item_bank.synthetic", "need at least one item")),
            ItemBankSource::Synthetic(n) => Ok(ItemBank::synthetic(*n)),
        }
    }
}

fn prefix_field(e: bayesadapt::Error, prefix: &str) -> ServiceError {
    match e {
        bayesadapt::Error::Validation { field, message } => ServiceError::validation(format!("{prefix}.{field}"), message),
        other => ServiceError::validation(prefix, other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub item_bank: ItemBankSource,
    #[serde(default)]
    pub prior: PriorSpec,
    /// Defaults to the stopping rule in testing mode and five trials per
    /// participant in treatment mode.
    #[serde(default)]
    pub termination: Option<Termination>,
    #[serde(default)]
    pub preference: PreferencePrior,
    #[serde(default)]
    pub budget: SampleBudget,
    #[serde(default)]
    pub vi: ViConfig,
    #[serde(default)]
    pub seed: u64,
    /// Bearer token guarding every request about this experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bearer_token: Option<String>,
}

pub const DEFAULT_TREATMENTS_PER_PARTICIPANT: usize = 5;

impl ExperimentConfig {
    pub fn termination(&self) -> Termination {
        self.termination.unwrap_or(match self.mode {
            Mode::AdaptiveTesting => Termination::default(),
            Mode::TreatmentAssignment => Termination::FixedBudget {
                trials: DEFAULT_TREATMENTS_PER_PARTICIPANT,
            },
        })
    }

    /// Check every field and load the item bank.
    pub fn validate(&self) -> Result<ItemBank, ServiceError> {
        self.prior.validate()?;
        self.budget.validate()?;
        self.vi.validate()?;
        PreferencePrior::new(self.preference.gamma)?;
        match self.termination() {
            Termination::Rule(stop) => {
                if self.mode == Mode::TreatmentAssignment {
                    return Err(ServiceError::validation(
                        "termination",
                        "treatment assignment needs a fixed budget",
                    ));
                }
                stop.validate()?;
            }
            Termination::FixedBudget { trials: 0 } => {
                return Err(ServiceError::validation("termination.trials", "must be at least 1"));
            }
            Termination::FixedBudget { .. } => {}
        }
        if matches!(&self.bearer_token, Some(t) if t.trim().is_empty()) {
            return Err(ServiceError::validation("bearer_token", "must not be empty"));
        }
        self.item_bank.load()
    }
}
