//! Bayesian adaptive experimentation.
//!
//! Two decision loops share one toolbox:
//!
//! - **Adaptive testing.** A 1PL item-response model is fitted online by
//!   stochastic mean-field variational inference; each next item maximizes
//!   the expected information gain (EIG) about the participant's ability and
//!   the item's difficulty, and testing stops once no item is worth more than
//!   a threshold.
//! - **Adaptive treatment assignment.** Conjugate Beta-Bernoulli posteriors
//!   per (treatment, group) feed an expected free energy `G = -(EIG + U)`
//!   that trades information against a preference prior over outcomes.
//!
//! Around these sit bandit baselines (Thompson and exploration sampling),
//! an oracle-replay simulation harness, and reliability-diagram calibration.

pub mod calibration;
pub mod design;
pub mod error;
pub mod inference;
pub mod model;
pub mod policy;
pub mod rng;
pub mod simulation;

pub use error::{Error, Result};
