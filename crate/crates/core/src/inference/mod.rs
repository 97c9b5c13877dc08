//! Posterior estimation: stochastic mean-field VI for the item-response
//! model and conjugate Beta-Bernoulli updating for treatment assignment.

pub mod conjugate;
pub mod irt;
pub mod vi;

pub use conjugate::{beta_predictive, beta_update, BetaCell, BetaPosterior, GroupedTreatmentPosterior};
pub use irt::{
    fit_mean_field, fit_mean_field_shaped, refit_mean_field, variational_free_energy, Gaussian,
    IrtModel, MeanFieldPosterior,
};
pub use vi::{Estimate, LatentModel, MeanField, ViConfig};
