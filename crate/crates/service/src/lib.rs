//! Live session service for bayesadapt experiments, plus the `bayesadapt`
//! command-line tool.
//!
//! An experiment is a single-writer [`engine::Session`] whose state is
//! derived entirely from an append-only event log ([`store`]). The HTTP
//! routes in [`api`] serialize mutations per experiment and run scoring on
//! blocking worker threads.

pub mod api;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod store;

pub use error::ServiceError;
