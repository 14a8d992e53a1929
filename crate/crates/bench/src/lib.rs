//! Experiment runner for the decoding engines: configs, corpus handling,
//! runs, sweeps, and the acceptance checks.

pub mod checks;
pub mod config;
pub mod corpus;
pub mod error;
pub mod plot;
pub mod run;
pub mod stats;
pub mod sweep;
pub mod tokenize;
pub mod train;

pub use error::{BenchError, Result};
