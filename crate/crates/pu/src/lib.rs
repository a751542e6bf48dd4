//! Data loading, experiment configuration and reporting around
//! [`pu_core`].

pub mod config;
pub mod ingest;
pub mod report;
pub mod runner;

pub use config::{ClassifierKind, ExperimentConfig};
