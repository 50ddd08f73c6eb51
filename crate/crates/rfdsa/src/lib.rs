//! Experiment runner for RF signal classification and distributed spectrum
//! access: flat config files, model checkpoints, CSV tables and JSON run
//! manifests on top of `rfdsa-core`.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod tables;

pub use error::{Error, Result};
