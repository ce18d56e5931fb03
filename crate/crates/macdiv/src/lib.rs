//! Simulation engine, experiment configuration and file output for the
//! `macdiv` command-line tool.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod output;

pub use config::{ExperimentSpec, SystemConfig};
pub use engine::Engine;
pub use error::{Error, Result};
