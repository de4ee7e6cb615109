//! Experiment runner for the agents in `aixi-core`: episodes, convergence
//! statistics, λ sweeps, the two-room empowerment demo and the
//! free-energy audit.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod runner;

pub use config::{Resolved, RunConfig};
pub use error::HarnessError;
pub use runner::{run_episode, run_seeds, StepRecord};
