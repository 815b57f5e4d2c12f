//! Synthetic populations, a ground-truth behavior oracle, and contact
//! strategy experiments.

pub mod experiment;
pub mod oracle;
pub mod population;
pub mod strategy;

use std::path::PathBuf;

use thiserror::Error;

pub use experiment::{probe_table, run_experiment, ExperimentConfig, ExperimentOutcome};
pub use oracle::{behavior_oracle, contact, probe_dataset, Response};
pub use population::{generate_population, PopulationConfig, SyntheticUser};
pub use strategy::{experiment_report, run_strategy, RunContext, ScoredPool, StrategyKind, StrategyResult, StrategySpec};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("invalid population config: {0}")]
    InvalidConfig(String),
    #[error("invalid strategy {0:?}")]
    InvalidStrategy(String),
    #[error("budget {budget} exceeds the {population} available users")]
    BudgetExceedsPopulation { budget: usize, population: usize },
    #[error("strategy needs a trained model")]
    MissingModel,
    #[error("a comparison needs at least 2 strategies, got {0}")]
    NotEnoughStrategies(usize),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl SimulateError {
    pub fn code(&self) -> &'static str {
        match self {
            SimulateError::InvalidConfig(_) => "InvalidConfig",
            SimulateError::InvalidStrategy(_) => "InvalidStrategy",
            SimulateError::BudgetExceedsPopulation { .. } => "BudgetExceedsPopulation",
            SimulateError::MissingModel => "MissingModel",
            SimulateError::NotEnoughStrategies(_) => "NotEnoughStrategies",
            SimulateError::Io { .. } => "Io",
        }
    }
}
