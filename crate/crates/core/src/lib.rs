//! Identify, rank and engage information propagators.
//!
//! The crate covers the full offline pipeline:
//!
//! - [`corpus`]: dataset model, JSONL ingestion and stratified splits
//! - [`personality`]: lexicon word-category scores and linear trait mapping
//! - [`features`]: the six feature families assembled into a [`features::FeatureVector`]
//! - [`preprocess`]: χ² feature scoring, masking, SMOTE and cost-sensitive weights
//! - [`classify`]: naive Bayes, logistic regression, random forest and AdaBoost.M1
//! - [`metrics`]: AUC, F1 and evaluation reports
//! - [`waittime`]: exponential wait-time models and deadline probabilities
//! - [`recommend`]: top-N ranking under a deadline and campaign metrics
//! - [`simulate`]: synthetic populations, a behavior oracle and contact strategies
//! - [`pipeline`]: glue that chains selection, imbalance handling and training

pub mod classify;
pub mod corpus;
pub mod features;
pub mod io;
pub mod metrics;
pub mod personality;
pub mod pipeline;
pub mod preprocess;
pub mod recommend;
pub mod simulate;
pub mod waittime;

mod error;

pub use error::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Seconds in one day.
pub const DAY: i64 = 86_400;
/// Seconds in one hour.
pub const HOUR: i64 = 3_600;
