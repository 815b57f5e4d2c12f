use thiserror::Error;

use crate::classify::ClassifyError;
use crate::corpus::CorpusError;
use crate::features::FeatureError;
use crate::metrics::MetricsError;
use crate::personality::PersonalityError;
use crate::preprocess::PreprocessError;
use crate::recommend::RecommendError;
use crate::simulate::SimulateError;
use crate::waittime::WaitTimeError;

/// Any error raised by the crate, tagged by the module that produced it.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Personality(#[from] PersonalityError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    WaitTime(#[from] WaitTimeError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
}

impl Error {
    /// Stable variant name of the underlying error, e.g. `DuplicateUser`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Corpus(e) => e.code(),
            Error::Personality(e) => e.code(),
            Error::Features(e) => e.code(),
            Error::Preprocess(e) => e.code(),
            Error::Classify(e) => e.code(),
            Error::Metrics(e) => e.code(),
            Error::WaitTime(e) => e.code(),
            Error::Recommend(e) => e.code(),
            Error::Simulate(e) => e.code(),
        }
    }
}
