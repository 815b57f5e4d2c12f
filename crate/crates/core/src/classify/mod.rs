//! Weight-aware classifiers and the versioned model file.
//!
//! [`train`] applies the spec's imbalance handling to a [`FeatureTable`],
//! fits one of four model kinds and returns an immutable [`TrainedModel`].
//! A model scores vectors laid out in its full feature manifest; the stored
//! mask selects the columns the parameters were fitted on.

pub mod adaboost;
pub mod forest;
pub mod logistic;
pub mod naive_bayes;
pub mod tree;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Label;
use crate::features::{FeatureManifest, FeatureTable, FeatureVector};
use crate::preprocess::{self, FeatureMask, PreprocessError, DEFAULT_SMOTE_K};

use adaboost::{AdaBoost, BaseParams};
use forest::{Forest, ForestParams};
use logistic::{Logistic, Standardization};
use naive_bayes::NaiveBayes;
use tree::TreeParams;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training data needs at least 2 instances of each class (got {retweeters} retweeters, {non_retweeters} non-retweeters)")]
    SingleClass { retweeters: usize, non_retweeters: usize },
    #[error("expected {expected} feature values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature manifest does not match the model's manifest")]
    ManifestMismatch,
    #[error("training diverged: loss is not finite")]
    NonFiniteLoss,
    #[error("non-finite feature value or weight in input")]
    NonFiniteInput,
    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

impl ClassifyError {
    pub fn code(&self) -> &'static str {
        match self {
            ClassifyError::SingleClass { .. } => "SingleClass",
            ClassifyError::DimensionMismatch { .. } => "DimensionMismatch",
            ClassifyError::ManifestMismatch => "ManifestMismatch",
            ClassifyError::NonFiniteLoss => "NonFiniteLoss",
            ClassifyError::NonFiniteInput => "NonFiniteInput",
            ClassifyError::VersionMismatch { .. } => "VersionMismatch",
            ClassifyError::CorruptModel(_) => "CorruptModel",
            ClassifyError::InvalidSpec(_) => "InvalidSpec",
            ClassifyError::Io { .. } => "Io",
            ClassifyError::Preprocess(e) => e.code(),
        }
    }
}

// ---------------------------------------------------------------------------
// Spec
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NaiveBayes,
    Logistic,
    RandomForest,
    AdaboostM1,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::NaiveBayes, ModelKind::Logistic, ModelKind::RandomForest, ModelKind::AdaboostM1];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::NaiveBayes => "naive_bayes",
            ModelKind::Logistic => "logistic",
            ModelKind::RandomForest => "random_forest",
            ModelKind::AdaboostM1 => "adaboost_m1",
        }
    }

    /// Row label used in evaluation tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::NaiveBayes => "Naïve Bayes",
            ModelKind::Logistic => "Logistic",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::AdaboostM1 => "AdaBoostM1",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ClassifyError::InvalidSpec(format!("unknown model kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Tree,
    RandomForest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    /// Forest size.
    pub trees: usize,
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` means `round(√d)`.
    pub features_per_split: Option<usize>,
    pub min_leaf: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Boosting rounds.
    pub rounds: usize,
    pub base_kind: BaseKind,
    /// Depth of boosted base trees.
    pub base_depth: usize,
    /// Size of boosted base forests.
    pub base_trees: usize,
    /// Draws per bootstrap sample; `None` means one per training row.
    pub bootstrap_size: Option<usize>,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            trees: 100,
            max_depth: None,
            features_per_split: None,
            min_leaf: 1,
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
            rounds: 50,
            base_kind: BaseKind::Tree,
            base_depth: 3,
            base_trees: 10,
            bootstrap_size: None,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::InvalidSpec(m.to_string()));
        if self.trees == 0 || self.base_trees == 0 {
            return bad("tree counts must be positive");
        }
        if self.rounds == 0 || self.epochs == 0 {
            return bad("rounds and epochs must be positive");
        }
        if self.min_leaf == 0 || self.base_depth == 0 {
            return bad("min_leaf and base_depth must be positive");
        }
        if self.features_per_split == Some(0) || self.bootstrap_size == Some(0) {
            return bad("features_per_split and bootstrap_size must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad("l2 must be nonnegative");
        }
        Ok(())
    }
}

/// Class-imbalance handling applied before fitting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Imbalance {
    Basic,
    Smote { k: usize },
    /// Minority instances weigh `ratio`, majority instances 1.
    Weighted { ratio: f64 },
}

impl Imbalance {
    /// Setting label used in reports: `basic`, `smote` or `cost_sensitive(R)`.
    pub fn setting(&self) -> String {
        match self {
            Imbalance::Basic => "basic".into(),
            Imbalance::Smote { .. } => "smote".into(),
            Imbalance::Weighted { ratio } => format!("cost_sensitive({ratio})"),
        }
    }
}

impl fmt::Display for Imbalance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Imbalance::Basic => f.write_str("basic"),
            Imbalance::Smote { k } if *k == DEFAULT_SMOTE_K => f.write_str("smote"),
            Imbalance::Smote { k } => write!(f, "smote:{k}"),
            Imbalance::Weighted { ratio } => write!(f, "weighted:{ratio}"),
        }
    }
}

impl FromStr for Imbalance {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ClassifyError::InvalidSpec(format!("imbalance must be basic, smote[:K] or weighted:R, got {s:?}"));
        match s.split_once(':') {
            None if s == "basic" => Ok(Imbalance::Basic),
            None if s == "smote" => Ok(Imbalance::Smote { k: DEFAULT_SMOTE_K }),
            Some(("smote", k)) => match k.parse() {
                Ok(k) if k > 0 => Ok(Imbalance::Smote { k }),
                _ => Err(bad()),
            },
            Some(("weighted", r)) => match r.parse::<f64>() {
                Ok(ratio) if ratio.is_finite() && ratio >= 1.0 => Ok(Imbalance::Weighted { ratio }),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

impl Serialize for Imbalance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Imbalance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub hyper: Hyperparameters,
    pub imbalance: Imbalance,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, imbalance: Imbalance, seed: u64) -> Self {
        ModelSpec { kind, hyper: Hyperparameters::default(), imbalance, seed }
    }
}

// ---------------------------------------------------------------------------
// Trained model
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Params {
    NaiveBayes(NaiveBayes),
    Logistic(Logistic),
    RandomForest(Forest),
    AdaboostM1(AdaBoost),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub dataset: String,
    /// Latest request time among the training instances.
    pub data_as_of: i64,
    pub train_size: usize,
    pub train_retweeters: usize,
    pub crate_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    /// SHA-256 of the serialized model with this field empty.
    pub id: String,
    pub spec: ModelSpec,
    pub manifest: FeatureManifest,
    pub mask: FeatureMask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Standardization>,
    pub params: Params,
    pub metadata: TrainingMetadata,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn compute_id(&self) -> String {
        let mut blank = self.clone();
        blank.id.clear();
        let bytes = serde_json::to_vec(&blank).expect("model serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("model serializes")
    }

    /// Checks that the model is internally consistent.
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let corrupt = |m: &str| Err(ClassifyError::CorruptModel(m.to_string()));
        let dims = self.mask.len();
        if dims == 0 || self.mask.indices.windows(2).any(|w| w[0] >= w[1]) {
            return corrupt("mask must be nonempty and strictly increasing");
        }
        if self.mask.indices.last().is_some_and(|&i| i >= self.manifest.len()) {
            return corrupt("mask refers past the manifest");
        }
        let (finite, fits) = match &self.params {
            Params::NaiveBayes(nb) => (
                nb.is_finite(),
                nb.dims() == dims && nb.means[1].len() == dims && nb.variances.iter().all(|v| v.len() == dims),
            ),
            Params::Logistic(lr) => (lr.is_finite(), lr.weights.len() == dims),
            Params::RandomForest(f) => (f.is_finite(), f.max_feature().is_none_or(|m| m < dims)),
            Params::AdaboostM1(a) => (a.is_finite(), a.max_feature().is_none_or(|m| m < dims)),
        };
        if !finite {
            return corrupt("parameters are not finite");
        }
        if !fits {
            return corrupt("parameter dimensionality does not match the mask");
        }
        let std_ok = match (&self.params, &self.standardization) {
            (Params::Logistic(_), Some(s)) => {
                s.mean.len() == dims && s.std.len() == dims && s.mean.iter().chain(&s.std).all(|v| v.is_finite())
            }
            (Params::Logistic(_), None) => false,
            (_, s) => s.is_none(),
        };
        if !std_ok {
            return corrupt("standardization does not match the model");
        }
        Ok(())
    }

    /// Retweeter probability for a vector laid out in the model's full manifest.
    pub fn predict_proba(&self, values: &[f64]) -> Result<f64, ClassifyError> {
        if values.len() != self.manifest.len() {
            return Err(ClassifyError::DimensionMismatch { expected: self.manifest.len(), found: values.len() });
        }
        let x = self.mask.project(values);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFiniteInput);
        }
        Ok(self.predict_projected(&x))
    }

    fn predict_projected(&self, x: &[f64]) -> f64 {
        let p = match &self.params {
            Params::NaiveBayes(nb) => nb.predict_proba(x),
            Params::Logistic(lr) => {
                let s = self.standardization.as_ref().expect("validated logistic model has standardization");
                lr.predict_proba(&s.apply(x))
            }
            Params::RandomForest(f) => f.predict_proba(x),
            Params::AdaboostM1(a) => a.predict_proba(x),
        };
        p.clamp(0.0, 1.0)
    }

    pub fn predict_vector(&self, fv: &FeatureVector) -> Result<f64, ClassifyError> {
        self.predict_proba(&fv.values)
    }

    /// Retweeter iff the probability is at least `threshold`.
    pub fn classify(&self, values: &[f64], threshold: f64) -> Result<Label, ClassifyError> {
        Ok(Label::from_bool(self.predict_proba(values)? >= threshold))
    }

    /// Scores every instance of a table built with the same manifest.
    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<f64>, ClassifyError> {
        if table.manifest.features != self.manifest.features {
            return Err(ClassifyError::ManifestMismatch);
        }
        table.instances.iter().map(|i| self.predict_proba(&i.features.values)).collect()
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

fn default_features_per_split(d: usize) -> usize {
    ((d as f64).sqrt().round() as usize).max(1)
}

/// Fits `spec` on every feature of `table`.
pub fn train(spec: &ModelSpec, table: &FeatureTable) -> Result<TrainedModel, ClassifyError> {
    train_masked(spec, table, &FeatureMask::all(table.dims()))
}

/// Fits `spec` on the `mask` columns of `table`; the model keeps the full manifest.
pub fn train_masked(spec: &ModelSpec, table: &FeatureTable, mask: &FeatureMask) -> Result<TrainedModel, ClassifyError> {
    spec.hyper.validate()?;
    let dims = table.dims();
    for inst in &table.instances {
        if inst.features.values.len() != dims {
            return Err(ClassifyError::DimensionMismatch { expected: dims, found: inst.features.values.len() });
        }
        if !(inst.weight.is_finite() && inst.weight > 0.0) || inst.features.values.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFiniteInput);
        }
    }
    if mask.is_empty() || mask.indices.iter().any(|&i| i >= dims) {
        return Err(ClassifyError::InvalidSpec("mask does not fit the feature manifest".into()));
    }
    let (pos, neg) = (table.count(Label::Retweeter), table.count(Label::NonRetweeter));
    if pos < 2 || neg < 2 {
        return Err(ClassifyError::SingleClass { retweeters: pos, non_retweeters: neg });
    }

    let masked = preprocess::mask_table(table, mask);
    let prepared = match spec.imbalance {
        Imbalance::Basic => masked,
        Imbalance::Smote { k } => preprocess::smote(&masked, k, spec.seed)?,
        Imbalance::Weighted { ratio } => preprocess::class_weights(&masked, ratio)?,
    };

    let x: Vec<Vec<f64>> = prepared.instances.iter().map(|i| i.features.values.clone()).collect();
    let y: Vec<usize> = prepared.instances.iter().map(|i| i.label.index()).collect();
    let w: Vec<f64> = prepared.instances.iter().map(|i| i.weight).collect();
    let d = mask.len();
    let h = &spec.hyper;

    let mut standardization = None;
    let params = match spec.kind {
        ModelKind::NaiveBayes => Params::NaiveBayes(NaiveBayes::fit(&x, &y, &w)),
        ModelKind::Logistic => {
            let s = Standardization::fit(&x);
            let xs: Vec<Vec<f64>> = x.iter().map(|r| s.apply(r)).collect();
            let lr = Logistic::fit(&xs, &y, &w, h.learning_rate, h.epochs, h.l2).ok_or(ClassifyError::NonFiniteLoss)?;
            standardization = Some(s);
            Params::Logistic(lr)
        }
        ModelKind::RandomForest => Params::RandomForest(Forest::fit(&x, &y, &w, &forest_params(h, d), spec.seed)),
        ModelKind::AdaboostM1 => {
            let base = match h.base_kind {
                BaseKind::Tree => {
                    BaseParams::Tree(TreeParams { max_depth: Some(h.base_depth), features_per_split: None, min_leaf: h.min_leaf })
                }
                BaseKind::RandomForest => BaseParams::Forest(ForestParams { trees: h.base_trees, ..forest_params(h, d) }),
            };
            Params::AdaboostM1(AdaBoost::fit(&x, &y, &w, h.rounds, &base, spec.seed))
        }
    };

    let mut model = TrainedModel {
        format_version: FORMAT_VERSION,
        id: String::new(),
        spec: spec.clone(),
        manifest: (*table.manifest).clone(),
        mask: mask.clone(),
        standardization,
        params,
        metadata: TrainingMetadata {
            dataset: table.name.clone(),
            data_as_of: table.instances.iter().map(|i| i.features.request_time).max().unwrap_or(0),
            train_size: prepared.len(),
            train_retweeters: prepared.count(Label::Retweeter),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };
    model.validate().map_err(|_| ClassifyError::NonFiniteLoss)?;
    model.id = model.compute_id();
    Ok(model)
}

fn forest_params(h: &Hyperparameters, d: usize) -> ForestParams {
    ForestParams {
        trees: h.trees,
        tree: TreeParams {
            max_depth: h.max_depth,
            features_per_split: Some(h.features_per_split.unwrap_or_else(|| default_features_per_split(d))),
            min_leaf: h.min_leaf,
        },
        bootstrap_size: h.bootstrap_size,
    }
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct Header {
    format_version: u32,
}

fn deserialize_deep<'a, T: Deserialize<'a>>(bytes: &'a [u8]) -> serde_json::Result<T> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    // Trees nest one JSON level per node; the default limit of 128 is too low.
    de.disable_recursion_limit();
    let value = T::deserialize(&mut de)?;
    de.end()?;
    Ok(value)
}

/// Parses and validates a model file's contents.
pub fn model_from_slice(bytes: &[u8]) -> Result<TrainedModel, ClassifyError> {
    let header: Header = deserialize_deep(bytes).map_err(|e| ClassifyError::CorruptModel(e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(ClassifyError::VersionMismatch { found: header.format_version, expected: FORMAT_VERSION });
    }
    let model: TrainedModel = deserialize_deep(bytes).map_err(|e| ClassifyError::CorruptModel(e.to_string()))?;
    model.validate()?;
    if model.compute_id() != model.id {
        return Err(ClassifyError::CorruptModel("id does not match contents".into()));
    }
    Ok(model)
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), ClassifyError> {
    crate::io::write_atomic(path, &model.to_json()).map_err(|source| ClassifyError::Io { path: path.to_path_buf(), source })
}

pub fn load_model(path: &Path) -> Result<TrainedModel, ClassifyError> {
    let bytes = std::fs::read(path).map_err(|source| ClassifyError::Io { path: path.to_path_buf(), source })?;
    model_from_slice(&bytes)
}
