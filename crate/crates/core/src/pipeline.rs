//! Feature selection, imbalance-weight search and training chained together.

use crate::classify::{self, Imbalance, ModelSpec, TrainedModel};
use crate::corpus::{self, Label};
use crate::features::FeatureTable;
use crate::metrics;
use crate::preprocess::{self, FeatureMask, FeatureScore, PreprocessError};

/// Share of the training data used for fitting during weight search; the
/// rest scores the candidates.
pub const SEARCH_FIT_FRACTION: f64 = 0.75;

/// Splits a table with the same stratified rule as datasets.
pub fn split_table(table: &FeatureTable, train_fraction: f64, seed: u64) -> crate::Result<(FeatureTable, FeatureTable)> {
    let labels: Vec<Label> = table.instances.iter().map(|i| i.label).collect();
    let in_train = corpus::stratified_mask(&labels, train_fraction, seed)?;
    let mut fit = FeatureTable { name: format!("{}-fit", table.name), manifest: table.manifest.clone(), instances: Vec::new() };
    let mut hold = FeatureTable { name: format!("{}-holdout", table.name), manifest: table.manifest.clone(), instances: Vec::new() };
    for (inst, t) in table.instances.iter().zip(in_train) {
        if t {
            fit.instances.push(inst.clone());
        } else {
            hold.instances.push(inst.clone());
        }
    }
    Ok((fit, hold))
}

/// χ² scores on `train` and the mask of significant features.
pub fn select_features(train: &FeatureTable, bins: usize) -> crate::Result<(Vec<FeatureScore>, FeatureMask)> {
    let scores = preprocess::chi_squared_scores(train, bins)?;
    let selected = preprocess::selected_features(&scores);
    if selected.is_empty() {
        return Err(PreprocessError::EmptyMask.into());
    }
    let mask = FeatureMask::from_names(&train.manifest, &selected)?;
    Ok((scores, mask))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioScore {
    pub ratio: f64,
    pub validation_auc: f64,
}

/// Picks the cost ratio with the best AUC on a stratified hold-out of
/// `train`; ties go to the smaller ratio.
pub fn choose_weight_ratio(
    template: &ModelSpec,
    train: &FeatureTable,
    mask: &FeatureMask,
    ratios: &[f64],
    seed: u64,
) -> crate::Result<(f64, Vec<RatioScore>)> {
    let (fit, hold) = split_table(train, SEARCH_FIT_FRACTION, seed)?;
    let mut scores = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let spec = ModelSpec { imbalance: Imbalance::Weighted { ratio }, ..template.clone() };
        let model = classify::train_masked(&spec, &fit, mask)?;
        let validation_auc = metrics::evaluate(&model, &hold)?.auc;
        scores.push(RatioScore { ratio, validation_auc });
    }
    let best = scores
        .iter()
        .fold(None::<&RatioScore>, |best, s| match best {
            Some(b) if b.validation_auc >= s.validation_auc => Some(b),
            _ => Some(s),
        })
        .map(|s| s.ratio)
        .ok_or_else(|| classify::ClassifyError::InvalidSpec("empty ratio grid".into()))?;
    Ok((best, scores))
}

/// Trains `spec`, optionally restricted to χ²-significant features.
pub fn train_with_selection(spec: &ModelSpec, train: &FeatureTable, bins: Option<usize>) -> crate::Result<TrainedModel> {
    let mask = match bins {
        Some(b) => select_features(train, b)?.1,
        None => FeatureMask::all(train.dims()),
    };
    Ok(classify::train_masked(spec, train, &mask)?)
}
