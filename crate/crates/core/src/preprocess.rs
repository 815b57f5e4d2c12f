//! χ² feature scoring and masking, plus the two class-imbalance treatments:
//! SMOTE oversampling and cost-sensitive instance weights.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::corpus::Label;
use crate::features::{FeatureManifest, FeatureTable, FeatureVector};

pub use crate::features::WeightedInstance;

/// Equal-frequency bins used for χ² when no count is given.
pub const DEFAULT_BINS: usize = 10;
/// Features with a p-value below this are selected.
pub const SIGNIFICANCE: f64 = 0.05;
/// Neighbours considered by SMOTE.
pub const DEFAULT_SMOTE_K: usize = 5;
/// Cost-sensitive weight ratios evaluated by default.
pub const WEIGHT_GRID: [f64; 5] = [10.0, 20.0, 30.0, 40.0, 50.0];

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("both classes are required")]
    SingleClass,
    #[error("at least 2 bins are required, got {0}")]
    InvalidBins(usize),
    #[error("unknown feature {0}")]
    UnknownFeature(String),
    #[error("feature mask selects no features")]
    EmptyMask,
    #[error("SMOTE needs at least 2 minority instances, got {0}")]
    TooFewMinority(usize),
    #[error("SMOTE needs k >= 1")]
    InvalidK,
    #[error("weight ratio must be finite and >= 1, got {0}")]
    InvalidRatio(f64),
}

impl PreprocessError {
    pub fn code(&self) -> &'static str {
        match self {
            PreprocessError::SingleClass => "SingleClass",
            PreprocessError::InvalidBins(_) => "InvalidBins",
            PreprocessError::UnknownFeature(_) => "UnknownFeature",
            PreprocessError::EmptyMask => "EmptyMask",
            PreprocessError::TooFewMinority(_) => "TooFewMinority",
            PreprocessError::InvalidK => "InvalidK",
            PreprocessError::InvalidRatio(_) => "InvalidRatio",
        }
    }
}

// ---------------------------------------------------------------------------
// χ² scoring
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    pub chi2: f64,
    pub p_value: f64,
    pub selected: bool,
}

/// Equal-frequency bin per value. Bins are assigned from the rank of the
/// first occurrence of each value, so ties always share a bin and any
/// strictly monotone transform leaves the assignment unchanged.
pub fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0; n];
    let mut run_start = 0;
    for pos in 0..n {
        if pos > 0 && values[order[pos]].total_cmp(&values[order[pos - 1]]) != Ordering::Equal {
            run_start = pos;
        }
        out[order[pos]] = run_start * bins / n;
    }
    out
}

/// Pearson χ² of a bins × 2 contingency table. Rows with no observations
/// are ignored. Returns the statistic and its degrees of freedom.
pub fn contingency_chi2(table: &[[f64; 2]]) -> (f64, usize) {
    let rows: Vec<&[f64; 2]> = table.iter().filter(|r| r[0] + r[1] > 0.0).collect();
    let col = [rows.iter().map(|r| r[0]).sum::<f64>(), rows.iter().map(|r| r[1]).sum::<f64>()];
    let n = col[0] + col[1];
    if rows.len() < 2 || col[0] == 0.0 || col[1] == 0.0 {
        return (0.0, 0);
    }
    let mut chi2 = 0.0;
    for r in &rows {
        let row_total = r[0] + r[1];
        for c in 0..2 {
            let expected = row_total * col[c] / n;
            chi2 += (r[c] - expected).powi(2) / expected;
        }
    }
    (chi2, rows.len() - 1)
}

fn p_value(chi2: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("df is positive");
    dist.sf(chi2).clamp(0.0, 1.0)
}

/// χ² of each feature against the label after equal-frequency binning.
/// Results are ranked by χ² descending, ties by feature name.
pub fn chi_squared_scores(train: &FeatureTable, bins: usize) -> Result<Vec<FeatureScore>, PreprocessError> {
    if bins < 2 {
        return Err(PreprocessError::InvalidBins(bins));
    }
    if train.count(Label::Retweeter) == 0 || train.count(Label::NonRetweeter) == 0 {
        return Err(PreprocessError::SingleClass);
    }
    let mut scores: Vec<FeatureScore> = (0..train.dims())
        .into_par_iter()
        .map(|j| {
            let column: Vec<f64> = train.instances.iter().map(|i| i.features.values[j]).collect();
            let assignment = equal_frequency_bins(&column, bins);
            let mut table = vec![[0.0; 2]; bins];
            for (inst, b) in train.instances.iter().zip(assignment) {
                table[b][inst.label.index()] += 1.0;
            }
            let (chi2, df) = contingency_chi2(&table);
            let p = p_value(chi2, df);
            FeatureScore {
                feature: train.manifest.features[j].name.clone(),
                chi2,
                p_value: p,
                selected: p < SIGNIFICANCE,
            }
        })
        .collect();
    scores.sort_by(|a, b| b.chi2.total_cmp(&a.chi2).then_with(|| a.feature.cmp(&b.feature)));
    Ok(scores)
}

pub fn selected_features(scores: &[FeatureScore]) -> Vec<String> {
    scores.iter().filter(|s| s.selected).map(|s| s.feature.clone()).collect()
}

/// `feature,chi2,p_value,selected` rows in ranking order.
pub fn scores_to_csv(scores: &[FeatureScore]) -> String {
    let mut out = String::from("feature,chi2,p_value,selected\n");
    for s in scores {
        let _ = writeln!(out, "{},{},{},{}", s.feature, s.chi2, s.p_value, s.selected);
    }
    out
}

// ---------------------------------------------------------------------------
// Masking
// ---------------------------------------------------------------------------

/// Ascending manifest indices of the retained features.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub indices: Vec<usize>,
}

impl FeatureMask {
    pub fn all(dims: usize) -> Self {
        FeatureMask { indices: (0..dims).collect() }
    }

    pub fn from_names<S: AsRef<str>>(manifest: &FeatureManifest, names: &[S]) -> Result<Self, PreprocessError> {
        let mut indices = names
            .iter()
            .map(|n| manifest.index_of(n.as_ref()).ok_or_else(|| PreprocessError::UnknownFeature(n.as_ref().to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(PreprocessError::EmptyMask);
        }
        Ok(FeatureMask { indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn project(&self, values: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| values[i]).collect()
    }
}

/// Restricts every vector to `selected`, keeping manifest order.
pub fn apply_mask<S: AsRef<str>>(table: &FeatureTable, selected: &[S]) -> Result<FeatureTable, PreprocessError> {
    let mask = FeatureMask::from_names(&table.manifest, selected)?;
    Ok(mask_table(table, &mask))
}

pub fn mask_table(table: &FeatureTable, mask: &FeatureMask) -> FeatureTable {
    FeatureTable {
        name: table.name.clone(),
        manifest: Arc::new(table.manifest.subset(&mask.indices)),
        instances: table
            .instances
            .iter()
            .map(|i| WeightedInstance {
                features: FeatureVector {
                    user_id: i.features.user_id.clone(),
                    request_time: i.features.request_time,
                    values: mask.project(&i.features.values),
                },
                label: i.label,
                weight: i.weight,
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Imbalance
// ---------------------------------------------------------------------------

/// The smaller class; retweeters on a tie.
pub fn minority_label(table: &FeatureTable) -> Label {
    if table.count(Label::NonRetweeter) < table.count(Label::Retweeter) {
        Label::NonRetweeter
    } else {
        Label::Retweeter
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Oversamples the minority class with SMOTE until both classes have the
/// same size. Synthetic points are appended after the original instances.
///
/// Neighbour distances use min-max scaling fitted on the minority class;
/// interpolation happens in the original feature space. Seeds are visited
/// round-robin in table order, and `k` is clamped to `minority - 1`.
pub fn smote(train: &FeatureTable, k: usize, seed: u64) -> Result<FeatureTable, PreprocessError> {
    if k == 0 {
        return Err(PreprocessError::InvalidK);
    }
    let minority = minority_label(train);
    let seeds: Vec<&WeightedInstance> = train.instances.iter().filter(|i| i.label == minority).collect();
    let majority_count = train.len() - seeds.len();
    if seeds.len() < 2 {
        return Err(PreprocessError::TooFewMinority(seeds.len()));
    }
    let k = k.min(seeds.len() - 1);
    let dims = train.dims();

    let mut lo = vec![f64::INFINITY; dims];
    let mut hi = vec![f64::NEG_INFINITY; dims];
    for s in &seeds {
        for (j, &v) in s.features.values.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let scaled: Vec<Vec<f64>> = seeds
        .iter()
        .map(|s| {
            s.features
                .values
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    let range = hi[j] - lo[j];
                    if range > 0.0 {
                        (v - lo[j]) / range
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    let neighbours: Vec<Vec<usize>> = (0..seeds.len())
        .into_par_iter()
        .map(|a| {
            let mut others: Vec<(f64, usize)> = (0..seeds.len())
                .filter(|&b| b != a)
                .map(|b| (squared_distance(&scaled[a], &scaled[b]), b))
                .collect();
            others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            others.truncate(k);
            others.into_iter().map(|(_, b)| b).collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = train.clone();
    let needed = majority_count.saturating_sub(seeds.len());
    out.instances.reserve(needed);
    for n in 0..needed {
        let a = n % seeds.len();
        let b = neighbours[a][rng.random_range(0..neighbours[a].len())];
        let gap: f64 = rng.random();
        let (x, y) = (&seeds[a].features.values, &seeds[b].features.values);
        let values = x.iter().zip(y).map(|(xi, yi)| xi + gap * (yi - xi)).collect();
        out.instances.push(WeightedInstance {
            features: FeatureVector {
                user_id: format!("smote-{n}"),
                request_time: seeds[a].features.request_time,
                values,
            },
            label: minority,
            weight: 1.0,
        });
    }
    Ok(out)
}

/// Sets minority weights to `ratio` and majority weights to 1.
pub fn class_weights(train: &FeatureTable, ratio: f64) -> Result<FeatureTable, PreprocessError> {
    if !(ratio.is_finite() && ratio >= 1.0) {
        return Err(PreprocessError::InvalidRatio(ratio));
    }
    let minority = minority_label(train);
    let mut out = train.clone();
    for inst in &mut out.instances {
        inst.weight = if inst.label == minority { ratio } else { 1.0 };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Family, FeatureDef};

    pub(crate) fn table(columns: &[(&str, Vec<f64>)], labels: &[bool]) -> FeatureTable {
        let manifest = FeatureManifest {
            version: 1,
            features: columns
                .iter()
                .map(|(n, _)| FeatureDef { name: n.to_string(), family: Family::Activity })
                .collect(),
        };
        FeatureTable {
            name: "t".into(),
            manifest: Arc::new(manifest),
            instances: labels
                .iter()
                .enumerate()
                .map(|(i, &l)| WeightedInstance {
                    features: FeatureVector {
                        user_id: format!("u{i}"),
                        request_time: 1,
                        values: columns.iter().map(|(_, c)| c[i]).collect(),
                    },
                    label: Label::from_bool(l),
                    weight: 1.0,
                })
                .collect(),
        }
    }

    #[test]
    fn perfect_binary_association() {
        let labels: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let col: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let t = table(&[("f", col)], &labels);
        let s = chi_squared_scores(&t, 2).unwrap();
        assert_eq!(s[0].chi2, 20.0);
        assert!(s[0].selected);
    }

    #[test]
    fn constant_feature_scores_zero() {
        let labels: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
        let t = table(&[("c", vec![4.0; 20])], &labels);
        let s = chi_squared_scores(&t, 10).unwrap();
        assert_eq!(s[0].chi2, 0.0);
        assert_eq!(s[0].p_value, 1.0);
        assert!(!s[0].selected);
    }

    #[test]
    fn independent_feature_not_selected() {
        // Each value appears once per class.
        let labels: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let col: Vec<f64> = (0..40).map(|i| (i / 2) as f64).collect();
        let t = table(&[("f", col)], &labels);
        let s = chi_squared_scores(&t, 4).unwrap();
        assert!(s[0].chi2.abs() < 1e-12);
        assert!(!s[0].selected);
    }

    #[test]
    fn chi2_errors() {
        let t = table(&[("f", vec![1.0, 2.0])], &[true, true]);
        assert!(matches!(chi_squared_scores(&t, 2), Err(PreprocessError::SingleClass)));
        let t = table(&[("f", vec![1.0, 2.0])], &[true, false]);
        assert!(matches!(chi_squared_scores(&t, 1), Err(PreprocessError::InvalidBins(1))));
    }

    #[test]
    fn ranking_ties_by_name() {
        let labels: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let col: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let t = table(&[("b", col.clone()), ("a", col), ("z", vec![0.0; 20])], &labels);
        let names: Vec<_> = chi_squared_scores(&t, 2).unwrap().into_iter().map(|s| s.feature).collect();
        assert_eq!(names, ["a", "b", "z"]);
    }

    #[test]
    fn bins_keep_ties_together() {
        let b = equal_frequency_bins(&[5.0, 1.0, 1.0, 1.0, 2.0, 3.0], 3);
        assert_eq!(b, vec![2, 0, 0, 0, 1, 2]);
    }

    #[test]
    fn mask_cases() {
        let labels = [true, false, true];
        let t = table(&[("a", vec![1.0, 2.0, 3.0]), ("b", vec![4.0, 5.0, 6.0]), ("c", vec![7.0, 8.0, 9.0])], &labels);
        let all = apply_mask(&t, &["a", "b", "c"]).unwrap();
        assert_eq!(all, t);
        let some = apply_mask(&t, &["c", "a"]).unwrap();
        assert_eq!(some.manifest.names().collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(some.instances[1].features.values, vec![2.0, 8.0]);
        assert!(matches!(apply_mask::<&str>(&t, &[]), Err(PreprocessError::EmptyMask)));
        assert!(matches!(apply_mask(&t, &["nope"]), Err(PreprocessError::UnknownFeature(_))));
    }

    #[test]
    fn smote_one_dimension() {
        let labels = [true, true, false, false, false, false, false, false];
        let t = table(&[("x", vec![0.0, 1.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0])], &labels);
        let out = smote(&t, 1, 3).unwrap();
        assert_eq!(out.count(Label::Retweeter), 6);
        assert_eq!(out.count(Label::NonRetweeter), 6);
        for inst in &out.instances[8..] {
            let v = inst.features.values[0];
            assert!((0.0..=1.0).contains(&v), "{v}");
        }
        assert_eq!(out.instances[..8], t.instances[..]);
        assert_eq!(smote(&t, 1, 3).unwrap(), out);
        assert_eq!(smote(&t, 9, 3).unwrap().count(Label::Retweeter), 6);
    }

    #[test]
    fn smote_errors() {
        let t = table(&[("x", vec![0.0, 1.0, 2.0])], &[true, false, false]);
        assert!(matches!(smote(&t, 5, 0), Err(PreprocessError::TooFewMinority(1))));
        assert!(matches!(smote(&t, 0, 0), Err(PreprocessError::InvalidK)));
    }

    #[test]
    fn weights_by_ratio() {
        let labels = [true, false, true, false, false, false, false];
        let t = table(&[("x", vec![0.0; 7])], &labels);
        let w: Vec<f64> = class_weights(&t, 10.0).unwrap().instances.iter().map(|i| i.weight).collect();
        assert_eq!(w, [10.0, 1.0, 10.0, 1.0, 1.0, 1.0, 1.0]);
        let w: Vec<f64> = class_weights(&t, 1.0).unwrap().instances.iter().map(|i| i.weight).collect();
        assert!(w.iter().all(|&x| x == 1.0));
        assert!(matches!(class_weights(&t, 0.5), Err(PreprocessError::InvalidRatio(_))));
        let grid: Vec<_> = WEIGHT_GRID.iter().map(|&r| class_weights(&t, r).unwrap()).collect();
        assert_eq!(grid.len(), 5);
    }

    #[test]
    fn csv_rendering() {
        let s = vec![FeatureScore { feature: "a".into(), chi2: 20.0, p_value: 0.001, selected: true }];
        assert_eq!(scores_to_csv(&s), "feature,chi2,p_value,selected\na,20,0.001,true\n");
    }
}
