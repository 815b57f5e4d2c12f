//! AUC, F1 and evaluation reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifyError, ModelKind, TrainedModel};
use crate::corpus::Label;
use crate::features::FeatureTable;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("both classes must be present (got {positives} positives, {negatives} negatives)")]
    SingleClass { positives: usize, negatives: usize },
    #[error("scores must be finite")]
    NonFiniteScore,
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::SingleClass { .. } => "SingleClass",
            MetricsError::NonFiniteScore => "NonFiniteScore",
            MetricsError::Classify(e) => e.code(),
        }
    }
}

/// Mann–Whitney AUC: the share of (positive, negative) pairs where the
/// positive scores higher, counting ties as half.
///
/// Computed from mid-ranks in `O(n log n)`; the doubled pair credit is an
/// integer, so the result equals brute-force pair counting exactly.
pub fn auc(scores: &[(f64, Label)]) -> Result<f64, MetricsError> {
    if scores.iter().any(|(s, _)| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore);
    }
    let positives = scores.iter().filter(|(_, l)| l.is_retweeter()).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::SingleClass { positives, negatives });
    }
    let mut sorted: Vec<(f64, bool)> = scores.iter().map(|&(s, l)| (s, l.is_retweeter())).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Twice the pair credit: per tie group, each positive earns 2 per lower
    // negative and 1 per tied negative.
    let mut credit2: u128 = 0;
    let mut negatives_below: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        let group_pos = sorted[i..j].iter().filter(|e| e.1).count() as u128;
        let group_neg = (j - i) as u128 - group_pos;
        credit2 += group_pos * (2 * negatives_below + group_neg);
        negatives_below += group_neg;
        i = j;
    }
    let pairs = positives as u128 * negatives as u128;
    Ok(credit2 as f64 / 2.0 / pairs as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[Label], actual: &[Label]) -> Confusion {
        let mut c = Confusion::default();
        for (p, a) in predicted.iter().zip(actual) {
            match (p.is_retweeter(), a.is_retweeter()) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// F1 of the retweeter class; 0 when there are no true positives.
    pub fn f1_retweeter(&self) -> f64 {
        f1_from(self.tp, self.fp, self.fn_)
    }

    /// F1 of the non-retweeter class.
    pub fn f1_non_retweeter(&self) -> f64 {
        f1_from(self.tn, self.fn_, self.fp)
    }

    /// Per-class F1 averaged with weights proportional to class support.
    pub fn f1_overall_weighted(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            return 0.0;
        }
        let pos = (self.tp + self.fn_) as f64;
        let neg = (self.tn + self.fp) as f64;
        (pos * self.f1_retweeter() + neg * self.f1_non_retweeter()) / n as f64
    }
}

fn f1_from(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    2.0 * precision * recall / (precision + recall)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum F1Mode {
    OverallWeighted,
    Retweeter,
}

pub fn f1(predicted: &[Label], actual: &[Label], mode: F1Mode) -> f64 {
    let c = Confusion::from_predictions(predicted, actual);
    match mode {
        F1Mode::OverallWeighted => c.f1_overall_weighted(),
        F1Mode::Retweeter => c.f1_retweeter(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    pub kind: ModelKind,
    /// `basic`, `smote` or `cost_sensitive(R)`.
    pub setting: String,
    pub auc: f64,
    pub f1_overall: f64,
    pub f1_retweeter: f64,
    #[serde(flatten)]
    pub confusion: Confusion,
    pub n_test: usize,
}

impl EvalReport {
    /// `<kind> <auc> <f1> <f1_retweeter>`, three decimals each.
    pub fn row(&self) -> String {
        format!("{} {:.3} {:.3} {:.3}", self.kind.display_name(), self.auc, self.f1_overall, self.f1_retweeter)
    }
}

/// Builds a report from scores and labels at threshold 0.5.
pub fn report_from_scores(
    model_id: &str,
    kind: ModelKind,
    setting: &str,
    scores: &[(f64, Label)],
) -> Result<EvalReport, MetricsError> {
    let auc = auc(scores)?;
    let predicted: Vec<Label> = scores.iter().map(|(s, _)| Label::from_bool(*s >= 0.5)).collect();
    let actual: Vec<Label> = scores.iter().map(|(_, l)| *l).collect();
    let confusion = Confusion::from_predictions(&predicted, &actual);
    Ok(EvalReport {
        model_id: model_id.to_string(),
        kind,
        setting: setting.to_string(),
        auc,
        f1_overall: confusion.f1_overall_weighted(),
        f1_retweeter: confusion.f1_retweeter(),
        confusion,
        n_test: scores.len(),
    })
}

pub fn evaluate(model: &TrainedModel, test: &FeatureTable) -> Result<EvalReport, MetricsError> {
    let probs = model.predict_table(test)?;
    let scores: Vec<(f64, Label)> = probs.into_iter().zip(test.instances.iter().map(|i| i.label)).collect();
    report_from_scores(&model.id, model.kind(), &model.spec.imbalance.setting(), &scores)
}

fn group_title(setting: &str) -> String {
    match setting {
        "basic" => "Basic".into(),
        "smote" => "SMOTE".into(),
        s => match s.strip_prefix("cost_sensitive(").and_then(|r| r.strip_suffix(')')) {
            Some(ratio) => format!("Cost-Sensitive ({ratio}:1)"),
            None => s.to_string(),
        },
    }
}

/// Aligned table with one block per setting, in first-seen order. Each
/// block lists its model kinds plus an `SMO` row marked as not implemented.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut settings: Vec<&str> = Vec::new();
    for r in reports {
        if !settings.contains(&r.setting.as_str()) {
            settings.push(&r.setting);
        }
    }
    let mut out = format!("{:<14} {:>5} {:>5} {:>16}\n", "Model", "AUC", "F1", "F1 of Retweeter");
    for setting in settings {
        out.push_str(&format!("{}\n", group_title(setting)));
        let mut rows: Vec<&EvalReport> = reports.iter().filter(|r| r.setting == setting).collect();
        rows.sort_by_key(|r| r.kind);
        for r in rows {
            out.push_str(&format!(
                "{:<14} {:>5.3} {:>5.3} {:>16.3}\n",
                r.kind.display_name(),
                r.auc,
                r.f1_overall,
                r.f1_retweeter
            ));
        }
        out.push_str(&format!("{:<14} {:>5} {:>5} {:>16}\n", "SMO", "-", "-", "not implemented"));
    }
    out
}

pub fn render_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("model_id,kind,setting,auc,f1,f1_retweeter,tp,fp,tn,fn,n_test\n");
    for r in reports {
        let c = &r.confusion;
        out.push_str(&format!(
            "{},{},{},{:.3},{:.3},{:.3},{},{},{},{},{}\n",
            r.model_id, r.kind, r.setting, r.auc, r.f1_overall, r.f1_retweeter, c.tp, c.fp, c.tn, c.fn_, r.n_test
        ));
    }
    out
}
