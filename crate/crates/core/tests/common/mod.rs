#![allow(dead_code)]

use std::sync::Arc;

use propagate_core::corpus::Label;
use propagate_core::features::{Family, FeatureDef, FeatureManifest, FeatureTable, FeatureVector, WeightedInstance};

pub fn manifest(d: usize) -> FeatureManifest {
    FeatureManifest {
        version: 1,
        features: (0..d).map(|j| FeatureDef { name: format!("f{j}"), family: Family::Activity }).collect(),
    }
}

/// Table from raw rows; `y` holds 1 for retweeters.
pub fn table(x: &[Vec<f64>], y: &[usize], w: Option<&[f64]>) -> FeatureTable {
    let d = x.first().map_or(1, Vec::len);
    let instances = x
        .iter()
        .zip(y)
        .enumerate()
        .map(|(i, (row, &c))| WeightedInstance {
            features: FeatureVector { user_id: format!("u{i}"), request_time: 1_000 + i as i64, values: row.clone() },
            label: Label::from_index(c),
            weight: w.map_or(1.0, |w| w[i]),
        })
        .collect();
    FeatureTable { name: "fixture".into(), manifest: Arc::new(manifest(d)), instances }
}
