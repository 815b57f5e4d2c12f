mod common;

use proptest::prelude::*;
use propagate_core::corpus::Label;
use propagate_core::preprocess::{chi_squared_scores, class_weights, contingency_chi2, equal_frequency_bins, smote};

/// Textbook Pearson χ² written out cell by cell.
fn chi2_oracle(table: &[[f64; 2]]) -> f64 {
    let n: f64 = table.iter().map(|r| r[0] + r[1]).sum();
    let c0: f64 = table.iter().map(|r| r[0]).sum();
    let c1 = n - c0;
    let mut s = 0.0;
    for r in table {
        let rt = r[0] + r[1];
        if rt == 0.0 {
            continue;
        }
        let e0 = rt * c0 / n;
        let e1 = rt * c1 / n;
        s += (r[0] - e0) * (r[0] - e0) / e0 + (r[1] - e1) * (r[1] - e1) / e1;
    }
    s
}

#[test]
fn chi2_matches_cell_formula() {
    let cases: [&[[f64; 2]]; 3] = [
        &[[10.0, 20.0], [30.0, 5.0]],
        &[[3.0, 1.0], [2.0, 8.0], [7.0, 7.0]],
        &[[1.0, 0.0], [0.0, 0.0], [4.0, 9.0], [12.0, 2.0]],
    ];
    for t in cases {
        let (chi2, _) = contingency_chi2(t);
        assert!((chi2 - chi2_oracle(t)).abs() < 1e-9, "{t:?}");
    }
}

#[test]
fn perfect_association_equals_sample_size() {
    // A feature that splits 20 instances exactly by class.
    let x: Vec<Vec<f64>> = (0..20).map(|i| vec![if i < 10 { 0.0 } else { 1.0 }]).collect();
    let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
    let scores = chi_squared_scores(&common::table(&x, &y, None), 2).unwrap();
    assert!((scores[0].chi2 - 20.0).abs() < 1e-9);
    assert_eq!(scores[0].p_value < 0.05, scores[0].selected);
    assert!(scores[0].selected);
}

#[test]
fn two_bin_scores_match_oracle() {
    // Feature values 0/1 give a 2-bin table with counts read off directly.
    let rows = [(0.0, 1, 7), (0.0, 0, 3), (1.0, 1, 2), (1.0, 0, 8)];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (v, c, n) in rows {
        for _ in 0..n {
            x.push(vec![v]);
            y.push(c);
        }
    }
    let scores = chi_squared_scores(&common::table(&x, &y, None), 2).unwrap();
    let oracle = chi2_oracle(&[[3.0, 7.0], [8.0, 2.0]]);
    assert!((scores[0].chi2 - oracle).abs() < 1e-9);
}

#[test]
fn smote_is_deterministic_per_seed() {
    let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
    let y: Vec<usize> = (0..30).map(|i| usize::from(i % 5 == 0)).collect();
    let t = common::table(&x, &y, None);
    assert_eq!(smote(&t, 3, 4).unwrap(), smote(&t, 3, 4).unwrap());
    assert_ne!(smote(&t, 3, 4).unwrap(), smote(&t, 3, 5).unwrap());
}

#[test]
fn independent_feature_scores_zero() {
    let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 4) as f64]).collect();
    let y: Vec<usize> = (0..40).map(|i| (i / 4) % 2).collect();
    let scores = chi_squared_scores(&common::table(&x, &y, None), 4).unwrap();
    assert!(scores[0].chi2.abs() < 1e-9);
    assert!(!scores[0].selected);
}

fn imbalanced() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (3usize..12, 15usize..40, 1usize..4).prop_flat_map(|(pos, neg, d)| {
        (prop::collection::vec(prop::collection::vec(-50.0f64..50.0, d), pos + neg), Just(pos), Just(neg))
            .prop_map(|(x, pos, neg)| (x, (0..pos + neg).map(|i| usize::from(i < pos)).collect::<Vec<_>>()))
            .prop_filter("pos < neg", move |_| pos < neg)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smote_balances_with_convex_points((x, y) in imbalanced(), k in 1usize..6, seed in any::<u64>()) {
        let t = common::table(&x, &y, None);
        let out = smote(&t, k, seed).unwrap();
        prop_assert_eq!(out.count(Label::Retweeter), out.count(Label::NonRetweeter));
        prop_assert_eq!(&out.instances[..t.len()], &t.instances[..]);
        let minority: Vec<&Vec<f64>> = x.iter().zip(&y).filter(|(_, &c)| c == 1).map(|(r, _)| r).collect();
        for s in &out.instances[t.len()..] {
            prop_assert_eq!(s.label, Label::Retweeter);
            // Some pair of minority points brackets the synthetic point on one segment.
            let on_segment = minority.iter().any(|a| minority.iter().any(|b| {
                let mut gap: Option<f64> = None;
                s.features.values.iter().zip(a.iter()).zip(b.iter()).all(|((v, ai), bi)| {
                    let span = bi - ai;
                    if span.abs() < 1e-12 {
                        return (v - ai).abs() < 1e-9;
                    }
                    let g = (v - ai) / span;
                    let ok = (-1e-9..=1.0 + 1e-9).contains(&g) && gap.is_none_or(|h| (h - g).abs() < 1e-7);
                    gap.get_or_insert(g);
                    ok
                })
            }));
            prop_assert!(on_segment);
        }
    }

    #[test]
    fn class_weights_touch_only_minority((x, y) in imbalanced(), ratio in 1.0f64..60.0) {
        let out = class_weights(&common::table(&x, &y, None), ratio).unwrap();
        for i in &out.instances {
            prop_assert_eq!(i.weight, if i.label.is_retweeter() { ratio } else { 1.0 });
        }
    }

    #[test]
    fn bins_ignore_monotone_transforms(values in prop::collection::vec(-1e3f64..1e3, 1..80), bins in 2usize..12) {
        let mapped: Vec<f64> = values.iter().map(|v| v.powi(3) + 2.0).collect();
        let a = equal_frequency_bins(&values, bins);
        prop_assert_eq!(&a, &equal_frequency_bins(&mapped, bins));
        prop_assert!(a.iter().all(|&b| b < bins));
    }
}
