//! Weighted CART trees with Gini impurity.

use std::cmp::Ordering;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    /// Weighted class mass reaching the leaf: `[non_retweeter, retweeter]`.
    pub counts: [f64; 2],
}

/// Nested tree; `x[feature] <= threshold` goes left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf { leaf: Leaf },
}

impl Node {
    pub fn leaf_for(&self, x: &[f64]) -> &Leaf {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { leaf } => return leaf,
                Node::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Retweeter share of the leaf mass reached by `x`.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let c = self.leaf_for(x).counts;
        let total = c[0] + c[1];
        if total > 0.0 {
            c[1] / total
        } else {
            0.5
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn max_feature(&self) -> Option<usize> {
        match self {
            Node::Leaf { .. } => None,
            Node::Split { feature, left, right, .. } => {
                Some((*feature).max(left.max_feature().unwrap_or(0)).max(right.max_feature().unwrap_or(0)))
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Node::Leaf { leaf } => leaf.counts.iter().all(|c| c.is_finite()),
            Node::Split { threshold, left, right, .. } => threshold.is_finite() && left.is_finite() && right.is_finite(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` examines all of them.
    pub features_per_split: Option<usize>,
    /// Minimum number of sample entries on each side of a split.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, features_per_split: None, min_leaf: 1 }
    }
}

/// Gini impurity scaled by node mass: `W − Σ c² / W`.
fn scaled_gini(c: [f64; 2]) -> f64 {
    let w = c[0] + c[1];
    if w <= 0.0 {
        0.0
    } else {
        w - (c[0] * c[0] + c[1] * c[1]) / w
    }
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Fits a tree on `sample`, a list of `(row, weight)` entries into `x`/`y`.
///
/// Split ties resolve to the lowest feature index, then the lowest threshold.
pub fn fit<R: Rng>(x: &[Vec<f64>], y: &[usize], sample: &[(usize, f64)], params: &TreeParams, rng: &mut R) -> Node {
    let dims = x.first().map_or(0, Vec::len);
    grow(x, y, sample.to_vec(), dims, params, 0, rng)
}

fn class_mass(y: &[usize], entries: &[(usize, f64)]) -> [f64; 2] {
    let mut c = [0.0; 2];
    for &(r, w) in entries {
        c[y[r]] += w;
    }
    c
}

fn grow<R: Rng>(
    x: &[Vec<f64>],
    y: &[usize],
    mut entries: Vec<(usize, f64)>,
    dims: usize,
    params: &TreeParams,
    depth: usize,
    rng: &mut R,
) -> Node {
    let counts = class_mass(y, &entries);
    let leaf = |counts| Node::Leaf { leaf: Leaf { counts } };
    if counts[0] == 0.0 || counts[1] == 0.0 || params.max_depth.is_some_and(|d| depth >= d) || entries.len() < 2 || dims == 0 {
        return leaf(counts);
    }

    let features: Vec<usize> = match params.features_per_split {
        Some(m) if m < dims => {
            let mut f = index::sample(rng, dims, m.max(1)).into_vec();
            f.sort_unstable();
            f
        }
        _ => (0..dims).collect(),
    };

    let parent = scaled_gini(counts);
    let min_gain = 1e-12 * (counts[0] + counts[1]);
    let mut best: Option<Best> = None;
    let min_leaf = params.min_leaf.max(1);
    for &f in &features {
        entries.sort_by(|a, b| x[a.0][f].total_cmp(&x[b.0][f]).then(a.0.cmp(&b.0)));
        let mut left = [0.0; 2];
        for i in 0..entries.len() - 1 {
            let (r, w) = entries[i];
            left[y[r]] += w;
            let (a, b) = (x[r][f], x[entries[i + 1].0][f]);
            if a.total_cmp(&b) == Ordering::Equal || i + 1 < min_leaf || entries.len() - i - 1 < min_leaf {
                continue;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            let gain = parent - scaled_gini(left) - scaled_gini(right);
            if gain > min_gain && best.as_ref().is_none_or(|bst| gain > bst.gain) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid < b { mid } else { a };
                best = Some(Best { gain, feature: f, threshold });
            }
        }
    }

    let Some(best) = best else {
        return leaf(counts);
    };
    let (l, r): (Vec<_>, Vec<_>) = entries.into_iter().partition(|e| x[e.0][best.feature] <= best.threshold);
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(x, y, l, dims, params, depth + 1, rng)),
        right: Box::new(grow(x, y, r, dims, params, depth + 1, rng)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize) -> Vec<(usize, f64)> {
        (0..n).map(|i| (i, 1.0)).collect()
    }

    #[test]
    fn single_threshold() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..10).map(|i| usize::from(i >= 6)).collect();
        let t = fit(&x, &y, &unit(10), &TreeParams::default(), &mut ChaCha8Rng::seed_from_u64(0));
        match &t {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 5.5);
            }
            _ => panic!("expected split"),
        }
        assert_eq!(t.predict_proba(&[2.0]), 0.0);
        assert_eq!(t.predict_proba(&[8.0]), 1.0);
    }

    #[test]
    fn tie_prefers_lowest_feature() {
        // Both features separate the classes equally well.
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64 * 10.0]).collect();
        let y: Vec<usize> = (0..8).map(|i| usize::from(i >= 4)).collect();
        let t = fit(&x, &y, &unit(8), &TreeParams::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(t, Node::Split { feature: 0, .. }));
    }

    #[test]
    fn depth_limit_and_weights() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y = vec![0, 1, 0, 1, 0, 1];
        let params = TreeParams { max_depth: Some(0), ..Default::default() };
        let sample: Vec<(usize, f64)> = (0..6).map(|i| (i, if y[i] == 1 { 3.0 } else { 1.0 })).collect();
        let t = fit(&x, &y, &sample, &params, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t, Node::Leaf { leaf: Leaf { counts: [3.0, 9.0] } });
        assert_eq!(t.predict_proba(&[0.0]), 0.75);
    }

    #[test]
    fn identical_rows_become_leaf() {
        let x = vec![vec![1.0], vec![1.0], vec![1.0]];
        let y = vec![0, 1, 1];
        let t = fit(&x, &y, &unit(3), &TreeParams::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn nested_json_shape() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let y = vec![0, 0, 1, 1];
        let t = fit(&x, &y, &unit(4), &TreeParams::default(), &mut ChaCha8Rng::seed_from_u64(0));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(
            json,
            r#"{"feature":0,"threshold":1.5,"left":{"leaf":{"counts":[2.0,0.0]}},"right":{"leaf":{"counts":[0.0,2.0]}}}"#
        );
        assert_eq!(serde_json::from_str::<Node>(&json).unwrap(), t);
    }
}
