//! Random forest over weighted bootstrap samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{self, Node, TreeParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Node>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub tree: TreeParams,
    /// Draws per bootstrap; defaults to the row count.
    pub bootstrap_size: Option<usize>,
}

/// Draws `draws` rows with probability proportional to `w` and returns the
/// drawn rows with their multiplicities, in row order.
///
/// A uniform `u` in `[0, Σw)` selects the first row whose cumulative weight
/// exceeds it, so replacing a row of weight 2 by two adjacent copies of
/// weight 1 maps every draw to the corresponding copy.
pub fn weighted_bootstrap<R: Rng>(w: &[f64], draws: usize, rng: &mut R) -> Vec<(usize, f64)> {
    let mut cumulative = Vec::with_capacity(w.len());
    let mut total = 0.0;
    for &wi in w {
        total += wi;
        cumulative.push(total);
    }
    let mut counts = vec![0u32; w.len()];
    for _ in 0..draws {
        let u = rng.random::<f64>() * total;
        let i = cumulative.partition_point(|&c| c <= u).min(w.len() - 1);
        counts[i] += 1;
    }
    counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i, c as f64)).collect()
}

/// Random generator for tree `index` of a forest seeded with `seed`.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

impl Forest {
    pub fn fit(x: &[Vec<f64>], y: &[usize], w: &[f64], params: &ForestParams, seed: u64) -> Forest {
        let draws = params.bootstrap_size.unwrap_or(x.len());
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = tree_rng(seed, t);
                let sample = weighted_bootstrap(w, draws, &mut rng);
                tree::fit(x, y, &sample, &params.tree, &mut rng)
            })
            .collect();
        Forest { trees }
    }

    /// Mean of the per-tree leaf frequencies.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        self.trees.iter().map(|t| t.predict_proba(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.trees.iter().all(Node::is_finite)
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.trees.iter().filter_map(Node::max_feature).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bootstrap_follows_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = weighted_bootstrap(&[0.0, 1.0, 0.0, 3.0], 4000, &mut rng);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].0, 1);
        assert_eq!(s[1].0, 3);
        let share = s[1].1 / 4000.0;
        assert!((share - 0.75).abs() < 0.03, "{share}");
    }

    #[test]
    fn unanimous_trees_give_one() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let params = ForestParams { trees: 15, tree: TreeParams::default(), bootstrap_size: None };
        let f = Forest::fit(&x, &y, &[1.0; 20], &params, 3);
        assert_eq!(f.predict_proba(&[100.0]), 1.0);
        assert_eq!(f.predict_proba(&[-100.0]), 0.0);
    }

    #[test]
    fn seeded_and_parallel_safe() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64]).collect();
        let y: Vec<usize> = (0..50).map(|i| usize::from(i % 3 == 0)).collect();
        let params = ForestParams {
            trees: 8,
            tree: TreeParams { features_per_split: Some(1), ..Default::default() },
            bootstrap_size: None,
        };
        let a = Forest::fit(&x, &y, &[1.0; 50], &params, 9);
        let b = Forest::fit(&x, &y, &[1.0; 50], &params, 9);
        assert_eq!(a, b);
        assert_ne!(a, Forest::fit(&x, &y, &[1.0; 50], &params, 10));
    }
}
