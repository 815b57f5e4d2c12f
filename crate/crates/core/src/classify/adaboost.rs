//! AdaBoost.M1 over weight-aware trees or forests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forest::{Forest, ForestParams};
use super::logistic::sigmoid;
use super::tree::{self, Node, TreeParams};

/// Weighted error below which a round counts as perfect.
pub const ERROR_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseLearner {
    Tree(Node),
    Forest(Forest),
}

impl BaseLearner {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            BaseLearner::Tree(t) => t.predict_proba(x),
            BaseLearner::Forest(f) => f.predict_proba(x),
        }
    }

    pub fn vote(&self, x: &[f64]) -> usize {
        usize::from(self.predict_proba(x) >= 0.5)
    }

    pub fn is_finite(&self) -> bool {
        match self {
            BaseLearner::Tree(t) => t.is_finite(),
            BaseLearner::Forest(f) => f.is_finite(),
        }
    }

    pub fn max_feature(&self) -> Option<usize> {
        match self {
            BaseLearner::Tree(t) => t.max_feature(),
            BaseLearner::Forest(f) => f.max_feature(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub learner: BaseLearner,
    pub alpha: f64,
    /// Weighted training error of the learner in its round.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub rounds: Vec<Round>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaseParams {
    Tree(TreeParams),
    Forest(ForestParams),
}

impl AdaBoost {
    /// Boosts for at most `rounds` rounds, starting from the normalized
    /// instance weights `w`.
    ///
    /// Stops early when a learner's weighted error reaches 0.5 (that learner
    /// is dropped unless it is the first, which is then kept with α = 1) or 0
    /// (kept with the error floored at [`ERROR_FLOOR`]).
    pub fn fit(x: &[Vec<f64>], y: &[usize], w: &[f64], rounds: usize, base: &BaseParams, seed: u64) -> AdaBoost {
        let total: f64 = w.iter().sum();
        let mut d: Vec<f64> = w.iter().map(|wi| wi / total).collect();
        let mut out = Vec::new();
        for round in 0..rounds {
            let learner = match base {
                BaseParams::Tree(p) => {
                    let sample: Vec<(usize, f64)> = d.iter().copied().enumerate().collect();
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(round as u64);
                    BaseLearner::Tree(tree::fit(x, y, &sample, p, &mut rng))
                }
                BaseParams::Forest(p) => {
                    BaseLearner::Forest(Forest::fit(x, y, &d, p, seed.wrapping_add((round as u64) << 32)))
                }
            };
            let votes: Vec<usize> = x.iter().map(|row| learner.vote(row)).collect();
            let err: f64 = d.iter().zip(&votes).zip(y).filter(|((_, v), c)| v != c).map(|((di, _), _)| di).sum();
            if err >= 0.5 {
                if out.is_empty() {
                    out.push(Round { learner, alpha: 1.0, error: err });
                }
                break;
            }
            let e = err.max(ERROR_FLOOR);
            let alpha = 0.5 * ((1.0 - e) / e).ln();
            out.push(Round { learner, alpha, error: err });
            if err <= 0.0 {
                break;
            }
            let mut sum = 0.0;
            for ((di, v), c) in d.iter_mut().zip(&votes).zip(y) {
                *di *= if v == c { (-alpha).exp() } else { alpha.exp() };
                sum += *di;
            }
            d.iter_mut().for_each(|di| *di /= sum);
        }
        AdaBoost { rounds: out }
    }

    /// `Σ α · h(x)` with `h ∈ {−1, +1}`; positive favours retweeter.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.margin_prefix(x, self.rounds.len())
    }

    /// Margin of the ensemble truncated to its first `k` rounds.
    pub fn margin_prefix(&self, x: &[f64], k: usize) -> f64 {
        self.rounds
            .iter()
            .take(k)
            .map(|r| if r.learner.vote(x) == 1 { r.alpha } else { -r.alpha })
            .sum()
    }

    /// Logistic link of the margin, `1 / (1 + e^{−2m})`.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(2.0 * self.margin(x))
    }

    pub fn is_finite(&self) -> bool {
        self.rounds.iter().all(|r| r.alpha.is_finite() && r.error.is_finite() && r.learner.is_finite())
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.rounds.iter().filter_map(|r| r.learner.max_feature()).max()
    }
}
