//! Gaussian naive Bayes with weighted moments.

use serde::{Deserialize, Serialize};

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    /// Class priors `[non_retweeter, retweeter]`.
    pub priors: [f64; 2],
    /// Per-class feature means.
    pub means: [Vec<f64>; 2],
    /// Per-class feature variances, floored at [`VARIANCE_FLOOR`].
    pub variances: [Vec<f64>; 2],
}

impl NaiveBayes {
    /// Caller guarantees both classes carry positive weight.
    pub fn fit(x: &[Vec<f64>], y: &[usize], w: &[f64]) -> NaiveBayes {
        let d = x.first().map_or(0, Vec::len);
        let mut mass = [0.0; 2];
        let mut means = [vec![0.0; d], vec![0.0; d]];
        for ((row, &c), &wi) in x.iter().zip(y).zip(w) {
            mass[c] += wi;
            for (m, v) in means[c].iter_mut().zip(row) {
                *m += wi * v;
            }
        }
        for c in 0..2 {
            means[c].iter_mut().for_each(|m| *m /= mass[c]);
        }
        let mut variances = [vec![0.0; d], vec![0.0; d]];
        for ((row, &c), &wi) in x.iter().zip(y).zip(w) {
            for j in 0..d {
                let dev = row[j] - means[c][j];
                variances[c][j] += wi * dev * dev;
            }
        }
        for c in 0..2 {
            variances[c].iter_mut().for_each(|v| *v = (*v / mass[c]).max(VARIANCE_FLOOR));
        }
        let total = mass[0] + mass[1];
        NaiveBayes { priors: [mass[0] / total, mass[1] / total], means, variances }
    }

    pub fn dims(&self) -> usize {
        self.means[0].len()
    }

    fn log_joint(&self, c: usize, x: &[f64]) -> f64 {
        let mut lp = self.priors[c].ln();
        for ((v, m), var) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
            let dev = v - m;
            lp -= 0.5 * (2.0 * std::f64::consts::PI * var).ln() + dev * dev / (2.0 * var);
        }
        lp
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let l0 = self.log_joint(0, x);
        let l1 = self.log_joint(1, x);
        // Logistic of the log-odds; stays finite at both extremes.
        let p = 1.0 / (1.0 + (l0 - l1).exp());
        if p.is_nan() {
            0.5
        } else {
            p
        }
    }

    pub fn is_finite(&self) -> bool {
        self.priors.iter().all(|p| p.is_finite())
            && self.means.iter().flatten().chain(self.variances.iter().flatten()).all(|v| v.is_finite())
    }
}
