//! L2-regularized logistic regression fitted by full-batch gradient descent.

use serde::{Deserialize, Serialize};

/// Per-feature mean and standard deviation applied before scoring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    /// Unweighted mean and population standard deviation; a zero deviation becomes 1.
    pub fn fit(x: &[Vec<f64>]) -> Standardization {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = vec![0.0; d];
        for row in x {
            for j in 0..d {
                std[j] += (row[j] - mean[j]).powi(2);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if !(*s > 0.0 && s.is_finite()) {
                *s = 1.0;
            }
        }
        Standardization { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Logistic {
    pub fn zeros(d: usize) -> Logistic {
        Logistic { weights: vec![0.0; d], bias: 0.0 }
    }

    fn margin(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Probability for an already standardized vector.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }

    /// Weighted mean log-loss plus `l2 / 2 · ‖w‖²`; the bias is not penalized.
    pub fn objective(&self, x: &[Vec<f64>], y: &[usize], w: &[f64], l2: f64) -> f64 {
        let total: f64 = w.iter().sum();
        let loss: f64 = x
            .iter()
            .zip(y)
            .zip(w)
            .map(|((row, &c), wi)| {
                let z = self.margin(row);
                // -log p(y | x) = softplus(z) - y z
                wi * (softplus(z) - if c == 1 { z } else { 0.0 })
            })
            .sum();
        loss / total + 0.5 * l2 * self.weights.iter().map(|b| b * b).sum::<f64>()
    }

    /// Gradient of [`Logistic::objective`]: `(d/dw, d/dbias)`.
    pub fn gradient(&self, x: &[Vec<f64>], y: &[usize], w: &[f64], l2: f64) -> (Vec<f64>, f64) {
        let total: f64 = w.iter().sum();
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = 0.0;
        for ((row, &c), wi) in x.iter().zip(y).zip(w) {
            let r = wi * (sigmoid(self.margin(row)) - c as f64);
            gb += r;
            for (g, v) in gw.iter_mut().zip(row) {
                *g += r * v;
            }
        }
        for (g, b) in gw.iter_mut().zip(&self.weights) {
            *g = *g / total + l2 * b;
        }
        (gw, gb / total)
    }

    /// Runs `epochs` full-batch steps from zero. Returns `None` if the
    /// parameters or the objective stop being finite.
    pub fn fit(x: &[Vec<f64>], y: &[usize], w: &[f64], rate: f64, epochs: usize, l2: f64) -> Option<Logistic> {
        let d = x.first().map_or(0, Vec::len);
        let mut model = Logistic::zeros(d);
        for _ in 0..epochs {
            let (gw, gb) = model.gradient(x, y, w, l2);
            for (b, g) in model.weights.iter_mut().zip(&gw) {
                *b -= rate * g;
            }
            model.bias -= rate * gb;
            if !model.is_finite() {
                return None;
            }
        }
        model.objective(x, y, w, l2).is_finite().then_some(model)
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|b| b.is_finite())
    }
}
