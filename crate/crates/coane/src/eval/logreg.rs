//! Binary logistic regression trained by full-batch gradient descent with
//! the same Adam rule as the main model; used by the link-prediction and
//! node-classification evaluations.

use crate::objective::{adam_step, sigmoid, AdamState, LossConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegConfig {
    pub l2: f64,
    pub iters: usize,
    pub learning_rate: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2: 1.0,
            iters: 500,
            learning_rate: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LogReg {
    /// Raw decision score (the logit).
    pub fn score(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b
    }
}

/// Train on row-major features (n x dim) with 0/1 labels. Minimizes mean
/// cross-entropy plus l2/(2n) * ||w||^2 (bias unpenalized); weights start at
/// zero, so training is deterministic.
pub fn train_logreg(features: &[f64], dim: usize, labels: &[f64], cfg: &LogRegConfig) -> LogReg {
    let n = labels.len();
    assert_eq!(features.len(), n * dim);
    let mut model = LogReg {
        w: vec![0.0; dim],
        b: 0.0,
    };
    if n == 0 {
        return model;
    }
    let adam_cfg = LossConfig {
        learning_rate: cfg.learning_rate,
        ..LossConfig::default()
    };
    let mut state = AdamState::zeros(dim + 1);
    let nf = n as f64;
    let mut grad = vec![0.0; dim + 1];
    for _ in 0..cfg.iters {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (i, &y) in labels.iter().enumerate() {
            let row = &features[i * dim..(i + 1) * dim];
            let e = sigmoid(model.score(row)) - y;
            for (g, &x) in grad.iter_mut().zip(row) {
                *g += e * x;
            }
            grad[dim] += e;
        }
        for g in grad.iter_mut() {
            *g /= nf;
        }
        for (g, &w) in grad.iter_mut().zip(&model.w) {
            *g += cfg.l2 * w / nf;
        }
        let mut params: Vec<f64> = model.w.iter().copied().chain([model.b]).collect();
        adam_step("logreg", &mut params, &grad, &mut state, &adam_cfg).expect("finite gradients");
        model.b = params.pop().unwrap();
        model.w = params;
    }
    model
}
