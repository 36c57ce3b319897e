//! Multinomial logistic regression trained by full-batch gradient descent
//! with Armijo backtracking.

use serde::{Deserialize, Serialize};

use super::{softmax_in_place, Codec};
use crate::error::{Error, Result};
use crate::knn::Standardizer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

/// Weights are `classes x (dim + 1)`, row-major, bias last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    dim: usize,
    num_classes: usize,
    scaler: Standardizer,
    weights: Vec<f64>,
    iterations: usize,
}

fn scores(w: &[f64], x: &[f64], classes: usize, out: &mut [f64]) {
    let stride = x.len() + 1;
    for (c, o) in out.iter_mut().enumerate().take(classes) {
        let row = &w[c * stride..(c + 1) * stride];
        let mut s = row[x.len()];
        for (a, b) in row.iter().zip(x) {
            s += a * b;
        }
        *o = s;
    }
}

/// Mean cross-entropy plus `l2/2 * ||W||^2` (bias excluded), and its
/// gradient with respect to the flattened weights.
pub fn objective(w: &[f64], x: &[Vec<f64>], y: &[usize], classes: usize, l2: f64) -> (f64, Vec<f64>) {
    let dim = x.first().map_or(0, Vec::len);
    let stride = dim + 1;
    let n = x.len() as f64;
    let mut grad = vec![0.0; w.len()];
    let mut loss = 0.0;
    let mut p = vec![0.0; classes];
    for (xi, &yi) in x.iter().zip(y) {
        scores(w, xi, classes, &mut p);
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + p.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        loss -= p[yi] - log_z;
        for c in 0..classes {
            let residual = (p[c] - log_z).exp() - if c == yi { 1.0 } else { 0.0 };
            let g = &mut grad[c * stride..(c + 1) * stride];
            for (gj, xj) in g.iter_mut().zip(xi) {
                *gj += residual * xj;
            }
            g[dim] += residual;
        }
    }
    loss /= n;
    for g in &mut grad {
        *g /= n;
    }
    for c in 0..classes {
        for j in 0..dim {
            let wj = w[c * stride + j];
            loss += 0.5 * l2 * wj * wj;
            grad[c * stride + j] += l2 * wj;
        }
    }
    (loss, grad)
}

fn loss_only(w: &[f64], x: &[Vec<f64>], y: &[usize], classes: usize, l2: f64) -> f64 {
    let dim = x.first().map_or(0, Vec::len);
    let stride = dim + 1;
    let mut p = vec![0.0; classes];
    let mut loss = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        scores(w, xi, classes, &mut p);
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + p.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        loss -= p[yi] - log_z;
    }
    loss /= x.len() as f64;
    for c in 0..classes {
        for j in 0..dim {
            let wj = w[c * stride + j];
            loss += 0.5 * l2 * wj * wj;
        }
    }
    loss
}

impl LogisticRegression {
    pub fn fit(x: &[Vec<f64>], y: &[usize], num_classes: usize, opts: LogisticOptions) -> Result<Self> {
        let dim = x.first().map_or(0, Vec::len);
        if x.is_empty() || dim == 0 {
            return Err(Error::data("logistic regression needs a non-empty training set"));
        }
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let scaler = Standardizer::fit(&refs, dim);
        let z: Vec<Vec<f64>> = x.iter().map(|r| scaler.apply(r)).collect();

        let mut w = vec![0.0; num_classes * (dim + 1)];
        let (mut loss, mut grad) = objective(&w, &z, y, num_classes, opts.l2);
        let mut step: f64 = 1.0;
        let mut iterations = 0;
        let mut trial = vec![0.0; w.len()];
        while iterations < opts.max_iter {
            let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
            if gnorm2.sqrt() < opts.tol {
                break;
            }
            iterations += 1;
            // Armijo backtracking from a step slightly larger than the last
            // accepted one.
            step = (step * 2.0).min(1e4);
            let mut accepted = false;
            for _ in 0..60 {
                for ((t, wi), gi) in trial.iter_mut().zip(&w).zip(&grad) {
                    *t = wi - step * gi;
                }
                let trial_loss = loss_only(&trial, &z, y, num_classes, opts.l2);
                if trial_loss <= loss - 1e-4 * step * gnorm2 {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            std::mem::swap(&mut w, &mut trial);
            (loss, grad) = objective(&w, &z, y, num_classes, opts.l2);
        }

        Ok(Self {
            dim,
            num_classes,
            scaler,
            weights: w,
            iterations,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let z = self.scaler.apply(x);
        let mut p = vec![0.0; self.num_classes];
        scores(&self.weights, &z, self.num_classes, &mut p);
        softmax_in_place(&mut p);
        p
    }
}

impl Codec for LogisticRegression {
    fn encode(&self) -> (serde_json::Value, Vec<f64>) {
        let mut params = self.scaler.mean.clone();
        params.extend(&self.scaler.scale);
        params.extend(&self.weights);
        (
            serde_json::json!({"dim": self.dim, "classes": self.num_classes, "iterations": self.iterations}),
            params,
        )
    }

    fn decode(meta: &serde_json::Value, params: &[f64]) -> Result<Self> {
        let dim = super::meta_usize(meta, "dim")?;
        let classes = super::meta_usize(meta, "classes")?;
        let iterations = super::meta_usize(meta, "iterations")?;
        let expected = 2 * dim + classes * (dim + 1);
        if params.len() != expected {
            return Err(Error::data(format!(
                "logistic block has {} values, expected {expected}",
                params.len()
            )));
        }
        Ok(Self {
            dim,
            num_classes: classes,
            scaler: Standardizer {
                mean: params[..dim].to_vec(),
                scale: params[dim..2 * dim].to_vec(),
            },
            weights: params[2 * dim..].to_vec(),
            iterations,
        })
    }
}
