use serde::{Deserialize, Serialize};

use super::{meta_usize, softmax_in_place, Codec};
use crate::error::{Error, Result};

/// Gaussian naive Bayes with variance smoothing proportional to the largest
/// feature variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    dim: usize,
    num_classes: usize,
    /// `ln P(c)`; `-inf` for classes absent from training.
    log_prior: Vec<f64>,
    means: Vec<f64>,
    vars: Vec<f64>,
}

impl GaussianNb {
    pub fn fit(x: &[Vec<f64>], y: &[usize], num_classes: usize, var_smoothing: f64) -> Result<Self> {
        let dim = x.first().map_or(0, Vec::len);
        if x.is_empty() || dim == 0 {
            return Err(Error::data("naive Bayes needs a non-empty training set"));
        }
        let n = x.len() as f64;
        let mut max_var = 0.0f64;
        for j in 0..dim {
            let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let v = x.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n;
            max_var = max_var.max(v);
        }
        let epsilon = var_smoothing * if max_var > 0.0 { max_var } else { 1.0 };

        let mut counts = vec![0usize; num_classes];
        let mut means = vec![0.0; num_classes * dim];
        let mut vars = vec![0.0; num_classes * dim];
        for (xi, &yi) in x.iter().zip(y) {
            counts[yi] += 1;
            for (m, v) in means[yi * dim..(yi + 1) * dim].iter_mut().zip(xi) {
                *m += v;
            }
        }
        for c in 0..num_classes {
            if counts[c] > 0 {
                for m in &mut means[c * dim..(c + 1) * dim] {
                    *m /= counts[c] as f64;
                }
            }
        }
        for (xi, &yi) in x.iter().zip(y) {
            for j in 0..dim {
                let d = xi[j] - means[yi * dim + j];
                vars[yi * dim + j] += d * d;
            }
        }
        for c in 0..num_classes {
            for v in &mut vars[c * dim..(c + 1) * dim] {
                *v = if counts[c] > 0 { *v / counts[c] as f64 } else { 0.0 } + epsilon;
            }
        }
        let log_prior = counts
            .iter()
            .map(|&c| if c > 0 { (c as f64 / n).ln() } else { f64::NEG_INFINITY })
            .collect();
        Ok(Self {
            dim,
            num_classes,
            log_prior,
            means,
            vars,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut joint: Vec<f64> = (0..self.num_classes)
            .map(|c| {
                if self.log_prior[c] == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                let mut ll = self.log_prior[c];
                for j in 0..d {
                    let var = self.vars[c * d + j];
                    let diff = x[j] - self.means[c * d + j];
                    ll -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + diff * diff / var);
                }
                ll
            })
            .collect();
        softmax_in_place(&mut joint);
        joint
    }
}

impl Codec for GaussianNb {
    fn encode(&self) -> (serde_json::Value, Vec<f64>) {
        let mut params = self.log_prior.clone();
        params.extend(&self.means);
        params.extend(&self.vars);
        (serde_json::json!({"dim": self.dim, "classes": self.num_classes}), params)
    }

    fn decode(meta: &serde_json::Value, params: &[f64]) -> Result<Self> {
        let dim = meta_usize(meta, "dim")?;
        let c = meta_usize(meta, "classes")?;
        if params.len() != c + 2 * c * dim {
            return Err(Error::data("naive Bayes block has the wrong length"));
        }
        Ok(Self {
            dim,
            num_classes: c,
            log_prior: params[..c].to_vec(),
            means: params[c..c + c * dim].to_vec(),
            vars: params[c + c * dim..].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_classes_give_even_odds() {
        let x = vec![vec![-1.5], vec![-0.5], vec![0.5], vec![1.5]];
        let y = vec![0, 0, 1, 1];
        let nb = GaussianNb::fit(&x, &y, 2, 1e-9).unwrap();
        assert_eq!(nb.predict_proba(&[0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn matches_closed_form_posterior_argmax() {
        // Independent Gaussian features per class; the Bayes rule with the
        // true parameters must agree with the fitted model on the probes.
        let mut x = Vec::new();
        let mut y = Vec::new();
        let offsets = [-1.2, -0.6, 0.0, 0.6, 1.2];
        for &a in &offsets {
            for &b in &offsets {
                x.push(vec![a, 3.0 + b]);
                y.push(0);
                x.push(vec![4.0 + a, -1.0 + 2.0 * b]);
                y.push(1);
            }
        }
        let nb = GaussianNb::fit(&x, &y, 2, 1e-9).unwrap();
        let var = offsets.iter().map(|o| o * o).sum::<f64>() / 5.0;
        let log_pdf = |v: f64, m: f64, s2: f64| -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / s2);
        for probe in [[0.0, 0.0], [2.0, 1.0], [1.5, 2.5], [3.0, -2.0], [2.2, 0.4]] {
            let l0 = log_pdf(probe[0], 0.0, var) + log_pdf(probe[1], 3.0, var);
            let l1 = log_pdf(probe[0], 4.0, var) + log_pdf(probe[1], -1.0, 4.0 * var);
            let want = usize::from(l1 > l0);
            assert_eq!(super::super::argmax(&nb.predict_proba(&probe)), want, "{probe:?}");
        }
    }
}
