//! SAMME boosting over depth-1 axis-aligned stumps.

use serde::{Deserialize, Serialize};

use super::{argmax, meta_usize, Codec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    /// Class predicted when `x[feature] <= threshold`.
    pub left: usize,
    pub right: usize,
    pub alpha: f64,
}

impl Stump {
    fn predict(&self, x: &[f64]) -> usize {
        if x[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedStumps {
    dim: usize,
    num_classes: usize,
    stumps: Vec<Stump>,
    /// Used when no stump could be fitted (all features constant).
    prior: Vec<f64>,
}

/// Lowest weighted-error stump for the current weights.
fn best_stump(x: &[Vec<f64>], y: &[usize], w: &[f64], orders: &[Vec<usize>], classes: usize) -> Option<(Stump, f64)> {
    let total: Vec<f64> = {
        let mut t = vec![0.0; classes];
        for (&yi, &wi) in y.iter().zip(w) {
            t[yi] += wi;
        }
        t
    };
    let total_w: f64 = total.iter().sum();
    let mut best: Option<(Stump, f64)> = None;
    let mut left = vec![0.0; classes];
    let mut right = vec![0.0; classes];
    for (f, order) in orders.iter().enumerate() {
        left.iter_mut().for_each(|v| *v = 0.0);
        for pos in 0..order.len() - 1 {
            let i = order[pos];
            left[y[i]] += w[i];
            let here = x[i][f];
            let next = x[order[pos + 1]][f];
            if here == next {
                continue;
            }
            for c in 0..classes {
                right[c] = total[c] - left[c];
            }
            let lc = argmax(&left);
            let rc = argmax(&right);
            let err = total_w - left[lc] - right[rc];
            if best.as_ref().is_none_or(|(_, e)| err < *e) {
                best = Some((
                    Stump {
                        feature: f,
                        threshold: here + (next - here) / 2.0,
                        left: lc,
                        right: rc,
                        alpha: 0.0,
                    },
                    err / total_w,
                ));
            }
        }
    }
    best
}

impl BoostedStumps {
    pub fn fit(x: &[Vec<f64>], y: &[usize], num_classes: usize, rounds: usize) -> Result<Self> {
        let dim = x.first().map_or(0, Vec::len);
        if x.is_empty() || dim == 0 {
            return Err(Error::data("boosting needs a non-empty training set"));
        }
        let n = x.len();
        let mut prior = vec![0.0; num_classes];
        for &yi in y {
            prior[yi] += 1.0 / n as f64;
        }
        let orders: Vec<Vec<usize>> = (0..dim)
            .map(|f| {
                let mut o: Vec<usize> = (0..n).collect();
                o.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
                o
            })
            .collect();

        let k = num_classes as f64;
        let mut w = vec![1.0 / n as f64; n];
        let mut stumps = Vec::new();
        for _ in 0..rounds {
            let Some((mut stump, err)) = best_stump(x, y, &w, &orders, num_classes) else {
                break;
            };
            if err >= 1.0 - 1.0 / k {
                if stumps.is_empty() {
                    stump.alpha = 1.0;
                    stumps.push(stump);
                }
                break;
            }
            let e = err.max(1e-10);
            stump.alpha = ((1.0 - e) / e).ln() + (k - 1.0).ln();
            stumps.push(stump);
            if err <= 0.0 {
                break;
            }
            let boost = stump.alpha.exp();
            for i in 0..n {
                if stump.predict(&x[i]) != y[i] {
                    w[i] *= boost;
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        }
        Ok(Self {
            dim,
            num_classes,
            stumps,
            prior,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stumps(&self) -> &[Stump] {
        &self.stumps
    }

    /// Alpha-weighted votes, normalised to sum to one.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        if self.stumps.is_empty() {
            return self.prior.clone();
        }
        let mut votes = vec![0.0; self.num_classes];
        let mut total = 0.0;
        for s in &self.stumps {
            votes[s.predict(x)] += s.alpha;
            total += s.alpha;
        }
        votes.iter_mut().for_each(|v| *v /= total);
        votes
    }
}

impl Codec for BoostedStumps {
    fn encode(&self) -> (serde_json::Value, Vec<f64>) {
        let mut params = self.prior.clone();
        for s in &self.stumps {
            params.extend([s.feature as f64, s.threshold, s.left as f64, s.right as f64, s.alpha]);
        }
        (
            serde_json::json!({"dim": self.dim, "classes": self.num_classes, "stumps": self.stumps.len()}),
            params,
        )
    }

    fn decode(meta: &serde_json::Value, params: &[f64]) -> Result<Self> {
        let dim = meta_usize(meta, "dim")?;
        let c = meta_usize(meta, "classes")?;
        let count = meta_usize(meta, "stumps")?;
        if params.len() != c + 5 * count {
            return Err(Error::data("boosting block has the wrong length"));
        }
        let stumps = params[c..]
            .chunks(5)
            .map(|p| Stump {
                feature: p[0] as usize,
                threshold: p[1],
                left: p[2] as usize,
                right: p[3] as usize,
                alpha: p[4],
            })
            .collect();
        Ok(Self {
            dim,
            num_classes: c,
            stumps,
            prior: params[..c].to_vec(),
        })
    }
}
