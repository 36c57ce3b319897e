//! One-hidden-layer ReLU perceptron with a softmax head, trained full-batch
//! with Adam.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{meta_usize, softmax_in_place, Codec};
use crate::error::{Error, Result};
use crate::knn::Standardizer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpOptions {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for MlpOptions {
    fn default() -> Self {
        Self {
            hidden: 32,
            epochs: 200,
            learning_rate: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    dim: usize,
    hidden: usize,
    num_classes: usize,
    scaler: Standardizer,
    /// `hidden x dim`
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// `classes x hidden`
    w2: Vec<f64>,
    b2: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grad[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

impl Mlp {
    /// Hidden weights start uniform in [-0.1, 0.1]; the output layer starts
    /// at zero so that no class is favoured by initialisation.
    pub fn fit(x: &[Vec<f64>], y: &[usize], num_classes: usize, opts: MlpOptions, seed: u64) -> Result<Self> {
        let dim = x.first().map_or(0, Vec::len);
        if x.is_empty() || dim == 0 {
            return Err(Error::data("mlp needs a non-empty training set"));
        }
        if opts.hidden == 0 {
            return Err(Error::config("mlp: hidden must be >= 1"));
        }
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let scaler = Standardizer::fit(&refs, dim);
        let z: Vec<Vec<f64>> = x.iter().map(|r| scaler.apply(r)).collect();

        let h = opts.hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self {
            dim,
            hidden: h,
            num_classes,
            scaler,
            w1: (0..h * dim).map(|_| rng.random_range(-0.1..=0.1)).collect(),
            b1: vec![0.0; h],
            w2: vec![0.0; num_classes * h],
            b2: vec![0.0; num_classes],
        };

        let mut opt = [
            Adam::new(net.w1.len()),
            Adam::new(h),
            Adam::new(net.w2.len()),
            Adam::new(num_classes),
        ];
        let n = z.len() as f64;
        let mut act = vec![0.0; h];
        let mut out = vec![0.0; num_classes];
        let mut delta_h = vec![0.0; h];
        for _ in 0..opts.epochs {
            let mut g_w1 = vec![0.0; net.w1.len()];
            let mut g_b1 = vec![0.0; h];
            let mut g_w2 = vec![0.0; net.w2.len()];
            let mut g_b2 = vec![0.0; num_classes];
            for (zi, &yi) in z.iter().zip(y) {
                net.forward(zi, &mut act, &mut out);
                out[yi] -= 1.0;
                delta_h.iter_mut().for_each(|d| *d = 0.0);
                for c in 0..num_classes {
                    let r = out[c] / n;
                    g_b2[c] += r;
                    for u in 0..h {
                        g_w2[c * h + u] += r * act[u];
                        delta_h[u] += r * net.w2[c * h + u];
                    }
                }
                for u in 0..h {
                    if act[u] <= 0.0 {
                        continue;
                    }
                    g_b1[u] += delta_h[u];
                    for j in 0..dim {
                        g_w1[u * dim + j] += delta_h[u] * zi[j];
                    }
                }
            }
            let lr = opts.learning_rate;
            opt[0].step(&mut net.w1, &g_w1, lr);
            opt[1].step(&mut net.b1, &g_b1, lr);
            opt[2].step(&mut net.w2, &g_w2, lr);
            opt[3].step(&mut net.b2, &g_b2, lr);
        }
        Ok(net)
    }

    fn forward(&self, z: &[f64], act: &mut [f64], out: &mut [f64]) {
        let d = self.dim;
        for u in 0..self.hidden {
            let mut s = self.b1[u];
            for j in 0..d {
                s += self.w1[u * d + j] * z[j];
            }
            act[u] = s.max(0.0);
        }
        for c in 0..self.num_classes {
            let mut s = self.b2[c];
            for u in 0..self.hidden {
                s += self.w2[c * self.hidden + u] * act[u];
            }
            out[c] = s;
        }
        softmax_in_place(out);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let z = self.scaler.apply(x);
        let mut act = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.num_classes];
        self.forward(&z, &mut act, &mut out);
        out
    }
}

impl Codec for Mlp {
    fn encode(&self) -> (serde_json::Value, Vec<f64>) {
        let mut params = self.scaler.mean.clone();
        for part in [&self.scaler.scale, &self.w1, &self.b1, &self.w2, &self.b2] {
            params.extend(part.iter());
        }
        (
            serde_json::json!({"dim": self.dim, "hidden": self.hidden, "classes": self.num_classes}),
            params,
        )
    }

    fn decode(meta: &serde_json::Value, params: &[f64]) -> Result<Self> {
        let d = meta_usize(meta, "dim")?;
        let h = meta_usize(meta, "hidden")?;
        let c = meta_usize(meta, "classes")?;
        let sizes = [d, d, h * d, h, c * h, c];
        if params.len() != sizes.iter().sum::<usize>() {
            return Err(Error::data("mlp block has the wrong length"));
        }
        let mut parts = Vec::with_capacity(sizes.len());
        let mut at = 0;
        for s in sizes {
            parts.push(params[at..at + s].to_vec());
            at += s;
        }
        let mut it = parts.into_iter();
        let mut next = || it.next().unwrap();
        Ok(Self {
            dim: d,
            hidden: h,
            num_classes: c,
            scaler: Standardizer {
                mean: next(),
                scale: next(),
            },
            w1: next(),
            b1: next(),
            w2: next(),
            b2: next(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learns_xor() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..80 {
            let a = (i % 2) as f64;
            let b = ((i / 2) % 2) as f64;
            let jitter = (i as f64 * 0.37).sin() * 0.1;
            x.push(vec![a + jitter, b - jitter]);
            y.push(((i % 2) ^ ((i / 2) % 2)) as usize);
        }
        let m = Mlp::fit(&x, &y, 2, MlpOptions::default(), 1).unwrap();
        let acc = x
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| super::super::argmax(&m.predict_proba(xi)) == yi)
            .count();
        assert!(acc >= 76, "xor accuracy {acc}/80");
    }

    #[test]
    fn seeded_fit_is_reproducible() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let y: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let a = Mlp::fit(&x, &y, 3, MlpOptions::default(), 9).unwrap();
        let b = Mlp::fit(&x, &y, 3, MlpOptions::default(), 9).unwrap();
        assert_eq!(a, b);
    }
}
