use super::{meta_usize, Codec};
use crate::error::{Error, Result};
use crate::knn::KnnIndex;

/// k-NN classifier; posteriors are neighbor vote fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnClassifier {
    k: usize,
    num_classes: usize,
    standardize: bool,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    index: KnnIndex,
}

impl KnnClassifier {
    pub fn fit(x: &[Vec<f64>], y: &[usize], num_classes: usize, k: usize, standardize: bool) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("knn: k must be >= 1"));
        }
        let index = KnnIndex::from_points(x, (0..x.len()).collect(), standardize)?;
        Ok(Self {
            k,
            num_classes,
            standardize,
            rows: x.to_vec(),
            labels: y.to_vec(),
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let neighbors = self.index.query(x, self.k, None)?;
        let mut p = vec![0.0; self.num_classes];
        for n in &neighbors.entries {
            p[self.labels[n.index]] += 1.0;
        }
        let total = neighbors.len() as f64;
        for v in &mut p {
            *v /= total;
        }
        Ok(p)
    }
}

impl Codec for KnnClassifier {
    fn encode(&self) -> (serde_json::Value, Vec<f64>) {
        let mut params: Vec<f64> = self.rows.iter().flatten().copied().collect();
        params.extend(self.labels.iter().map(|&y| y as f64));
        (
            serde_json::json!({
                "k": self.k,
                "classes": self.num_classes,
                "standardize": self.standardize,
                "rows": self.rows.len(),
                "dim": self.dim(),
            }),
            params,
        )
    }

    fn decode(meta: &serde_json::Value, params: &[f64]) -> Result<Self> {
        let k = meta_usize(meta, "k")?;
        let classes = meta_usize(meta, "classes")?;
        let n = meta_usize(meta, "rows")?;
        let dim = meta_usize(meta, "dim")?;
        let standardize = meta["standardize"].as_bool().unwrap_or(true);
        if params.len() != n * dim + n {
            return Err(Error::data("knn block has the wrong length"));
        }
        let rows: Vec<Vec<f64>> = params[..n * dim].chunks(dim).map(<[f64]>::to_vec).collect();
        let labels: Vec<usize> = params[n * dim..].iter().map(|&v| v as usize).collect();
        Self::fit(&rows, &labels, classes, k, standardize)
    }
}
