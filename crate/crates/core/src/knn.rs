//! Exact Euclidean k-nearest-neighbor search over one view.
//!
//! The index is a linear scan with partial selection. Results are ordered
//! by `(distance, original index)`, so equidistant points always come back
//! in the same order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::ViewMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    /// Row index in the source view.
    pub index: usize,
    /// Position of the point inside the indexed subset.
    pub slot: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborList {
    pub query_id: Option<usize>,
    pub k: usize,
    pub entries: Vec<Neighbor>,
}

impl NeighborList {
    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().map(|n| n.index).collect()
    }

    pub fn slots(&self) -> Vec<usize> {
        self.entries.iter().map(|n| n.slot).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Per-feature affine map applied before distance computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population mean/std per column. Constant columns get scale 1 and
    /// their exact value as mean, so they map to 0.
    pub fn fit(rows: &[&[f64]], dim: usize) -> Self {
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        let mut scale = vec![1.0; dim];
        for j in 0..dim {
            let first = rows[0][j];
            if rows.iter().all(|r| r[j] == first) {
                mean[j] = first;
                continue;
            }
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n;
            mean[j] = m;
            let sd = var.sqrt();
            scale[j] = if sd > 0.0 { sd } else { 1.0 };
        }
        Self { mean, scale }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnIndex {
    dim: usize,
    ids: Vec<usize>,
    points: Vec<f64>,
    transform: Standardizer,
    standardized: bool,
}

fn cmp_candidates(a: &(f64, usize, usize), b: &(f64, usize, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl KnnIndex {
    /// Indexes the rows `indices` of `view`.
    pub fn build(view: &ViewMatrix, indices: &[usize], standardize: bool) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::data("cannot index an empty subset"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= view.rows()) {
            return Err(Error::data(format!(
                "index {bad} out of range for view {:?} ({} rows)",
                view.name(),
                view.rows()
            )));
        }
        let rows: Vec<Vec<f64>> = indices.iter().map(|&i| view.row_f64(i)).collect();
        Self::from_points(&rows, indices.to_vec(), standardize)
    }

    /// Indexes arbitrary points; `ids` label them in query results.
    pub fn from_points(rows: &[Vec<f64>], ids: Vec<usize>, standardize: bool) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::data("cannot index an empty subset"));
        }
        if ids.len() != rows.len() {
            return Err(Error::data("ids and rows differ in length"));
        }
        let dim = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.len(),
            });
        }
        let transform = if standardize {
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            Standardizer::fit(&refs, dim)
        } else {
            Standardizer::identity(dim)
        };
        let mut points = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if standardize {
                points.extend(transform.apply(r));
            } else {
                points.extend_from_slice(r);
            }
        }
        Ok(Self {
            dim,
            ids,
            points,
            transform,
            standardized: standardize,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn transform(&self) -> &Standardizer {
        &self.transform
    }

    /// Indexed point at `slot`, in the transformed space.
    pub fn point(&self, slot: usize) -> &[f64] {
        &self.points[slot * self.dim..(slot + 1) * self.dim]
    }

    /// The `k` nearest indexed points to `point` (fewer if the corpus is
    /// smaller). `exclude` drops the point whose source index matches.
    pub fn query(&self, point: &[f64], k: usize, exclude: Option<usize>) -> Result<NeighborList> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        if k == 0 {
            return Err(Error::data("k must be >= 1"));
        }
        if self.standardized {
            self.search(&self.transform.apply(point), k, exclude)
        } else {
            self.search(point, k, exclude)
        }
    }

    /// Scan over points already in the transformed space.
    fn search(&self, q: &[f64], k: usize, exclude: Option<usize>) -> Result<NeighborList> {
        let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(self.len());
        for (slot, &id) in self.ids.iter().enumerate() {
            if exclude == Some(id) {
                continue;
            }
            let p = self.point(slot);
            let mut d2 = 0.0;
            for (a, b) in q.iter().zip(p) {
                let diff = a - b;
                d2 += diff * diff;
            }
            candidates.push((d2, id, slot));
        }
        let take = k.min(candidates.len());
        if take > 0 && take < candidates.len() {
            candidates.select_nth_unstable_by(take - 1, cmp_candidates);
            candidates.truncate(take);
        }
        candidates.sort_unstable_by(cmp_candidates);
        Ok(NeighborList {
            query_id: exclude,
            k,
            entries: candidates
                .into_iter()
                .map(|(d2, index, slot)| Neighbor {
                    index,
                    slot,
                    distance: d2.sqrt(),
                })
                .collect(),
        })
    }

    /// Neighbors of the indexed point at `slot`, excluding that point.
    pub fn query_slot(&self, slot: usize, k: usize) -> Result<NeighborList> {
        let id = self.ids[slot];
        self.search(self.point(slot), k, Some(id))
    }

    /// Neighbors of an indexed row, excluding the row itself.
    pub fn query_row(&self, view: &ViewMatrix, row: usize, k: usize) -> Result<NeighborList> {
        self.query(&view.row_f64(row), k, Some(row))
    }
}
