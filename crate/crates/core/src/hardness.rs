//! Instance hardness: kDN scores per view, test-time hardness estimates for
//! unlabeled queries, easiest-view selection, and cross-view dispersion
//! statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Labels, MultiViewDataset, ViewMatrix};
use crate::error::{Error, Result};
use crate::knn::KnnIndex;

pub const DEFAULT_K: usize = 5;

/// kDN of every instance in `subset`, using neighbors drawn from `subset`
/// only and never the instance itself. Output follows `subset` order.
pub fn compute_kdn(view: &ViewMatrix, labels: &Labels, subset: &[usize], k: usize, standardize: bool) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::data("k must be >= 1"));
    }
    if subset.len() <= k {
        return Err(Error::data(format!(
            "kDN needs more than k={k} instances, subset has {}",
            subset.len()
        )));
    }
    let index = KnnIndex::build(view, subset, standardize)?;
    kdn_with_index(&index, labels, k)
}

/// kDN for every point of a prebuilt index (slot order).
pub fn kdn_with_index(index: &KnnIndex, labels: &Labels, k: usize) -> Result<Vec<f64>> {
    index
        .ids()
        .iter()
        .enumerate()
        .map(|(slot, &i)| {
            let neighbors = index.query_slot(slot, k)?;
            let own = labels.get(i);
            let disagree = neighbors.entries.iter().filter(|n| labels.get(n.index) != own).count();
            Ok(disagree as f64 / k as f64)
        })
        .collect()
}

/// kDN scores for a set of instances (rows) under every view (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessMatrix {
    /// Dataset row of each matrix row.
    ids: Vec<usize>,
    view_names: Vec<String>,
    k: usize,
    scores: Vec<f64>,
}

impl HardnessMatrix {
    /// `scores` is row-major, `ids.len()` rows by `view_names.len()` columns.
    pub fn new(ids: Vec<usize>, view_names: Vec<String>, k: usize, scores: Vec<f64>) -> Result<Self> {
        if view_names.is_empty() || ids.is_empty() {
            return Err(Error::data("hardness matrix needs at least one row and one view"));
        }
        if scores.len() != ids.len() * view_names.len() {
            return Err(Error::data(format!(
                "hardness matrix {} x {} needs {} scores, got {}",
                ids.len(),
                view_names.len(),
                ids.len() * view_names.len(),
                scores.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::data(format!("hardness score {bad} outside [0, 1]")));
        }
        Ok(Self {
            ids,
            view_names,
            k,
            scores,
        })
    }

    /// Assembles columns computed independently (one per view).
    pub fn from_columns(ids: Vec<usize>, view_names: Vec<String>, k: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let rows = ids.len();
        if columns.len() != view_names.len() || columns.iter().any(|c| c.len() != rows) {
            return Err(Error::data("hardness columns do not match ids/views"));
        }
        let mut scores = Vec::with_capacity(rows * columns.len());
        for i in 0..rows {
            scores.extend(columns.iter().map(|c| c[i]));
        }
        Self::new(ids, view_names, k, scores)
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn view_names(&self) -> &[String] {
        &self.view_names
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn num_views(&self) -> usize {
        self.view_names.len()
    }

    pub fn get(&self, row: usize, view: usize) -> f64 {
        self.scores[row * self.num_views() + view]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.num_views();
        &self.scores[row * n..(row + 1) * n]
    }

    pub fn column(&self, view: usize) -> Vec<f64> {
        (0..self.num_rows()).map(|r| self.get(r, view)).collect()
    }

    /// Mean hardness of every view over all rows; used to break ties in
    /// view selection.
    pub fn view_means(&self) -> Vec<f64> {
        (0..self.num_views())
            .map(|j| {
                let mut sum = 0.0;
                for r in 0..self.num_rows() {
                    sum += self.get(r, j);
                }
                sum / self.num_rows() as f64
            })
            .collect()
    }

    /// `instance_id,<view>...` with one row per instance.
    pub fn to_csv(&self, instance_ids: &[String]) -> String {
        let mut out = String::from("instance_id");
        for name in &self.view_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (r, &id) in self.ids.iter().enumerate() {
            out.push_str(&instance_ids[id]);
            for s in self.row(r) {
                out.push(',');
                out.push_str(&s.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Heatmap layout: one row per view, one column per instance.
    pub fn to_heatmap_csv(&self, instance_ids: &[String]) -> String {
        let mut out = String::from("view");
        for &id in &self.ids {
            out.push(',');
            out.push_str(&instance_ids[id]);
        }
        out.push('\n');
        for (j, name) in self.view_names.iter().enumerate() {
            out.push_str(name);
            for r in 0..self.num_rows() {
                out.push(',');
                out.push_str(&self.get(r, j).to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// kDN columns for every view over the instances in `dsel`, computed with
/// DSEL-internal neighbors.
pub fn build_hardness_matrix(dataset: &MultiViewDataset, dsel: &[usize], k: usize, standardize: bool) -> Result<HardnessMatrix> {
    let columns = dataset
        .views()
        .par_iter()
        .map(|view| compute_kdn(view, dataset.labels(), dsel, k, standardize))
        .collect::<Result<Vec<_>>>()?;
    HardnessMatrix::from_columns(dsel.to_vec(), dataset.view_names(), k, &columns)
}

/// Estimated hardness of an unlabeled query under each view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestTimeHardness {
    pub per_view: Vec<f64>,
    /// Dataset rows of the neighbors used, per view.
    pub neighbor_ids: Vec<Vec<usize>>,
}

/// Mean stored hardness of the query's `k` nearest DSEL neighbors, per view.
///
/// `indexes[j]` must be built over the rows of `hardness` in the same order,
/// so that index slots line up with matrix rows.
pub fn estimate_test_hardness(query: &[Vec<f64>], indexes: &[KnnIndex], hardness: &HardnessMatrix, k: usize) -> Result<TestTimeHardness> {
    if query.len() != indexes.len() || indexes.len() != hardness.num_views() {
        return Err(Error::data(format!(
            "query has {} views, {} indexes, hardness matrix has {} views",
            query.len(),
            indexes.len(),
            hardness.num_views()
        )));
    }
    let mut per_view = Vec::with_capacity(query.len());
    let mut neighbor_ids = Vec::with_capacity(query.len());
    for (j, (point, index)) in query.iter().zip(indexes).enumerate() {
        if index.len() != hardness.num_rows() {
            return Err(Error::Invariant(format!(
                "view {j}: index has {} points but hardness matrix has {} rows",
                index.len(),
                hardness.num_rows()
            )));
        }
        let neighbors = index.query(point, k, None)?;
        let mut sum = 0.0;
        for n in &neighbors.entries {
            sum += hardness.get(n.slot, j);
        }
        per_view.push(sum / neighbors.len() as f64);
        neighbor_ids.push(neighbors.indices());
    }
    Ok(TestTimeHardness { per_view, neighbor_ids })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewChoice {
    pub chosen_view: usize,
    pub tie_broken: bool,
    pub per_view_hardness: Vec<f64>,
}

/// Picks the view with the lowest estimated hardness. Exact ties go to the
/// view with the lowest mean stored hardness, then the lowest view index.
pub fn select_view(per_view: &[f64], view_means: &[f64]) -> ViewChoice {
    debug_assert_eq!(per_view.len(), view_means.len());
    let best = per_view.iter().copied().fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..per_view.len()).filter(|&j| per_view[j] == best).collect();
    let chosen = tied
        .iter()
        .copied()
        .min_by(|&a, &b| view_means[a].total_cmp(&view_means[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    ViewChoice {
        chosen_view: chosen,
        tie_broken: tied.len() > 1,
        per_view_hardness: per_view.to_vec(),
    }
}

/// Cross-view dispersion of hardness, per instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessStats {
    pub ids: Vec<usize>,
    pub range: Vec<f64>,
    pub std: Vec<f64>,
    pub cv: Vec<f64>,
    /// Set where the row mean is 0 and `cv` was reported as 0.
    pub cv_undefined: Vec<bool>,
    /// `range` sorted ascending, for cumulative plots.
    pub sorted_range: Vec<f64>,
}

impl HardnessStats {
    pub fn fraction_range_above(&self, threshold: f64) -> f64 {
        let n = self.range.iter().filter(|&&r| r > threshold).count();
        n as f64 / self.range.len() as f64
    }

    pub fn to_csv(&self, instance_ids: &[String]) -> String {
        let mut out = String::from("instance_id,range,std,cv,cv_undefined\n");
        for (r, &id) in self.ids.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                instance_ids[id], self.range[r], self.std[r], self.cv[r], self.cv_undefined[r]
            ));
        }
        out
    }

    /// Rank/fraction/value rows of the ascending range profile.
    pub fn profile_csv(&self) -> String {
        let n = self.sorted_range.len();
        let mut out = String::from("rank,fraction,range\n");
        for (i, r) in self.sorted_range.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i, (i + 1) as f64 / n as f64, r));
        }
        out
    }
}

/// Range, population std and coefficient of variation across views for
/// every row of the matrix.
pub fn hardness_statistics(hardness: &HardnessMatrix) -> Result<HardnessStats> {
    let n = hardness.num_views();
    if n < 2 {
        return Err(Error::data("cross-view statistics need >=2 views"));
    }
    let rows = hardness.num_rows();
    let mut stats = HardnessStats {
        ids: hardness.ids().to_vec(),
        range: Vec::with_capacity(rows),
        std: Vec::with_capacity(rows),
        cv: Vec::with_capacity(rows),
        cv_undefined: Vec::with_capacity(rows),
        sorted_range: Vec::new(),
    };
    for r in 0..rows {
        let row = hardness.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = row.iter().sum::<f64>() / n as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        stats.range.push(max - min);
        stats.std.push(sd);
        if mean == 0.0 {
            stats.cv.push(0.0);
            stats.cv_undefined.push(true);
        } else {
            stats.cv.push(sd / mean);
            stats.cv_undefined.push(false);
        }
    }
    stats.sorted_range = stats.range.clone();
    stats.sorted_range.sort_by(f64::total_cmp);
    Ok(stats)
}
