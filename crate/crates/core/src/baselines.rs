//! Static stacked baselines over subsets of the classifier grid, and the
//! two oracle upper bounds.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{argmax, fit_grid, ClassifierGrid, ClassifierSpec, LogisticOptions, LogisticRegression};
use crate::data::{stratified_assignment, Label, MultiViewDataset};
use crate::des::{dres_predict, DesMethod, DresState};
use crate::error::{Error, Result};

pub const INNER_FOLDS: usize = 4;

/// Which grid cells a stacked ensemble combines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "group", content = "index", rename_all = "snake_case")]
pub enum Group {
    /// One classifier spec across every view.
    A(usize),
    /// Every spec on one view.
    B(usize),
    /// The whole grid.
    C,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::A(s) => write!(f, "A[{s}]"),
            Group::B(v) => write!(f, "B[{v}]"),
            Group::C => f.write_str("C"),
        }
    }
}

/// Grid cells `(view, spec)` of a group, view-major.
pub fn build_group(num_views: usize, pool_size: usize, group: Group) -> Result<Vec<(usize, usize)>> {
    match group {
        Group::A(s) if s >= pool_size => Err(Error::config(format!("group A index {s} >= pool size {pool_size}"))),
        Group::A(s) => Ok((0..num_views).map(|v| (v, s)).collect()),
        Group::B(v) if v >= num_views => Err(Error::config(format!("group B index {v} >= view count {num_views}"))),
        Group::B(v) => Ok((0..pool_size).map(|s| (v, s)).collect()),
        Group::C => Ok((0..num_views).flat_map(|v| (0..pool_size).map(move |s| (v, s))).collect()),
    }
}

/// Out-of-fold posteriors of every grid cell on TRAIN, from an inner
/// stratified split. Computed once and shared by every group.
#[derive(Debug, Clone, PartialEq)]
pub struct OutOfFold {
    pub rows: Vec<usize>,
    pub labels: Vec<Label>,
    /// Inner fold holding each row out.
    pub fold_of_row: Vec<usize>,
    pub num_classes: usize,
    pub pool_size: usize,
    /// `posteriors[view * pool_size + spec][row]`.
    pub posteriors: Vec<Vec<Vec<f64>>>,
}

impl OutOfFold {
    pub fn posterior(&self, cell: (usize, usize), row: usize) -> &[f64] {
        &self.posteriors[cell.0 * self.pool_size + cell.1][row]
    }
}

pub fn out_of_fold_posteriors(
    dataset: &MultiViewDataset,
    train: &[usize],
    specs: &[ClassifierSpec],
    inner_folds: usize,
    seed: u64,
) -> Result<OutOfFold> {
    let labels = dataset.labels();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fold_of_row = stratified_assignment(train, labels, inner_folds, &mut rng);
    let n = dataset.num_views();
    let m = specs.len();
    let mut posteriors = vec![vec![Vec::new(); train.len()]; n * m];

    let grids = (0..inner_folds)
        .into_par_iter()
        .map(|f| {
            let mut fit_rows: Vec<usize> = train.iter().zip(&fold_of_row).filter(|(_, &g)| g != f).map(|(&i, _)| i).collect();
            fit_rows.sort_unstable();
            let mut present = vec![false; dataset.num_classes()];
            for &i in &fit_rows {
                present[labels.get(i)] = true;
            }
            if let Some(missing) = present.iter().position(|&p| !p) {
                return Err(Error::data(format!(
                    "stacking inner fold {f} has no training instance of class {missing}"
                )));
            }
            let grid = fit_grid(dataset, &fit_rows, specs)?;
            Ok((fit_rows, grid))
        })
        .collect::<Result<Vec<_>>>()?;

    for (f, (fit_rows, grid)) in grids.iter().enumerate() {
        for (r, &i) in train.iter().enumerate() {
            if fold_of_row[r] != f {
                continue;
            }
            if fit_rows.binary_search(&i).is_ok() {
                return Err(Error::Invariant(format!("row {i} is in the fit set of the model predicting it")));
            }
            for v in 0..n {
                let x = dataset.view(v).row_f64(i);
                for s in 0..m {
                    posteriors[v * m + s][r] = grid.get(v, s).predict_proba(&x)?;
                }
            }
        }
    }
    Ok(OutOfFold {
        rows: train.to_vec(),
        labels: train.iter().map(|&i| labels.get(i)).collect(),
        fold_of_row,
        num_classes: dataset.num_classes(),
        pool_size: m,
        posteriors,
    })
}

/// Logistic-regression meta-classifier over the concatenated posteriors
/// of a group's members.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedEnsemble {
    pub group: Group,
    pub members: Vec<(usize, usize)>,
    pub meta: LogisticRegression,
}

impl StackedEnsemble {
    pub fn meta_input_width(&self) -> usize {
        self.members.len() * self.meta.num_classes()
    }

    /// Level-0 posteriors come from `grid`, which must be fitted on the
    /// full TRAIN set the out-of-fold posteriors were drawn from.
    pub fn predict(&self, grid: &ClassifierGrid, query: &[Vec<f64>]) -> Result<Label> {
        let mut z = Vec::with_capacity(self.meta_input_width());
        for &(v, s) in &self.members {
            z.extend(grid.get(v, s).predict_proba(&query[v])?);
        }
        Ok(argmax(&self.meta.predict_proba(&z)))
    }
}

pub fn stacking_features(members: &[(usize, usize)], rows: impl Fn((usize, usize)) -> Vec<f64>) -> Vec<f64> {
    members.iter().flat_map(|&cell| rows(cell)).collect()
}

pub fn fit_stacked(oof: &OutOfFold, num_views: usize, group: Group) -> Result<StackedEnsemble> {
    let members = build_group(num_views, oof.pool_size, group)?;
    let x: Vec<Vec<f64>> = (0..oof.rows.len())
        .map(|r| stacking_features(&members, |cell| oof.posterior(cell, r).to_vec()))
        .collect();
    let meta = LogisticRegression::fit(&x, &oof.labels, oof.num_classes, LogisticOptions::default())?;
    Ok(StackedEnsemble { group, members, meta })
}

/// Per-query outcome of the oracle bounds. `predicted` is the true label
/// when the oracle succeeds and the DRES prediction otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub correct: bool,
    pub predicted: Label,
}

/// Succeeds when DES on some view (same method) predicts the true label.
pub fn oracle_representation(query: &[Vec<f64>], truth: Label, state: &DresState, method: DesMethod) -> Result<OracleOutcome> {
    for v in 0..state.num_views() {
        if state.des_on_view(v, &query[v], method)?.0 == truth {
            return Ok(OracleOutcome {
                correct: true,
                predicted: truth,
            });
        }
    }
    let fallback = dres_predict(query, state, method)?.label;
    Ok(OracleOutcome {
        correct: fallback == truth,
        predicted: fallback,
    })
}

/// Succeeds when any classifier on any view predicts the true label.
pub fn oracle_full(query: &[Vec<f64>], truth: Label, state: &DresState, method: DesMethod) -> Result<OracleOutcome> {
    for v in 0..state.num_views() {
        for clf in state.grid.pool(v) {
            if clf.predict(&query[v])? == truth {
                return Ok(OracleOutcome {
                    correct: true,
                    predicted: truth,
                });
            }
        }
    }
    let fallback = dres_predict(query, state, method)?.label;
    Ok(OracleOutcome {
        correct: fallback == truth,
        predicted: fallback,
    })
}
