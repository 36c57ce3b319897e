//! Dynamic ensemble selection inside one view's pool, and the two-stage
//! predictor that first picks the easiest view and then the most competent
//! classifiers in it.
//!
//! Selection works on cached pool outputs over DSEL: for every classifier
//! of a view, its posterior on every DSEL instance. A region of competence
//! is then just a lookup of those rows for the query's nearest DSEL
//! neighbors.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{argmax, fit_grid, ClassifierGrid, ClassifierSpec, LogisticOptions, LogisticRegression, TrainedClassifier};
use crate::data::{Label, MultiViewDataset, ViewMatrix};
use crate::error::{Error, Result};
use crate::hardness::{build_hardness_matrix, estimate_test_hardness, select_view, HardnessMatrix, TestTimeHardness, ViewChoice};
use crate::knn::{KnnIndex, NeighborList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesMethod {
    KnoraE,
    DesP,
    MetaDes,
}

impl DesMethod {
    pub const ALL: [DesMethod; 3] = [DesMethod::KnoraE, DesMethod::DesP, DesMethod::MetaDes];

    pub fn as_str(self) -> &'static str {
        match self {
            DesMethod::KnoraE => "knora_e",
            DesMethod::DesP => "des_p",
            DesMethod::MetaDes => "meta_des",
        }
    }
}

impl fmt::Display for DesMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DesMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DesMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown DES method {s:?} (knora_e, des_p, meta_des)")))
    }
}

/// Posteriors of every pool member on every DSEL instance of one view,
/// laid out `[classifier][slot][class]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolOutputs {
    pool_size: usize,
    rows: usize,
    num_classes: usize,
    data: Vec<f64>,
}

impl PoolOutputs {
    /// `posteriors[c][slot]` is classifier `c`'s posterior on DSEL slot `slot`.
    pub fn from_posteriors(posteriors: &[Vec<Vec<f64>>], num_classes: usize) -> Result<Self> {
        let pool_size = posteriors.len();
        let rows = posteriors.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(pool_size * rows * num_classes);
        for per_clf in posteriors {
            if per_clf.len() != rows {
                return Err(Error::data("pool outputs have ragged row counts"));
            }
            for p in per_clf {
                if p.len() != num_classes {
                    return Err(Error::data("posterior length differs from class count"));
                }
                data.extend_from_slice(p);
            }
        }
        Ok(Self {
            pool_size,
            rows,
            num_classes,
            data,
        })
    }

    /// Runs every classifier of `pool` over the rows `dsel` of `view`.
    pub fn compute(pool: &[TrainedClassifier], view: &ViewMatrix, dsel: &[usize]) -> Result<Self> {
        let num_classes = pool.first().map_or(0, |c| c.num_classes);
        let posteriors = pool
            .iter()
            .map(|clf| {
                dsel.iter()
                    .map(|&i| clf.predict_proba(&view.row_f64(i)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_posteriors(&posteriors, num_classes)
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn posterior(&self, clf: usize, slot: usize) -> &[f64] {
        let at = (clf * self.rows + slot) * self.num_classes;
        &self.data[at..at + self.num_classes]
    }

    pub fn predicted(&self, clf: usize, slot: usize) -> Label {
        argmax(self.posterior(clf, slot))
    }
}

/// The query's nearest DSEL neighbors in one view, with every pool
/// member's correctness and posterior on each of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionOfCompetence {
    pub neighbor_ids: Vec<usize>,
    pub labels: Vec<Label>,
    /// `correct[c][n]`: classifier `c` predicts neighbor `n`'s label.
    pub correct: Vec<Vec<bool>>,
    /// `posteriors[c][n]`: classifier `c`'s posterior on neighbor `n`.
    pub posteriors: Vec<Vec<Vec<f64>>>,
}

impl RegionOfCompetence {
    /// Builds a region directly from a correctness table; posteriors are
    /// one-hot on the predicted class (label if correct, otherwise the
    /// next class).
    pub fn from_bitmask(rows: &[&str], labels: Vec<Label>, num_classes: usize) -> Self {
        let correct: Vec<Vec<bool>> = rows.iter().map(|r| r.chars().map(|ch| ch == '1').collect()).collect();
        let posteriors = correct
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&labels)
                    .map(|(&ok, &y)| {
                        let mut p = vec![0.0; num_classes];
                        p[if ok { y } else { (y + 1) % num_classes }] = 1.0;
                        p
                    })
                    .collect()
            })
            .collect();
        Self {
            neighbor_ids: (0..labels.len()).collect(),
            labels,
            correct,
            posteriors,
        }
    }

    pub fn pool_size(&self) -> usize {
        self.correct.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Fraction of the region classifier `clf` gets right.
    pub fn accuracy(&self, clf: usize) -> f64 {
        let hits = self.correct[clf].iter().filter(|&&b| b).count();
        hits as f64 / self.len() as f64
    }
}

/// Looks up the region for an already computed neighbor list. `labels` is
/// indexed by DSEL slot.
pub fn build_roc(neighbors: &NeighborList, outputs: &PoolOutputs, labels: &[Label]) -> RegionOfCompetence {
    let slots = neighbors.slots();
    let nb_labels: Vec<Label> = slots.iter().map(|&s| labels[s]).collect();
    let correct = (0..outputs.pool_size())
        .map(|c| slots.iter().zip(&nb_labels).map(|(&s, &y)| outputs.predicted(c, s) == y).collect())
        .collect();
    let posteriors = (0..outputs.pool_size())
        .map(|c| slots.iter().map(|&s| outputs.posterior(c, s).to_vec()).collect())
        .collect();
    RegionOfCompetence {
        neighbor_ids: neighbors.indices(),
        labels: nb_labels,
        correct,
        posteriors,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedEnsemble {
    pub classifier_indices: Vec<usize>,
    pub method: DesMethod,
    pub fallback_used: bool,
}

impl SelectedEnsemble {
    fn full_pool(size: usize, method: DesMethod) -> Self {
        Self {
            classifier_indices: (0..size).collect(),
            method,
            fallback_used: true,
        }
    }
}

/// KNORA-Eliminate: keep classifiers correct on every neighbor; shrink the
/// region from the farthest neighbor inward until someone qualifies, and
/// fall back to the whole pool if nobody is right even on the nearest one.
pub fn knora_e(roc: &RegionOfCompetence) -> SelectedEnsemble {
    for size in (1..=roc.len()).rev() {
        let chosen: Vec<usize> = (0..roc.pool_size())
            .filter(|&c| roc.correct[c][..size].iter().all(|&b| b))
            .collect();
        if !chosen.is_empty() {
            return SelectedEnsemble {
                classifier_indices: chosen,
                method: DesMethod::KnoraE,
                fallback_used: false,
            };
        }
    }
    SelectedEnsemble::full_pool(roc.pool_size(), DesMethod::KnoraE)
}

/// DES-P: keep classifiers whose local accuracy beats random guessing
/// (`1 / num_classes`) strictly.
pub fn des_p(roc: &RegionOfCompetence, num_classes: usize) -> SelectedEnsemble {
    let chance = 1.0 / num_classes as f64;
    let chosen: Vec<usize> = (0..roc.pool_size()).filter(|&c| roc.accuracy(c) > chance).collect();
    if chosen.is_empty() {
        return SelectedEnsemble::full_pool(roc.pool_size(), DesMethod::DesP);
    }
    SelectedEnsemble {
        classifier_indices: chosen,
        method: DesMethod::DesP,
        fallback_used: false,
    }
}

/// Number of meta-features for a region of `k` neighbors.
pub fn meta_feature_len(k: usize) -> usize {
    k + 3
}

/// Meta-features of classifier `clf` for one query: `k` neighbor
/// correctness bits (nearest first, zero-padded), local accuracy, the
/// classifier's confidence on the query, and its mean posterior on the
/// neighbors' true labels.
pub fn meta_features(roc: &RegionOfCompetence, clf: usize, query_posterior: &[f64], k: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(meta_feature_len(k));
    for n in 0..k {
        f.push(match roc.correct[clf].get(n) {
            Some(true) => 1.0,
            _ => 0.0,
        });
    }
    let hits = roc.correct[clf].iter().filter(|&&b| b).count();
    let (acc, true_post) = if roc.is_empty() {
        (0.0, 0.0)
    } else {
        let tp: f64 = roc.posteriors[clf].iter().zip(&roc.labels).map(|(p, &y)| p[y]).sum();
        (hits as f64 / roc.len() as f64, tp / roc.len() as f64)
    };
    f.push(acc);
    f.push(query_posterior.iter().copied().fold(0.0, f64::max));
    f.push(true_post);
    f
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetaModel {
    /// Every meta-target was identical; competence is that constant.
    Constant(f64),
    Logistic(LogisticRegression),
}

/// Meta-classifier predicting whether a base classifier is competent for a
/// query from its meta-features.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaClassifier {
    pub k: usize,
    pub model: MetaModel,
    pub training_rows: usize,
}

impl MetaClassifier {
    pub fn competence(&self, features: &[f64]) -> f64 {
        match &self.model {
            MetaModel::Constant(p) => *p,
            MetaModel::Logistic(lr) => lr.predict_proba(features)[1],
        }
    }
}

/// Meta-training rows over DSEL: for every instance (its region taken
/// within DSEL, self excluded) and every classifier, the meta-features and
/// whether that classifier labels the instance correctly.
pub fn meta_dataset(outputs: &PoolOutputs, index: &KnnIndex, labels: &[Label], k: usize) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if index.len() != outputs.rows() || labels.len() != outputs.rows() {
        return Err(Error::Invariant("meta-training inputs disagree on DSEL size".into()));
    }
    if index.len() < 2 {
        return Err(Error::data("META-DES needs at least 2 DSEL instances"));
    }
    let mut x = Vec::with_capacity(outputs.rows() * outputs.pool_size());
    let mut y = Vec::with_capacity(x.capacity());
    for slot in 0..outputs.rows() {
        let neighbors = index.query_slot(slot, k)?;
        let roc = build_roc(&neighbors, outputs, labels);
        for c in 0..outputs.pool_size() {
            x.push(meta_features(&roc, c, outputs.posterior(c, slot), k));
            y.push(usize::from(outputs.predicted(c, slot) == labels[slot]));
        }
    }
    Ok((x, y))
}

pub fn meta_des_train(outputs: &PoolOutputs, index: &KnnIndex, labels: &[Label], k: usize) -> Result<MetaClassifier> {
    let (x, y) = meta_dataset(outputs, index, labels, k)?;
    let positives = y.iter().filter(|&&t| t == 1).count();
    let model = if positives == 0 || positives == y.len() {
        MetaModel::Constant(positives as f64 / y.len() as f64)
    } else {
        MetaModel::Logistic(LogisticRegression::fit(&x, &y, 2, LogisticOptions::default())?)
    };
    Ok(MetaClassifier {
        k,
        model,
        training_rows: x.len(),
    })
}

/// Keeps classifiers whose competence exceeds `threshold`.
pub fn select_by_competence(competences: &[f64], threshold: f64) -> SelectedEnsemble {
    let chosen: Vec<usize> = (0..competences.len()).filter(|&c| competences[c] > threshold).collect();
    if chosen.is_empty() {
        return SelectedEnsemble::full_pool(competences.len(), DesMethod::MetaDes);
    }
    SelectedEnsemble {
        classifier_indices: chosen,
        method: DesMethod::MetaDes,
        fallback_used: false,
    }
}

pub const META_DES_THRESHOLD: f64 = 0.5;

pub fn meta_des_competences(meta: &MetaClassifier, roc: &RegionOfCompetence, query_posteriors: &[Vec<f64>]) -> Vec<f64> {
    (0..roc.pool_size())
        .map(|c| meta.competence(&meta_features(roc, c, &query_posteriors[c], meta.k)))
        .collect()
}

pub fn meta_des_select(meta: &MetaClassifier, roc: &RegionOfCompetence, query_posteriors: &[Vec<f64>]) -> SelectedEnsemble {
    select_by_competence(&meta_des_competences(meta, roc, query_posteriors), META_DES_THRESHOLD)
}

/// Plurality vote over the selected members' hard labels. Vote ties go to
/// the tied class with the highest summed posterior, then the lowest index.
pub fn majority_vote(selected: &[usize], query_posteriors: &[Vec<f64>], num_classes: usize) -> Label {
    let mut votes = vec![0usize; num_classes];
    let mut mass = vec![0.0; num_classes];
    for &c in selected {
        let p = &query_posteriors[c];
        votes[argmax(p)] += 1;
        for (m, v) in mass.iter_mut().zip(p) {
            *m += v;
        }
    }
    let top = votes.iter().copied().max().unwrap_or(0);
    let mut best = None::<usize>;
    for class in (0..num_classes).filter(|&c| votes[c] == top) {
        match best {
            Some(b) if mass[class] <= mass[b] => {}
            _ => best = Some(class),
        }
    }
    best.unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DresParams {
    /// Neighbors for kDN and test-time hardness.
    pub k_hardness: usize,
    /// Neighbors in the region of competence.
    pub k_roc: usize,
    pub standardize: bool,
}

impl Default for DresParams {
    fn default() -> Self {
        Self {
            k_hardness: 5,
            k_roc: 5,
            standardize: true,
        }
    }
}

/// Everything fitted for one fold: the grid, DSEL hardness, per-view DSEL
/// indexes, cached pool outputs on DSEL, and one META-DES meta-classifier
/// per view.
#[derive(Debug, Clone)]
pub struct DresState {
    pub params: DresParams,
    pub grid: ClassifierGrid,
    pub hardness: HardnessMatrix,
    pub view_means: Vec<f64>,
    pub indexes: Vec<KnnIndex>,
    pub outputs: Vec<PoolOutputs>,
    /// DSEL labels in slot order.
    pub dsel_labels: Vec<Label>,
    pub meta: Vec<MetaClassifier>,
}

impl DresState {
    /// Fits the grid on `train` and builds everything else over `dsel`.
    pub fn fit(dataset: &MultiViewDataset, train: &[usize], dsel: &[usize], specs: &[ClassifierSpec], params: DresParams) -> Result<Self> {
        let grid = fit_grid(dataset, train, specs)?;
        Self::from_grid(dataset, grid, dsel, params)
    }

    /// Builds the selection state around an already fitted grid.
    pub fn from_grid(dataset: &MultiViewDataset, grid: ClassifierGrid, dsel: &[usize], params: DresParams) -> Result<Self> {
        if grid.num_views() != dataset.num_views() {
            return Err(Error::data("grid and dataset disagree on view count"));
        }
        let hardness = build_hardness_matrix(dataset, dsel, params.k_hardness, params.standardize)?;
        let dsel_labels: Vec<Label> = dsel.iter().map(|&i| dataset.labels().get(i)).collect();
        let per_view = (0..dataset.num_views())
            .into_par_iter()
            .map(|j| {
                let view = dataset.view(j);
                let index = KnnIndex::build(view, dsel, params.standardize)?;
                let outputs = PoolOutputs::compute(grid.pool(j), view, dsel)?;
                let meta = meta_des_train(&outputs, &index, &dsel_labels, params.k_roc)?;
                Ok((index, outputs, meta))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut indexes = Vec::new();
        let mut outputs = Vec::new();
        let mut meta = Vec::new();
        for (i, o, m) in per_view {
            indexes.push(i);
            outputs.push(o);
            meta.push(m);
        }
        Ok(Self {
            params,
            view_means: hardness.view_means(),
            grid,
            hardness,
            indexes,
            outputs,
            dsel_labels,
            meta,
        })
    }

    pub fn num_views(&self) -> usize {
        self.grid.num_views()
    }

    pub fn num_classes(&self) -> usize {
        self.grid.num_classes
    }

    /// Posterior of every classifier of `view` on the query's vector for
    /// that view.
    pub fn query_posteriors(&self, view: usize, point: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.grid.pool(view).iter().map(|c| c.predict_proba(point)).collect()
    }

    pub fn region(&self, view: usize, point: &[f64]) -> Result<RegionOfCompetence> {
        let neighbors = self.indexes[view].query(point, self.params.k_roc, None)?;
        Ok(build_roc(&neighbors, &self.outputs[view], &self.dsel_labels))
    }

    /// Second stage alone: DES plus plurality vote inside `view`.
    pub fn des_on_view(&self, view: usize, point: &[f64], method: DesMethod) -> Result<(Label, SelectedEnsemble)> {
        let roc = self.region(view, point)?;
        let posteriors = self.query_posteriors(view, point)?;
        let selected = match method {
            DesMethod::KnoraE => knora_e(&roc),
            DesMethod::DesP => des_p(&roc, self.num_classes()),
            DesMethod::MetaDes => meta_des_select(&self.meta[view], &roc, &posteriors),
        };
        let label = majority_vote(&selected.classifier_indices, &posteriors, self.num_classes());
        Ok((label, selected))
    }

    /// First stage alone: test-time hardness and the chosen view.
    pub fn choose_view(&self, query: &[Vec<f64>]) -> Result<(TestTimeHardness, ViewChoice)> {
        let tth = estimate_test_hardness(query, &self.indexes, &self.hardness, self.params.k_hardness)?;
        let choice = select_view(&tth.per_view, &self.view_means);
        Ok((tth, choice))
    }

    /// View selection followed by a plain vote of the chosen view's whole
    /// pool.
    pub fn representation_only(&self, query: &[Vec<f64>]) -> Result<(Label, ViewChoice)> {
        let (_, choice) = self.choose_view(query)?;
        let posteriors = self.query_posteriors(choice.chosen_view, &query[choice.chosen_view])?;
        let all: Vec<usize> = (0..posteriors.len()).collect();
        Ok((majority_vote(&all, &posteriors, self.num_classes()), choice))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DresPrediction {
    pub label: Label,
    pub choice: ViewChoice,
    pub ensemble: SelectedEnsemble,
    pub hardness: TestTimeHardness,
}

/// Full two-stage prediction for one query given as one vector per view.
pub fn dres_predict(query: &[Vec<f64>], state: &DresState, method: DesMethod) -> Result<DresPrediction> {
    let (hardness, choice) = state.choose_view(query)?;
    let (label, ensemble) = state.des_on_view(choice.chosen_view, &query[choice.chosen_view], method)?;
    Ok(DresPrediction {
        label,
        choice,
        ensemble,
        hardness,
    })
}
