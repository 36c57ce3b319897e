//! Base classifier pool: five probabilistic learners trained per view, and
//! the view x spec grid built from them.

mod archive;
mod boost;
mod knn;
pub mod logistic;
mod mlp;
mod naive_bayes;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Labels, MultiViewDataset, ViewMatrix};
use crate::error::{Error, Result};

pub use archive::{read_archive, write_archive, Archive, ARCHIVE_MAGIC, ARCHIVE_VERSION};
pub use boost::{BoostedStumps, Stump};
pub use knn::KnnClassifier;
pub use logistic::{LogisticOptions, LogisticRegression};
pub use mlp::{Mlp, MlpOptions};
pub use naive_bayes::GaussianNb;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = if *x == f64::NEG_INFINITY { 0.0 } else { (*x - max).exp() };
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Parameter (de)serialization into a JSON shape descriptor plus a flat
/// block of `f64`s.
pub(crate) trait Codec: Sized {
    fn encode(&self) -> (serde_json::Value, Vec<f64>);
    fn decode(meta: &serde_json::Value, params: &[f64]) -> Result<Self>;
}

pub(crate) fn meta_usize(meta: &serde_json::Value, key: &str) -> Result<usize> {
    meta[key]
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::data(format!("model metadata lacks {key:?}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn,
    LogisticRegression,
    GaussianNb,
    PerceptronMlp,
    DecisionStumpBoost,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Knn,
        ClassifierKind::LogisticRegression,
        ClassifierKind::GaussianNb,
        ClassifierKind::PerceptronMlp,
        ClassifierKind::DecisionStumpBoost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::GaussianNb => "gaussian_nb",
            ClassifierKind::PerceptronMlp => "perceptron_mlp",
            ClassifierKind::DecisionStumpBoost => "decision_stump_boost",
        }
    }

    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            ClassifierKind::Knn => &["k", "standardize"],
            ClassifierKind::LogisticRegression => &["l2", "max_iter", "tol"],
            ClassifierKind::GaussianNb => &["var_smoothing"],
            ClassifierKind::PerceptronMlp => &["hidden", "epochs", "learning_rate"],
            ClassifierKind::DecisionStumpBoost => &["rounds"],
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown classifier kind {s:?}")))
    }
}

/// A learner kind with its hyperparameters and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    /// Display name; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        Self {
            kind,
            name: None,
            params: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// One spec per kind with default hyperparameters.
    pub fn default_pool() -> Vec<ClassifierSpec> {
        ClassifierKind::ALL.into_iter().map(ClassifierSpec::new).collect()
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.to_string())
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn count_param(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.param(key, default as f64);
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::config(format!("{}: {key} must be a positive integer, got {v}", self.kind)));
        }
        Ok(v as usize)
    }

    fn positive_param(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.param(key, default);
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::config(format!("{}: {key} must be positive, got {v}", self.kind)));
        }
        Ok(v)
    }

    /// Rejects unknown keys and out-of-range values.
    pub fn validate(&self) -> Result<()> {
        let allowed = self.kind.allowed_params();
        if let Some(bad) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::config(format!(
                "{}: unknown hyperparameter {bad:?} (allowed: {})",
                self.kind,
                allowed.join(", ")
            )));
        }
        match self.kind {
            ClassifierKind::Knn => {
                self.count_param("k", 5)?;
            }
            ClassifierKind::LogisticRegression => {
                if self.param("l2", 1e-3) < 0.0 {
                    return Err(Error::config("logistic_regression: l2 must be >= 0"));
                }
                self.count_param("max_iter", 500)?;
                self.positive_param("tol", 1e-6)?;
            }
            ClassifierKind::GaussianNb => {
                self.positive_param("var_smoothing", 1e-9)?;
            }
            ClassifierKind::PerceptronMlp => {
                self.count_param("hidden", 32)?;
                self.count_param("epochs", 200)?;
                self.positive_param("learning_rate", 0.01)?;
            }
            ClassifierKind::DecisionStumpBoost => {
                self.count_param("rounds", 50)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Knn(KnnClassifier),
    Logistic(LogisticRegression),
    NaiveBayes(GaussianNb),
    Mlp(Mlp),
    Boost(BoostedStumps),
}

impl Model {
    fn dim(&self) -> usize {
        match self {
            Model::Knn(m) => m.dim(),
            Model::Logistic(m) => m.dim(),
            Model::NaiveBayes(m) => m.dim(),
            Model::Mlp(m) => m.dim(),
            Model::Boost(m) => m.dim(),
        }
    }

    fn encode(&self) -> (serde_json::Value, Vec<f64>) {
        match self {
            Model::Knn(m) => m.encode(),
            Model::Logistic(m) => m.encode(),
            Model::NaiveBayes(m) => m.encode(),
            Model::Mlp(m) => m.encode(),
            Model::Boost(m) => m.encode(),
        }
    }

    fn decode(kind: ClassifierKind, meta: &serde_json::Value, params: &[f64]) -> Result<Self> {
        Ok(match kind {
            ClassifierKind::Knn => Model::Knn(KnnClassifier::decode(meta, params)?),
            ClassifierKind::LogisticRegression => Model::Logistic(LogisticRegression::decode(meta, params)?),
            ClassifierKind::GaussianNb => Model::NaiveBayes(GaussianNb::decode(meta, params)?),
            ClassifierKind::PerceptronMlp => Model::Mlp(Mlp::decode(meta, params)?),
            ClassifierKind::DecisionStumpBoost => Model::Boost(BoostedStumps::decode(meta, params)?),
        })
    }
}

/// A fitted base classifier bound to the view it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub spec: ClassifierSpec,
    pub view_name: String,
    pub num_classes: usize,
    model: Model,
}

impl TrainedClassifier {
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Class posterior at `x`: non-negative, sums to one.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut p = match &self.model {
            Model::Knn(m) => m.predict_proba(x)?,
            Model::Logistic(m) => m.predict_proba(x),
            Model::NaiveBayes(m) => m.predict_proba(x),
            Model::Mlp(m) => m.predict_proba(x),
            Model::Boost(m) => m.predict_proba(x),
        };
        let sum: f64 = p.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::Invariant(format!(
                "{} on {:?} produced a degenerate posterior",
                self.spec.kind, self.view_name
            )));
        }
        for v in &mut p {
            *v /= sum;
        }
        Ok(p)
    }

    /// Hard label by argmax, ties to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        self.predict_proba(x).map(|p| argmax(&p))
    }
}

/// Fits `spec` on raw feature rows.
pub fn fit_rows(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[usize], num_classes: usize, view_name: &str) -> Result<TrainedClassifier> {
    spec.validate()?;
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::data("training rows and labels differ in length or are empty"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite training feature"));
    }
    let mut present = vec![false; num_classes];
    for &yi in y {
        if yi >= num_classes {
            return Err(Error::data(format!("label {yi} out of range 0..{num_classes}")));
        }
        present[yi] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::data(format!(
            "{} on {view_name:?}: training data contains a single class",
            spec.kind
        )));
    }
    let p = |k: &str, d: f64| spec.param(k, d);
    let model = match spec.kind {
        ClassifierKind::Knn => Model::Knn(KnnClassifier::fit(
            x,
            y,
            num_classes,
            p("k", 5.0) as usize,
            p("standardize", 1.0) != 0.0,
        )?),
        ClassifierKind::LogisticRegression => Model::Logistic(LogisticRegression::fit(
            x,
            y,
            num_classes,
            LogisticOptions {
                l2: p("l2", 1e-3),
                max_iter: p("max_iter", 500.0) as usize,
                tol: p("tol", 1e-6),
            },
        )?),
        ClassifierKind::GaussianNb => Model::NaiveBayes(GaussianNb::fit(x, y, num_classes, p("var_smoothing", 1e-9))?),
        ClassifierKind::PerceptronMlp => Model::Mlp(Mlp::fit(
            x,
            y,
            num_classes,
            MlpOptions {
                hidden: p("hidden", 32.0) as usize,
                epochs: p("epochs", 200.0) as usize,
                learning_rate: p("learning_rate", 0.01),
            },
            spec.seed,
        )?),
        ClassifierKind::DecisionStumpBoost => Model::Boost(BoostedStumps::fit(x, y, num_classes, p("rounds", 50.0) as usize)?),
    };
    Ok(TrainedClassifier {
        spec: spec.clone(),
        view_name: view_name.to_string(),
        num_classes,
        model,
    })
}

pub(crate) fn gather_rows(view: &ViewMatrix, indices: &[usize]) -> Vec<Vec<f64>> {
    indices.iter().map(|&i| view.row_f64(i)).collect()
}

/// Fits `spec` on the rows `train` of `view`.
pub fn fit(spec: &ClassifierSpec, view: &ViewMatrix, train: &[usize], labels: &Labels) -> Result<TrainedClassifier> {
    let x = gather_rows(view, train);
    let y: Vec<usize> = train.iter().map(|&i| labels.get(i)).collect();
    fit_rows(spec, &x, &y, labels.num_classes(), view.name())
}

/// `n` views x `m` specs, every model fitted on the same TRAIN rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierGrid {
    pub view_names: Vec<String>,
    pub specs: Vec<ClassifierSpec>,
    pub num_classes: usize,
    pools: Vec<Vec<TrainedClassifier>>,
}

impl ClassifierGrid {
    pub fn from_pools(
        view_names: Vec<String>,
        specs: Vec<ClassifierSpec>,
        num_classes: usize,
        pools: Vec<Vec<TrainedClassifier>>,
    ) -> Result<Self> {
        if pools.len() != view_names.len() || pools.iter().any(|p| p.len() != specs.len()) {
            return Err(Error::Invariant("grid pools do not match views x specs".into()));
        }
        Ok(Self {
            view_names,
            specs,
            num_classes,
            pools,
        })
    }

    pub fn num_views(&self) -> usize {
        self.view_names.len()
    }

    pub fn pool_size(&self) -> usize {
        self.specs.len()
    }

    pub fn pool(&self, view: usize) -> &[TrainedClassifier] {
        &self.pools[view]
    }

    pub fn get(&self, view: usize, spec: usize) -> &TrainedClassifier {
        &self.pools[view][spec]
    }

    pub fn len(&self) -> usize {
        self.num_views() * self.pool_size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Serializes to the versioned archive layout (JSON manifest followed
    /// by one little-endian `f64` block per model).
    pub fn to_archive(&self) -> Archive {
        let mut models = Vec::new();
        let mut blocks = Vec::new();
        for (j, pool) in self.pools.iter().enumerate() {
            for (s, clf) in pool.iter().enumerate() {
                let (meta, params) = clf.model.encode();
                models.push(serde_json::json!({"view": j, "spec": s, "kind": clf.spec.kind, "meta": meta}));
                blocks.push(params);
            }
        }
        let manifest = serde_json::json!({
            "kind": "classifier_grid",
            "num_classes": self.num_classes,
            "view_names": self.view_names,
            "specs": self.specs,
            "models": models,
        });
        Archive { manifest, blocks }
    }

    pub fn from_archive(archive: &Archive) -> Result<Self> {
        let m = &archive.manifest;
        let parse = |e: serde_json::Error| Error::data(format!("grid manifest: {e}"));
        let view_names: Vec<String> = serde_json::from_value(m["view_names"].clone()).map_err(parse)?;
        let specs: Vec<ClassifierSpec> = serde_json::from_value(m["specs"].clone()).map_err(parse)?;
        let num_classes = meta_usize(m, "num_classes")?;
        let models = m["models"].as_array().ok_or_else(|| Error::data("grid manifest lacks models"))?;
        if models.len() != archive.blocks.len() || models.len() != view_names.len() * specs.len() {
            return Err(Error::data("grid manifest and blocks disagree"));
        }
        let mut pools: Vec<Vec<TrainedClassifier>> = vec![Vec::new(); view_names.len()];
        for (entry, block) in models.iter().zip(&archive.blocks) {
            let j = meta_usize(entry, "view")?;
            let s = meta_usize(entry, "spec")?;
            let spec = specs.get(s).ok_or_else(|| Error::data("model references unknown spec"))?;
            let model = Model::decode(spec.kind, &entry["meta"], block)?;
            let pool = pools.get_mut(j).ok_or_else(|| Error::data("model references unknown view"))?;
            if pool.len() != s {
                return Err(Error::data("grid models out of order"));
            }
            pool.push(TrainedClassifier {
                spec: spec.clone(),
                view_name: view_names[j].clone(),
                num_classes,
                model,
            });
        }
        Self::from_pools(view_names, specs, num_classes, pools)
    }
}

/// Fits every (view, spec) pair on `train`. Pairs are fitted in parallel
/// and collected in view-major order.
pub fn fit_grid(dataset: &MultiViewDataset, train: &[usize], specs: &[ClassifierSpec]) -> Result<ClassifierGrid> {
    if specs.is_empty() {
        return Err(Error::config("classifier pool is empty"));
    }
    for s in specs {
        s.validate()?;
    }
    let n = dataset.num_views();
    let m = specs.len();
    let y: Vec<usize> = train.iter().map(|&i| dataset.labels().get(i)).collect();
    let rows: Vec<Vec<Vec<f64>>> = dataset.views().iter().map(|v| gather_rows(v, train)).collect();
    let fitted = (0..n * m)
        .into_par_iter()
        .map(|p| {
            let (j, s) = (p / m, p % m);
            fit_rows(&specs[s], &rows[j], &y, dataset.num_classes(), dataset.view(j).name())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut it = fitted.into_iter();
    let pools = (0..n).map(|_| it.by_ref().take(m).collect()).collect();
    ClassifierGrid::from_pools(dataset.view_names(), specs.to_vec(), dataset.num_classes(), pools)
}
