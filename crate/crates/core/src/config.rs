//! Experiment configuration, read from TOML or JSON.
//!
//! ```toml
//! seed = 7
//! folds = 5
//! methods = ["knora_e", "des_p"]
//! output_dir = "out"
//!
//! [dataset]
//! views = ["bert.dmat", "tfidf.csv"]
//! labels = "labels.csv"
//!
//! [[classifiers]]
//! kind = "knn"
//! params = { k = 7 }
//! ```
//!
//! Instead of `[dataset]` a `[synthetic]` table may name a built-in
//! generator. Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierSpec;
use crate::data::{load_dataset, MultiViewDataset};
use crate::des::{DesMethod, DresParams};
use crate::error::{Error, Result};
use crate::synthetic::{blobs, regions, BlobParams, RegionParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFiles {
    pub views: Vec<PathBuf>,
    pub labels: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Regions,
    Blobs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    /// Generator seed; the experiment seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub regions: RegionParams,
    #[serde(default)]
    pub blobs: BlobParams,
}

impl SyntheticSpec {
    pub fn generate(&self, fallback_seed: u64) -> Result<MultiViewDataset> {
        let seed = self.seed.unwrap_or(fallback_seed);
        match self.kind {
            SyntheticKind::Regions => regions(&self.regions, seed),
            SyntheticKind::Blobs => blobs(&self.blobs, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub folds: usize,
    pub dsel_fraction: f64,
    /// Region-of-competence size.
    pub k: usize,
    /// Neighbors for kDN and test-time hardness.
    pub k_hardness: usize,
    pub standardize: bool,
    pub methods: Vec<DesMethod>,
    pub classifiers: Vec<ClassifierSpec>,
    /// Method used for the ablation rows and oracle fallbacks.
    pub ablation_method: DesMethod,
    pub k_values: Vec<usize>,
    pub baselines: bool,
    pub oracles: bool,
    #[serde(skip_serializing_if = "path_is_empty")]
    pub output_dir: PathBuf,
    pub dataset: Option<DatasetFiles>,
    pub synthetic: Option<SyntheticSpec>,
}

fn path_is_empty(p: &Path) -> bool {
    p.as_os_str().is_empty()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            folds: 5,
            dsel_fraction: 0.25,
            k: 5,
            k_hardness: 5,
            standardize: true,
            methods: DesMethod::ALL.to_vec(),
            classifiers: ClassifierSpec::default_pool(),
            ablation_method: DesMethod::KnoraE,
            k_values: vec![3, 5, 7, 9, 11, 13],
            baselines: true,
            oracles: true,
            output_dir: PathBuf::from("out"),
            dataset: None,
            synthetic: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Reads `.json` as JSON and anything else as TOML, then resolves
    /// relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(d) = &mut self.dataset {
            d.views.iter_mut().for_each(fix);
            fix(&mut d.labels);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::config("folds must be >= 2"));
        }
        if !(self.dsel_fraction > 0.0 && self.dsel_fraction < 1.0) {
            return Err(Error::config("dsel_fraction must lie in (0, 1)"));
        }
        if self.k == 0 || self.k_hardness == 0 || self.k_values.contains(&0) {
            return Err(Error::config("neighbor counts must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods is empty"));
        }
        if self.classifiers.is_empty() {
            return Err(Error::config("classifiers is empty"));
        }
        for spec in &self.classifiers {
            spec.validate()?;
        }
        match (&self.dataset, &self.synthetic) {
            (Some(_), Some(_)) => Err(Error::config("give either [dataset] or [synthetic], not both")),
            (Some(d), None) if d.views.is_empty() => Err(Error::config("dataset.views is empty")),
            _ => Ok(()),
        }
    }

    pub fn dres_params(&self) -> DresParams {
        DresParams {
            k_hardness: self.k_hardness,
            k_roc: self.k,
            standardize: self.standardize,
        }
    }

    /// Classifier specs with their seeds mixed with the experiment seed, so
    /// that changing `seed` also changes every model initialization.
    pub fn seeded_classifiers(&self) -> Vec<ClassifierSpec> {
        self.classifiers
            .iter()
            .map(|s| {
                s.clone()
                    .with_seed(s.seed.wrapping_add(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
            })
            .collect()
    }

    pub fn load_dataset(&self) -> Result<MultiViewDataset> {
        match (&self.dataset, &self.synthetic) {
            (Some(files), _) => load_dataset(&files.views, &files.labels),
            (None, Some(s)) => s.generate(self.seed),
            (None, None) => Err(Error::config("config has neither [dataset] nor [synthetic]")),
        }
    }
}
