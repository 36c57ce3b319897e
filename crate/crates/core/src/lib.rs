//! Dynamic representation and ensemble selection over multi-view data.
//!
//! For each query the engine estimates how hard the query is under every
//! view from the kDN hardness of its nearest labeled neighbors, picks the
//! easiest view, and then runs dynamic classifier selection (KNORA-E, DES-P
//! or META-DES) inside that view's classifier pool before a plurality vote.

// Index loops read more clearly than iterator chains in the numeric kernels.
#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod classifiers;
pub mod config;
pub mod data;
pub mod des;
pub mod error;
pub mod hardness;
pub mod harness;
pub mod knn;
pub mod metrics;
pub mod model;
pub mod synthetic;

pub use classifiers::{ClassifierGrid, ClassifierKind, ClassifierSpec, TrainedClassifier};
pub use config::ExperimentConfig;
pub use data::{Label, Labels, MultiViewDataset, ViewMatrix};
pub use des::{dres_predict, DesMethod, DresParams, DresState};
pub use error::{Error, Result};
pub use hardness::HardnessMatrix;
pub use harness::ENGINE_VERSION;
pub use model::ModelBundle;
