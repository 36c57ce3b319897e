//! A trained DRES model on disk: the classifier grid plus the DSEL rows and
//! labels. Hardness scores, neighbor indexes and meta-classifiers are
//! rebuilt from DSEL on load, which is deterministic.

use std::path::Path;

use crate::classifiers::{fit_grid, read_archive, write_archive, Archive, ClassifierGrid, ClassifierSpec};
use crate::data::{assemble_dataset, holdout_split, Label, Labels, MultiViewDataset, ViewMatrix};
use crate::des::{DresParams, DresState};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub grid: ClassifierGrid,
    pub params: DresParams,
    pub dsel: MultiViewDataset,
}

impl ModelBundle {
    /// Fits the grid on a stratified TRAIN share of `dataset` and keeps
    /// the rest as DSEL.
    pub fn train(dataset: &MultiViewDataset, specs: &[ClassifierSpec], params: DresParams, dsel_fraction: f64, seed: u64) -> Result<Self> {
        let split = holdout_split(dataset.labels(), dsel_fraction, seed)?;
        let grid = fit_grid(dataset, &split.train, specs)?;
        let views = dataset
            .views()
            .iter()
            .map(|v| v.select_rows(&split.dsel))
            .collect::<Result<Vec<_>>>()?;
        let labels: Vec<Label> = split.dsel.iter().map(|&i| dataset.labels().get(i)).collect();
        let ids: Vec<String> = split.dsel.iter().map(|&i| dataset.ids()[i].clone()).collect();
        let dsel = assemble_dataset(views, Labels::with_classes(labels, dataset.num_classes())?, Some(ids))?;
        Ok(Self { grid, params, dsel })
    }

    pub fn state(&self) -> Result<DresState> {
        let all: Vec<usize> = (0..self.dsel.len()).collect();
        DresState::from_grid(&self.dsel, self.grid.clone(), &all, self.params)
    }

    pub fn to_archive(&self) -> Archive {
        let grid = self.grid.to_archive();
        let mut blocks = grid.blocks;
        for v in self.dsel.views() {
            blocks.push(v.data().iter().map(|&x| f64::from(x)).collect());
        }
        let manifest = serde_json::json!({
            "kind": "dres_model",
            "params": self.params,
            "grid": grid.manifest,
            "grid_blocks": self.grid.len(),
            "dsel_ids": self.dsel.ids(),
            "dsel_labels": self.dsel.labels().as_slice(),
            "view_dims": self.dsel.views().iter().map(|v| v.dim()).collect::<Vec<_>>(),
        });
        Archive { manifest, blocks }
    }

    pub fn from_archive(archive: &Archive) -> Result<Self> {
        let m = &archive.manifest;
        if m["kind"] != "dres_model" {
            return Err(Error::data("archive is not a DRES model"));
        }
        let parse = |e: serde_json::Error| Error::data(format!("model manifest: {e}"));
        let params: DresParams = serde_json::from_value(m["params"].clone()).map_err(parse)?;
        let grid_blocks: usize = serde_json::from_value(m["grid_blocks"].clone()).map_err(parse)?;
        let ids: Vec<String> = serde_json::from_value(m["dsel_ids"].clone()).map_err(parse)?;
        let labels: Vec<Label> = serde_json::from_value(m["dsel_labels"].clone()).map_err(parse)?;
        let dims: Vec<usize> = serde_json::from_value(m["view_dims"].clone()).map_err(parse)?;
        if archive.blocks.len() != grid_blocks + dims.len() {
            return Err(Error::data("model archive block count disagrees with its manifest"));
        }
        let grid = ClassifierGrid::from_archive(&Archive {
            manifest: m["grid"].clone(),
            blocks: archive.blocks[..grid_blocks].to_vec(),
        })?;
        if grid.num_views() != dims.len() {
            return Err(Error::data("model grid and DSEL disagree on view count"));
        }
        let views = dims
            .iter()
            .zip(&archive.blocks[grid_blocks..])
            .zip(&grid.view_names)
            .map(|((&dim, block), name)| ViewMatrix::new(name.clone(), ids.len(), dim, block.iter().map(|&x| x as f32).collect()))
            .collect::<Result<Vec<_>>>()?;
        let dsel = assemble_dataset(views, Labels::with_classes(labels, grid.num_classes)?, Some(ids))?;
        Ok(Self { grid, params, dsel })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_archive(&self.to_archive(), path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_archive(&read_archive(path)?)
    }
}
