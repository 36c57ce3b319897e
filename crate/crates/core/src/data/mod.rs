//! Domain types for multi-view datasets and their on-disk formats.

pub mod csv_io;
pub mod dmat;
mod split;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use split::{holdout_split, make_splits, stratified_assignment, FoldSplit, SplitPlan};

/// Dense class index in `0..num_classes`.
pub type Label = usize;

/// One feature representation of the corpus: a dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewMatrix {
    name: String,
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl ViewMatrix {
    pub fn new(name: impl Into<String>, rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(Error::data(format!("view must be non-empty, got {rows} x {dim}")));
        }
        if rows * dim != data.len() {
            return Err(Error::data(format!(
                "view {rows} x {dim} needs {} values, got {}",
                rows * dim,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite value at row {}, col {}", pos / dim, pos % dim)));
        }
        Ok(Self {
            name: name.into(),
            rows,
            dim,
            data,
        })
    }

    /// Builds a view from `f64` rows, rounding each value to `f32`.
    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::data("ragged rows"));
        }
        let data = rows.iter().flatten().map(|&v| v as f32).collect();
        Self::new(name, rows.len(), dim, data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| v as f64).collect()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// New view holding only the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::data(format!("row {i} out of range ({} rows)", self.rows)));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(self.name.clone(), indices.len(), self.dim, data)
    }
}

/// Class labels with a dense `0..num_classes` encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    values: Vec<Label>,
    num_classes: usize,
}

impl Labels {
    /// Infers `num_classes = max + 1` and requires every class to occur.
    pub fn new(values: Vec<Label>) -> Result<Self> {
        let num_classes = values.iter().max().map_or(0, |m| m + 1);
        let present: BTreeSet<_> = values.iter().copied().collect();
        if present.len() != num_classes {
            let missing: Vec<_> = (0..num_classes).filter(|c| !present.contains(c)).collect();
            return Err(Error::data(format!(
                "non-dense labels: {num_classes} classes inferred but {missing:?} absent"
            )));
        }
        if num_classes < 2 {
            return Err(Error::data("need at least 2 classes"));
        }
        Ok(Self { values, num_classes })
    }

    /// Labels over a known class range; classes may be absent.
    pub fn with_classes(values: Vec<Label>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::data("need at least 2 classes"));
        }
        if let Some(bad) = values.iter().find(|&&v| v >= num_classes) {
            return Err(Error::data(format!("label {bad} out of range 0..{num_classes}")));
        }
        Ok(Self { values, num_classes })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Label {
        self.values[i]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.values {
            counts[y] += 1;
        }
        counts
    }
}

/// `n` aligned views of the same instances plus their labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiViewDataset {
    views: Vec<ViewMatrix>,
    labels: Labels,
    ids: Vec<String>,
}

impl MultiViewDataset {
    pub fn views(&self) -> &[ViewMatrix] {
        &self.views
    }

    pub fn view(&self, j: usize) -> &ViewMatrix {
        &self.views[j]
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    pub fn view_names(&self) -> Vec<String> {
        self.views.iter().map(|v| v.name().to_string()).collect()
    }

    /// Instance `i` as one feature vector per view.
    pub fn instance(&self, i: usize) -> Vec<Vec<f64>> {
        self.views.iter().map(|v| v.row_f64(i)).collect()
    }
}

/// Validates and bundles views with labels. Ids default to row numbers.
pub fn assemble_dataset(views: Vec<ViewMatrix>, labels: Labels, ids: Option<Vec<String>>) -> Result<MultiViewDataset> {
    if views.is_empty() {
        return Err(Error::data("dataset needs at least one view"));
    }
    let n = labels.len();
    for v in &views {
        if v.rows() != n {
            return Err(Error::data(format!(
                "row count mismatch: view {:?} has {} rows, labels have {n}",
                v.name(),
                v.rows()
            )));
        }
    }
    let mut seen = BTreeSet::new();
    for v in &views {
        if !seen.insert(v.name()) {
            return Err(Error::data(format!("duplicate view name {:?}", v.name())));
        }
    }
    let ids = match ids {
        Some(ids) if ids.len() != n => return Err(Error::data(format!("row count mismatch: {} ids for {n} labels", ids.len()))),
        Some(ids) => ids,
        None => (0..n).map(|i| i.to_string()).collect(),
    };
    Ok(MultiViewDataset { views, labels, ids })
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "view".into())
}

/// Loads a view from `.dmat` or `.csv`, dispatching on the extension.
pub fn load_view(path: &Path) -> Result<ViewMatrix> {
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "dmat" => dmat::read(path),
        "csv" => csv_io::read_view(path, &file_stem(path)),
        _ => {
            // Sniff the magic for extensionless files.
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            if bytes.starts_with(dmat::MAGIC) {
                dmat::from_bytes(&bytes, path, &file_stem(path)).map(|(v, _)| v)
            } else {
                csv_io::read_view(path, &file_stem(path))
            }
        }
    }
}

/// Writes a view as DMAT or CSV depending on the extension.
pub fn save_view(view: &ViewMatrix, path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => csv_io::write_view(view, path),
        _ => dmat::write(view, path),
    }
}

/// Loads views and a labels file into a validated dataset.
pub fn load_dataset(view_paths: &[impl AsRef<Path>], labels_path: &Path) -> Result<MultiViewDataset> {
    let views = view_paths.iter().map(|p| load_view(p.as_ref())).collect::<Result<Vec<_>>>()?;
    let (ids, labels) = csv_io::read_labels(labels_path)?;
    assemble_dataset(views, labels, Some(ids))
}
