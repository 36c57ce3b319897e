//! Macro-averaged classification metrics and per-fold aggregation.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
pub fn confusion_matrix(predictions: &[Label], truths: &[Label], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            got: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::data("metrics need at least one prediction"));
    }
    let mut m = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &t) in predictions.iter().zip(truths) {
        if p >= num_classes || t >= num_classes {
            return Err(Error::data(format!("label {} out of range for {num_classes} classes", p.max(t))));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
}

/// Macro averages over all classes. A class with no true and no predicted
/// instances contributes zero to every average, as does any zero-denominator
/// ratio.
pub fn score(predictions: &[Label], truths: &[Label], num_classes: usize) -> Result<Scores> {
    let m = confusion_matrix(predictions, truths, num_classes)?;
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut f1 = 0.0;
    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut hits = 0;
    for c in 0..num_classes {
        let tp = m[c][c];
        let predicted: usize = (0..num_classes).map(|t| m[t][c]).sum();
        let actual: usize = m[c].iter().sum();
        hits += tp;
        precision += ratio(tp, predicted);
        recall += ratio(tp, actual);
        f1 += ratio(2 * tp, predicted + actual);
    }
    let l = num_classes as f64;
    Ok(Scores {
        accuracy: hits as f64 / predictions.len() as f64,
        macro_f1: f1 / l,
        macro_precision: precision / l,
        macro_recall: recall / l,
    })
}

pub fn macro_f1(predictions: &[Label], truths: &[Label], num_classes: usize) -> Result<f64> {
    Ok(score(predictions, truths, num_classes)?.macro_f1)
}

/// Per-fold values of one metric with their mean and population std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub per_fold: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn new(per_fold: Vec<f64>) -> Self {
        let n = per_fold.len().max(1) as f64;
        let mean = per_fold.iter().sum::<f64>() / n;
        let var = per_fold.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            per_fold,
            mean,
            std: var.sqrt(),
        }
    }

    /// `0.371 (0.003)`
    pub fn display(&self) -> String {
        format!("{:.3} ({:.3})", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: Summary,
    pub macro_f1: Summary,
    pub macro_precision: Summary,
    pub macro_recall: Summary,
}

impl MetricSet {
    pub fn from_folds(folds: &[Scores]) -> Self {
        let pick = |f: fn(&Scores) -> f64| Summary::new(folds.iter().map(f).collect());
        Self {
            accuracy: pick(|s| s.accuracy),
            macro_f1: pick(|s| s.macro_f1),
            macro_precision: pick(|s| s.macro_precision),
            macro_recall: pick(|s| s.macro_recall),
        }
    }
}
