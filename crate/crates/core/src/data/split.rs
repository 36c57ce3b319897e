use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Labels;
use crate::error::{Error, Result};

/// Index sets for one cross-validation fold. All indices are dataset rows,
/// sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub dsel: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub dsel_fraction: f64,
    /// Test fold of every instance.
    pub assignment: Vec<usize>,
    pub folds: Vec<FoldSplit>,
}

/// Splits the non-test part of a class-sorted pool into (train, dsel),
/// taking `round(fraction * count)` of every class for DSEL.
pub(crate) fn carve_dsel(pool: &[usize], labels: &Labels, fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut dsel = Vec::new();
    for class in 0..labels.num_classes() {
        let mut members: Vec<usize> = pool.iter().copied().filter(|&i| labels.get(i) == class).collect();
        members.shuffle(rng);
        let take = (fraction * members.len() as f64).round() as usize;
        dsel.extend_from_slice(&members[..take]);
        train.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    dsel.sort_unstable();
    (train, dsel)
}

/// Fold number for each member of `pool` (parallel to it). Classes are
/// dealt round-robin after shuffling; each class continues where the
/// previous one stopped, so fold sizes stay balanced overall as well as
/// per class.
pub fn stratified_assignment(pool: &[usize], labels: &Labels, folds: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut position = vec![usize::MAX; labels.len()];
    for (p, &i) in pool.iter().enumerate() {
        position[i] = p;
    }
    let mut assignment = vec![0usize; pool.len()];
    let mut cursor = 0usize;
    for class in 0..labels.num_classes() {
        let mut members: Vec<usize> = pool.iter().copied().filter(|&i| labels.get(i) == class).collect();
        members.shuffle(rng);
        for i in members {
            assignment[position[i]] = cursor % folds;
            cursor += 1;
        }
    }
    assignment
}

/// Label-stratified `folds`-way cross-validation with a stratified DSEL
/// carve-out from each fold's non-test part.
pub fn make_splits(labels: &Labels, folds: usize, dsel_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if folds < 2 {
        return Err(Error::config(format!("folds must be >= 2, got {folds}")));
    }
    if !(dsel_fraction > 0.0 && dsel_fraction < 1.0) {
        return Err(Error::config(format!("dsel_fraction must lie in (0, 1), got {dsel_fraction}")));
    }
    let counts = labels.class_counts();
    let short: Vec<String> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c < folds)
        .map(|(class, c)| format!("class {class} ({c} instances)"))
        .collect();
    if !short.is_empty() {
        return Err(Error::data(format!("fewer instances than folds ({folds}): {}", short.join(", "))));
    }

    let all: Vec<usize> = (0..labels.len()).collect();
    let assignment = stratified_assignment(&all, labels, folds, &mut ChaCha8Rng::seed_from_u64(seed));

    let folds = (0..folds)
        .map(|f| {
            let test: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == f).collect();
            let rest: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != f).collect();
            let mut fold_rng = ChaCha8Rng::seed_from_u64(seed);
            fold_rng.set_stream(f as u64 + 1);
            let (train, dsel) = carve_dsel(&rest, labels, dsel_fraction, &mut fold_rng);
            FoldSplit { train, dsel, test }
        })
        .collect();

    Ok(SplitPlan {
        seed,
        dsel_fraction,
        assignment,
        folds,
    })
}

/// A single stratified (train, dsel) split of every instance, used when a
/// model is trained on a whole dataset.
pub fn holdout_split(labels: &Labels, dsel_fraction: f64, seed: u64) -> Result<FoldSplit> {
    if !(dsel_fraction > 0.0 && dsel_fraction < 1.0) {
        return Err(Error::config(format!("dsel_fraction must lie in (0, 1), got {dsel_fraction}")));
    }
    let all: Vec<usize> = (0..labels.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train, dsel) = carve_dsel(&all, labels, dsel_fraction, &mut rng);
    Ok(FoldSplit {
        train,
        dsel,
        test: Vec::new(),
    })
}
