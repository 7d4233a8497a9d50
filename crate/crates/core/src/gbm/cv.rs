//! Stratified splitting and k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::train::{train, GbmConfig};
use crate::error::{Error, Result};
use crate::eval::auroc;
use crate::predictor::Predictor;
use crate::scalar::Scalar;
use crate::tabular::Dataset;

fn shuffled_by_class(labels: &[usize], seed: u64) -> [Vec<usize>; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l.min(1)].push(i);
    }
    for c in &mut by_class {
        c.shuffle(&mut rng);
    }
    by_class
}

/// Fold index per row. Each class is shuffled and dealt round-robin, so
/// class proportions match across folds.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    if labels.len() < folds {
        return Err(Error::InvalidConfig(format!(
            "{} rows cannot fill {folds} folds",
            labels.len()
        )));
    }
    let by_class = shuffled_by_class(labels, seed);
    for (c, rows) in by_class.iter().enumerate() {
        if rows.len() < folds {
            return Err(Error::DegenerateLabels(format!(
                "class {c} has {} rows; every one of {folds} folds needs both classes",
                rows.len()
            )));
        }
    }
    let mut assignment = vec![0usize; labels.len()];
    let mut next = 0usize;
    for rows in &by_class {
        for &r in rows {
            assignment[r] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

/// Stratified train/test split; returns sorted `(train, test)` row indices.
pub fn train_test_split(labels: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for rows in shuffled_by_class(labels, seed) {
        let n_test = (rows.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CvResult<T> {
    pub fold_auroc: Vec<T>,
    pub mean_auroc: T,
}

/// Held-out AUROC of each fold's model trained on the remaining folds.
pub fn cross_validate<T: Scalar>(
    dataset: &Dataset<T>,
    config: &GbmConfig,
    folds: usize,
) -> Result<CvResult<T>> {
    let labels = dataset.require_labels()?;
    let assignment = stratified_folds(labels, folds, config.seed)?;
    let mut fold_auroc = Vec::with_capacity(folds);
    for k in 0..folds {
        let (held, rest): (Vec<usize>, Vec<usize>) =
            (0..labels.len()).partition(|&i| assignment[i] == k);
        let model = train(&dataset.subset(&rest), config)?;
        let test = dataset.subset(&held);
        let scores = model.class_probabilities(test.rows(), 1)?;
        fold_auroc.push(auroc(&scores, test.require_labels()?)?);
    }
    let mean_auroc = fold_auroc.iter().copied().sum::<T>() / T::of(folds as f64);
    Ok(CvResult {
        fold_auroc,
        mean_auroc,
    })
}

/// Picks the candidate configuration with the highest mean CV AUROC (first
/// wins ties).
pub fn select_config<T: Scalar>(
    dataset: &Dataset<T>,
    candidates: &[GbmConfig],
    folds: usize,
) -> Result<(usize, Vec<CvResult<T>>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidate configurations".into()));
    }
    let results = candidates
        .iter()
        .map(|c| cross_validate(dataset, c, folds))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.mean_auroc > results[best].mean_auroc {
            best = i;
        }
    }
    Ok((best, results))
}
