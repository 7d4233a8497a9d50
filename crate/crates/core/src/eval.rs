//! Discrimination metrics and operating-point selection.
//!
//! AUROC is the Mann–Whitney statistic; the confidence interval is a
//! stratified percentile bootstrap; the operating threshold maximizes
//! Youden's J over score midpoints and `{0, 1}`. A score is called positive
//! when `score >= threshold`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn class_counts(labels: &[usize]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    (pos, labels.len() - pos)
}

fn check_inputs<T>(scores: &[T], labels: &[usize]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidData(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidData("labels must be 0 or 1".into()));
    }
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels("both classes must be present".into()));
    }
    Ok((pos, neg))
}

/// Area under the ROC curve: `P(s+ > s-) + P(s+ = s-) / 2`.
pub fn auroc<T: Scalar>(scores: &[T], labels: &[usize]) -> Result<T> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp_nan_last(&scores[b]));
    // midranks over tie groups
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j + 1) as f64 / 2.0;
        let n_pos_in_group = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum_pos += mid_rank * n_pos_in_group as f64;
        i = j;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok(T::of((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint<T> {
    pub fpr: T,
    pub tpr: T,
    pub threshold: T,
}

/// ROC curve from `(0, 0)` to `(1, 1)`.
///
/// The first point uses `max(score) + 1` as its threshold; every following
/// point is a distinct score, in descending order.
pub fn roc_curve<T: Scalar>(scores: &[T], labels: &[usize]) -> Result<Vec<RocPoint<T>>> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp_nan_last(&scores[a]));
    let mut points = vec![RocPoint {
        fpr: T::zero(),
        tpr: T::zero(),
        threshold: scores[order[0]] + T::one(),
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: T::of(fp as f64 / neg as f64),
            tpr: T::of(tp as f64 / pos as f64),
            threshold: t,
        });
    }
    Ok(points)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint<T> {
    pub threshold: T,
    pub sensitivity: T,
    pub specificity: T,
}

impl<T: Scalar> OperatingPoint<T> {
    /// Youden's J = sensitivity + specificity - 1.
    pub fn youden_j(&self) -> T {
        self.sensitivity + self.specificity - T::one()
    }
}

/// Sensitivity and specificity when `score >= threshold` is called positive.
pub fn operating_point<T: Scalar>(
    scores: &[T],
    labels: &[usize],
    threshold: T,
) -> Result<OperatingPoint<T>> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut tp = 0usize;
    let mut tn = 0usize;
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l == 1) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            _ => {}
        }
    }
    Ok(OperatingPoint {
        threshold,
        sensitivity: T::of(tp as f64 / pos as f64),
        specificity: T::of(tn as f64 / neg as f64),
    })
}

/// Candidate thresholds: midpoints of adjacent distinct scores plus 0 and 1,
/// ascending and deduplicated.
pub fn youden_candidates<T: Scalar>(scores: &[T]) -> Vec<T> {
    let mut s: Vec<T> = scores.to_vec();
    s.sort_by(|a, b| a.total_cmp_nan_last(b));
    s.dedup();
    let half = T::of(0.5);
    let mut c: Vec<T> = s.windows(2).map(|w| (w[0] + w[1]) * half).collect();
    c.push(T::zero());
    c.push(T::one());
    c.sort_by(|a, b| a.total_cmp_nan_last(b));
    c.dedup();
    c
}

/// Threshold maximizing Youden's J; ties go to the smallest threshold.
pub fn youden_threshold<T: Scalar>(scores: &[T], labels: &[usize]) -> Result<OperatingPoint<T>> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut pairs: Vec<(T, usize)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp_nan_last(&b.0));

    // sweep ascending thresholds; `below` items are predicted negative
    let mut below = 0usize;
    let (mut fn_, mut tn) = (0usize, 0usize);
    let mut best: Option<OperatingPoint<T>> = None;
    for t in youden_candidates(scores) {
        while below < pairs.len() && pairs[below].0 < t {
            if pairs[below].1 == 1 {
                fn_ += 1;
            } else {
                tn += 1;
            }
            below += 1;
        }
        let op = OperatingPoint {
            threshold: t,
            sensitivity: T::of((pos - fn_) as f64 / pos as f64),
            specificity: T::of(tn as f64 / neg as f64),
        };
        if best.is_none_or(|b| op.youden_j() > b.youden_j()) {
            best = Some(op);
        }
    }
    Ok(best.expect("candidate set always contains 0 and 1"))
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Stratified percentile-bootstrap interval for the AUROC.
///
/// Each resample redraws positives and negatives separately with
/// replacement, so every resample contains both classes. Resample `b` uses
/// its own ChaCha stream derived from `seed`, which makes the result
/// independent of thread count.
pub fn bootstrap_ci<T: Scalar>(
    scores: &[T],
    labels: &[usize],
    n_boot: usize,
    level: f64,
    seed: u64,
) -> Result<(T, T)> {
    check_inputs(scores, labels)?;
    if n_boot < 100 {
        return Err(Error::InvalidConfig(format!("n_boot must be >= 100, got {n_boot}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("level must be in (0, 1), got {level}")));
    }
    let pos: Vec<T> = scores.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(s, _)| *s).collect();
    let neg: Vec<T> = scores.iter().zip(labels).filter(|(_, &l)| l == 0).map(|(s, _)| *s).collect();
    let mut stats: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut s = Vec::with_capacity(pos.len() + neg.len());
            let mut l = Vec::with_capacity(pos.len() + neg.len());
            for _ in 0..pos.len() {
                s.push(pos[rng.random_range(0..pos.len())]);
                l.push(1);
            }
            for _ in 0..neg.len() {
                s.push(neg[rng.random_range(0..neg.len())]);
                l.push(0);
            }
            auroc(&s, &l).expect("stratified resample has both classes").as_f64()
        })
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    let alpha = (1.0 - level) / 2.0;
    Ok((
        T::of(quantile_sorted(&stats, alpha)),
        T::of(quantile_sorted(&stats, 1.0 - alpha)),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub n_boot: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            n_boot: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

/// Discrimination summary of a scored split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EvalReport<T> {
    pub auroc: T,
    pub ci_low: T,
    pub ci_high: T,
    pub level: f64,
    pub n_boot: usize,
    pub threshold: T,
    /// Split on which the threshold was selected.
    pub threshold_split: String,
    pub sensitivity: T,
    pub specificity: T,
    pub n_pos: usize,
    pub n_neg: usize,
    pub roc_points: Vec<RocPoint<T>>,
}

impl<T: Scalar> EvalReport<T> {
    /// Report on `(scores, labels)`. The threshold is chosen by Youden's J on
    /// `threshold_source` when given (name, scores, labels), else on the
    /// evaluated scores themselves; sensitivity and specificity are always
    /// measured on the evaluated scores.
    pub fn compute(
        scores: &[T],
        labels: &[usize],
        options: &EvalOptions,
        split_name: &str,
        threshold_source: Option<(&str, &[T], &[usize])>,
    ) -> Result<Self> {
        let auc = auroc(scores, labels)?;
        let (lo, hi) = bootstrap_ci(scores, labels, options.n_boot, options.level, options.seed)?;
        let (threshold_split, threshold) = match threshold_source {
            Some((name, s, l)) => (name.to_string(), youden_threshold(s, l)?.threshold),
            None => (split_name.to_string(), youden_threshold(scores, labels)?.threshold),
        };
        let op = operating_point(scores, labels, threshold)?;
        let (n_pos, n_neg) = class_counts(labels);
        Ok(Self {
            auroc: auc,
            // the percentile interval need not cover the point estimate
            ci_low: lo.min(auc),
            ci_high: hi.max(auc),
            level: options.level,
            n_boot: options.n_boot,
            threshold,
            threshold_split,
            sensitivity: op.sensitivity,
            specificity: op.specificity,
            n_pos,
            n_neg,
            roc_points: roc_curve(scores, labels)?,
        })
    }

    /// ROC export: CSV with columns `fpr,tpr,threshold`.
    pub fn write_roc_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["fpr", "tpr", "threshold"])?;
        for p in &self.roc_points {
            w.write_record([p.fpr.to_string(), p.tpr.to_string(), p.threshold.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
