//! Exhaustive enumeration over subsets of the binary actionable features.
//!
//! Subset `S` is encoded as an `m`-bit mask over the binary features sorted
//! by feature index; masks `1..2^m` are visited in ascending order, in
//! blocks that may be evaluated concurrently and are merged in block order.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problem::{rank_cmp, Counterfactual, SearchContext, Stage};
use crate::error::{Error, Result};
use crate::predictor::Predictor;
use crate::scalar::Scalar;
use crate::tabular::{BinaryFeature, Instance};

/// Largest `m` with `2^m - 1 <= 2^20`.
pub const MAX_ENUMERABLE: usize = 20;

pub const BLOCK_SIZE: u64 = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EnumResult<T> {
    pub candidates_evaluated: u64,
    /// Number of candidates inside the probability band.
    pub valid_total: usize,
    /// Best `k` valid candidates, ascending by rank.
    pub valid: Vec<Counterfactual<T>>,
    /// Every non-empty subset was evaluated.
    pub exhausted: bool,
}

/// `x0` with each feature in `subset` swapped to the other value of its
/// two-value domain.
pub fn toggle<T: Scalar>(
    x0: &Instance<T>,
    subset: &[usize],
    binary: &[BinaryFeature<T>],
) -> Result<Instance<T>> {
    let mut x = x0.clone();
    for &j in subset {
        let b = binary.iter().find(|b| b.index == j).ok_or_else(|| {
            Error::InvalidQuery(format!("feature {j} is not a binary actionable feature"))
        })?;
        let other = b.other(x0.get(j)).ok_or_else(|| {
            Error::InvalidQuery(format!(
                "value '{}' of feature {j} is not in its two-value domain",
                x0.get(j)
            ))
        })?;
        x.set(j, other.clone());
    }
    Ok(x)
}

fn apply_mask<T: Scalar>(x0: &Instance<T>, flips: &[(usize, crate::tabular::Cell<T>)], mask: u64) -> Instance<T> {
    let mut x = x0.clone();
    for (bit, (j, to)) in flips.iter().enumerate() {
        if mask >> bit & 1 == 1 {
            x.set(*j, to.clone());
        }
    }
    x
}

/// Evaluates all `2^m - 1` non-empty toggle subsets of `binary` and returns
/// the top `k` in-band candidates.
///
/// Fails with [`Error::EnumerationInfeasible`] unless `0 < m <= m_max` and
/// `m <= 20`; the caller is expected to fall back to another stage.
pub fn enumerate<T: Scalar, P: Predictor<T> + ?Sized>(
    ctx: &SearchContext<'_, T, P>,
    binary: &[BinaryFeature<T>],
    deadline: Option<Instant>,
) -> Result<EnumResult<T>> {
    let m = binary.len();
    let q = ctx.query;
    if m == 0 || m > q.m_max || m > MAX_ENUMERABLE {
        return Err(Error::EnumerationInfeasible(format!(
            "m = {m} with m_max = {}",
            q.m_max
        )));
    }
    let mut sorted: Vec<&BinaryFeature<T>> = binary.iter().collect();
    sorted.sort_by_key(|b| b.index);
    let mut flips = Vec::with_capacity(m);
    for b in &sorted {
        if ctx.fixed.contains(&b.index) {
            return Err(Error::InvalidQuery(format!("feature {} is fixed", b.index)));
        }
        if sorted.iter().filter(|o| o.index == b.index).count() > 1 {
            return Err(Error::InvalidQuery(format!("feature {} listed twice", b.index)));
        }
        let to = b.other(q.x0.get(b.index)).ok_or_else(|| {
            Error::InvalidQuery(format!(
                "value '{}' of feature {} is not in its two-value domain",
                q.x0.get(b.index),
                b.index
            ))
        })?;
        flips.push((b.index, to.clone()));
    }

    let total: u64 = (1u64 << m) - 1;
    let n_blocks = total.div_ceil(BLOCK_SIZE);
    let blocks: Vec<Option<Result<Vec<(u64, T)>>>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return None;
            }
            let start = 1 + b * BLOCK_SIZE;
            let end = (start + BLOCK_SIZE).min(total + 1);
            let batch: Vec<Instance<T>> = (start..end).map(|mask| apply_mask(&q.x0, &flips, mask)).collect();
            Some(ctx.predictor.class_probabilities(&batch, q.target_class).map(|ps| {
                (start..end)
                    .zip(ps)
                    .filter(|(_, p)| q.in_band(*p))
                    .collect()
            }))
        })
        .collect();

    let mut evaluated = 0u64;
    let mut hits: Vec<(u64, T)> = Vec::new();
    for (b, block) in blocks.into_iter().enumerate() {
        if let Some(res) = block {
            let start = 1 + b as u64 * BLOCK_SIZE;
            evaluated += (start + BLOCK_SIZE).min(total + 1) - start;
            hits.extend(res?);
        }
    }

    let mut valid = hits
        .into_iter()
        .map(|(mask, p)| ctx.counterfactual(apply_mask(&q.x0, &flips, mask), p, Stage::Enumeration))
        .collect::<Result<Vec<_>>>()?;
    valid.sort_by(rank_cmp);
    let valid_total = valid.len();
    valid.truncate(q.k);
    Ok(EnumResult {
        candidates_evaluated: evaluated,
        valid_total,
        valid,
        exhausted: evaluated == total,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;
    use std::sync::atomic::{AtomicU64, Ordering};

    use super::*;
    use crate::cf::problem::CfQuery;
    use crate::predictor::FnPredictor;
    use crate::tabular::{Cell, FeatureSchema, FeatureSpec};

    fn binary01(indices: &[usize]) -> Vec<BinaryFeature<f64>> {
        indices
            .iter()
            .map(|&j| BinaryFeature {
                index: j,
                values: [Cell::Num(0.0), Cell::Num(1.0)],
            })
            .collect()
    }

    fn schema(p: usize) -> FeatureSchema<f64> {
        FeatureSchema::new((0..p).map(|j| FeatureSpec::binary01(&format!("b{j}"))).collect()).unwrap()
    }

    #[test]
    fn toggle_swaps_within_domain() {
        let x0 = Instance::<f64>::from_numbers(&[1.0, 0.0, 1.0]);
        let b = binary01(&[0, 2]);
        assert_eq!(toggle(&x0, &[0], &b).unwrap(), Instance::from_numbers(&[0.0, 0.0, 1.0]));
        assert_eq!(toggle(&x0, &[], &b).unwrap(), x0);
        assert!(toggle(&x0, &[1], &b).is_err());

        let x0 = Instance::<f64>::new(vec![Cell::cat("yes")]);
        let b = vec![BinaryFeature {
            index: 0,
            values: [Cell::cat("no"), Cell::cat("yes")],
        }];
        assert_eq!(toggle(&x0, &[0], &b).unwrap(), Instance::new(vec![Cell::cat("no")]));
        let b12 = vec![BinaryFeature {
            index: 0,
            values: [Cell::Num(1.0), Cell::Num(2.0)],
        }];
        let x0 = Instance::<f64>::from_numbers(&[2.0]);
        assert_eq!(toggle(&x0, &[0], &b12).unwrap(), Instance::from_numbers(&[1.0]));
    }

    #[test]
    fn counts_every_subset_once() {
        let s = schema(4);
        let calls = AtomicU64::new(0);
        let f = FnPredictor::new(|_: &Instance<f64>| {
            calls.fetch_add(1, Ordering::Relaxed);
            0.5
        });
        let x0 = Instance::from_numbers(&[0.0, 1.0, 0.0, 1.0]);
        let q = CfQuery::new(x0, 1, 0.0, 1.0).with_fixed([3]);
        let ctx = SearchContext::new(&q, &f, &s).unwrap();
        let calls_before = calls.load(Ordering::Relaxed);
        let r = enumerate(&ctx, &binary01(&[0, 1, 2]), None).unwrap();
        assert_eq!(r.candidates_evaluated, 7);
        assert_eq!(calls.load(Ordering::Relaxed) - calls_before, 7);
        assert!(r.exhausted);
        assert_eq!(r.valid_total, 7);
        assert!(enumerate(&ctx, &binary01(&[0, 3]), None).is_err());
    }

    #[test]
    fn gate_preconditions() {
        let s = schema(3);
        let f = FnPredictor::new(|_: &Instance<f64>| 0.5);
        let q = CfQuery::new(Instance::from_numbers(&[0.0; 3]), 1, 0.0, 1.0).with_m_max(2);
        let ctx = SearchContext::new(&q, &f, &s).unwrap();
        assert!(matches!(enumerate(&ctx, &[], None), Err(Error::EnumerationInfeasible(_))));
        assert!(matches!(
            enumerate(&ctx, &binary01(&[0, 1, 2]), None),
            Err(Error::EnumerationInfeasible(_))
        ));
    }

    #[test]
    fn planted_single_flip_wins() {
        // risk 0.72 with feature 2 present, 0.15 without; others nudge by 0.01
        let s = schema(5);
        let table: HashMap<Vec<u8>, f64> = (0..32u32)
            .map(|m| {
                let bits: Vec<u8> = (0..5).map(|j| (m >> j & 1) as u8).collect();
                let base = if bits[2] == 1 { 0.72 } else { 0.15 };
                let nudge = 0.01 * bits.iter().enumerate().filter(|(j, _)| *j != 2).map(|(_, &b)| b as f64).sum::<f64>();
                (bits, base + nudge)
            })
            .collect();
        let f = FnPredictor::new(move |x: &Instance<f64>| {
            let key: Vec<u8> = x.values().iter().map(|c| c.as_num().unwrap() as u8).collect();
            table[&key]
        });
        let x0 = Instance::from_numbers(&[0.0, 0.0, 1.0, 0.0, 0.0]);
        let q = CfQuery::new(x0, 1, 0.0, 0.4).with_k(3);
        let ctx = SearchContext::new(&q, &f, &s).unwrap();
        let r = enumerate(&ctx, &binary01(&[0, 1, 2, 3, 4]), None).unwrap();
        assert_eq!(r.candidates_evaluated, 31);
        assert_eq!(r.valid[0].changed, vec![2]);
        assert!((r.valid[0].p_target - 0.15).abs() < 1e-12);
        assert!((r.valid[0].p_origin - 0.72).abs() < 1e-12);
        assert_eq!(r.valid[0].changes[0].feature, "b2");
        for cf in &r.valid {
            assert!(q.in_band(cf.p_target));
        }
    }

    #[test]
    fn fewer_valid_than_k_returns_all() {
        let s = schema(2);
        let f = FnPredictor::new(|x: &Instance<f64>| x.get(0).as_num().unwrap() * 0.9 + 0.05);
        let q = CfQuery::new(Instance::from_numbers(&[1.0, 0.0]), 1, 0.0, 0.4).with_k(10);
        let ctx = SearchContext::new(&q, &f, &s).unwrap();
        let r = enumerate(&ctx, &binary01(&[0, 1]), None).unwrap();
        assert_eq!(r.valid.len(), 2);
        assert!(r.exhausted);
    }
}
