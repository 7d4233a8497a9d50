//! Nearest-instance search: real training rows that already reach the band.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::problem::{dedup_by_instance, Counterfactual, SearchContext, Stage};
use crate::error::Result;
use crate::predictor::Predictor;
use crate::scalar::Scalar;
use crate::tabular::{Dataset, Instance};

/// Rows agreeing with `x0` on every feature in `fixed` (numbers within
/// `epsilon`, tokens exactly).
pub fn restrict_pool<T: Scalar>(
    dataset: &Dataset<T>,
    x0: &Instance<T>,
    fixed: &BTreeSet<usize>,
    epsilon: T,
) -> Vec<usize> {
    dataset
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, row)| fixed.iter().all(|&j| row.get(j).approx_eq(x0.get(j), epsilon)))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NiceResult<T> {
    pub pool_size: usize,
    pub counterfactuals: Vec<Counterfactual<T>>,
    /// Source row of each counterfactual.
    pub rows: Vec<usize>,
}

/// Up to `k` distinct pool rows inside the probability band, nearest to
/// `x0` by Gower distance; ties go to fewer changed features, then row order.
/// An empty result means the stage found nothing.
pub fn nice_search<T: Scalar, P: Predictor<T> + ?Sized>(
    ctx: &SearchContext<'_, T, P>,
    dataset: &Dataset<T>,
) -> Result<NiceResult<T>> {
    let q = ctx.query;
    let pool = restrict_pool(dataset, &q.x0, &ctx.fixed, ctx.epsilon);
    let pool_rows: Vec<Instance<T>> = pool.iter().map(|&i| dataset.row(i).clone()).collect();
    let probs = ctx.predictor.class_probabilities(&pool_rows, q.target_class)?;

    let in_band: Vec<(usize, Instance<T>, T)> = pool
        .iter()
        .zip(pool_rows)
        .zip(probs)
        .filter(|(_, p)| q.in_band(*p))
        .map(|((&i, x), p)| (i, x, p))
        .collect();
    let unique = dedup_by_instance(in_band, |(_, x, _)| x);

    let mut ranked: Vec<(usize, Counterfactual<T>)> = Vec::with_capacity(unique.len());
    for (i, x, p) in unique {
        let cf = ctx.counterfactual(x, p, Stage::Nice)?;
        if ctx.is_valid(&cf)? {
            ranked.push((i, cf));
        }
    }
    ranked.sort_by(|(ia, a), (ib, b)| {
        a.distance
            .total_cmp_nan_last(&b.distance)
            .then(a.changed.len().cmp(&b.changed.len()))
            .then(ia.cmp(ib))
    });
    ranked.truncate(q.k);
    let (rows, counterfactuals) = ranked.into_iter().unzip();
    Ok(NiceResult {
        pool_size: pool.len(),
        counterfactuals,
        rows,
    })
}
