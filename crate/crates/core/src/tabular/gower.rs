//! Gower distance over mixed numeric / categorical features.
//!
//! Numeric terms are `|a - b| / range` (clipped to 1, zero when the range is
//! zero); binary and categorical terms are mismatch indicators. The total is
//! averaged over all `p` features.

use super::cell::Cell;
use super::dataset::Instance;
use super::schema::{FeatureKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gower metric with precomputed per-feature scaling.
#[derive(Clone, Debug)]
pub struct Gower<T> {
    // `Some(1/range)` for numeric features, `Some(0)` for zero-range numeric,
    // `None` for mismatch-indicator features.
    inv_range: Vec<Option<T>>,
}

impl<T: Scalar> Gower<T> {
    pub fn new(schema: &FeatureSchema<T>) -> Self {
        let inv_range = schema
            .features()
            .iter()
            .map(|f| match f.kind {
                FeatureKind::Numeric => {
                    let r = f.range();
                    Some(if r > T::zero() { r.recip() } else { T::zero() })
                }
                FeatureKind::Binary | FeatureKind::Categorical => None,
            })
            .collect();
        Self { inv_range }
    }

    pub fn n_features(&self) -> usize {
        self.inv_range.len()
    }

    /// Per-feature dissimilarity in `[0, 1]`.
    pub fn term(&self, j: usize, a: &Cell<T>, b: &Cell<T>) -> Result<T> {
        match (self.inv_range[j], a, b) {
            (Some(inv), Cell::Num(x), Cell::Num(y)) => Ok(((*x - *y).abs() * inv).min(T::one())),
            (Some(_), _, _) => Err(Error::SchemaMismatch(format!(
                "numeric feature {j} holds a non-numeric value"
            ))),
            (None, x, y) => Ok(if x == y { T::zero() } else { T::one() }),
        }
    }

    pub fn distance(&self, a: &Instance<T>, b: &Instance<T>) -> Result<T> {
        let p = self.n_features();
        if a.len() != p || b.len() != p {
            return Err(Error::SchemaMismatch(format!(
                "gower over {p} features got instances of length {} and {}",
                a.len(),
                b.len()
            )));
        }
        if p == 0 {
            return Ok(T::zero());
        }
        let mut total = T::zero();
        for j in 0..p {
            total = total + self.term(j, a.get(j), b.get(j))?;
        }
        Ok(total / T::of(p as f64))
    }
}

/// One-shot Gower distance between two instances under `schema`.
pub fn gower_distance<T: Scalar>(
    a: &Instance<T>,
    b: &Instance<T>,
    schema: &FeatureSchema<T>,
) -> Result<T> {
    Gower::new(schema).distance(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::FeatureSpec;

    fn schema4() -> FeatureSchema<f64> {
        FeatureSchema::new(vec![
            FeatureSpec::numeric("n", 0.0, 10.0),
            FeatureSpec::binary01("b"),
            FeatureSpec::categorical("c", &["x", "y", "z"]),
            FeatureSpec::numeric("flat", 3.0, 3.0),
        ])
        .unwrap()
    }

    fn inst(n: f64, b: f64, c: &str, flat: f64) -> Instance<f64> {
        Instance::new(vec![Cell::Num(n), Cell::Num(b), Cell::cat(c), Cell::Num(flat)])
    }

    #[test]
    fn identity_is_zero() {
        let a = inst(2.0, 1.0, "x", 3.0);
        assert_eq!(gower_distance(&a, &a, &schema4()).unwrap(), 0.0);
    }

    #[test]
    fn single_binary_mismatch_is_one_over_p() {
        let a = inst(2.0, 1.0, "x", 3.0);
        let b = inst(2.0, 0.0, "x", 3.0);
        assert_eq!(gower_distance(&a, &b, &schema4()).unwrap(), 0.25);
    }

    #[test]
    fn numeric_term_scaled_by_range() {
        let a = inst(2.0, 1.0, "x", 3.0);
        let b = inst(7.0, 1.0, "x", 3.0);
        // independent scalar evaluation: |2-7|/10 averaged over 4 features
        let oracle = ((2.0f64 - 7.0).abs() / (10.0 - 0.0) + 0.0 + 0.0 + 0.0) / 4.0;
        let d = gower_distance(&a, &b, &schema4()).unwrap();
        assert!((d - 0.125).abs() < 1e-15);
        assert!((d - oracle).abs() < 1e-15);
    }

    #[test]
    fn zero_range_contributes_nothing() {
        let a = inst(2.0, 1.0, "x", 3.0);
        let b = inst(2.0, 1.0, "x", 9.0);
        assert_eq!(gower_distance(&a, &b, &schema4()).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_values_are_clipped() {
        let a = inst(-50.0, 1.0, "x", 3.0);
        let b = inst(50.0, 1.0, "x", 3.0);
        assert_eq!(gower_distance(&a, &b, &schema4()).unwrap(), 0.25);
    }

    #[test]
    fn mismatched_shapes_error() {
        let a = inst(2.0, 1.0, "x", 3.0);
        let short = Instance::from_numbers(&[1.0]);
        assert!(gower_distance(&a, &short, &schema4()).is_err());
        let wrong = Instance::new(vec![Cell::cat("q"), Cell::Num(1.0), Cell::cat("x"), Cell::Num(3.0)]);
        assert!(gower_distance(&a, &wrong, &schema4()).is_err());
    }
}
