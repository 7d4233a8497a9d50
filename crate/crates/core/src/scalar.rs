//! Floating point abstraction shared by every numeric routine in the crate.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(v: f64) -> Self;

    /// Widening conversion used for reporting and RNG interaction.
    fn as_f64(self) -> f64;

    /// Total order treating NaN as the largest value.
    fn total_cmp_nan_last(&self, other: &Self) -> Ordering {
        match self.partial_cmp(other) {
            Some(o) => o,
            None => match (self.is_nan(), other.is_nan()) {
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Greater,
                _ => Ordering::Less,
            },
        }
    }
}

impl Scalar for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Numerically stable logistic function.
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Log-odds of `p`, clamped away from 0 and 1.
pub fn logit<T: Scalar>(p: T) -> T {
    let eps = T::of(1e-12);
    let p = p.max(eps).min(T::one() - eps);
    (p / (T::one() - p)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_symmetric_and_stable() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!((sigmoid(3.0f64) + sigmoid(-3.0f64) - 1.0).abs() < 1e-15);
        assert_eq!(sigmoid(-1000.0f64), 0.0);
        assert_eq!(sigmoid(1000.0f64), 1.0);
        assert!((sigmoid(logit(0.3f64)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn nan_sorts_last() {
        let mut v = vec![f64::NAN, 1.0, -2.0];
        v.sort_by(|a, b| a.total_cmp_nan_last(b));
        assert_eq!(v[0], -2.0);
        assert!(v[2].is_nan());
    }
}
