use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// A single table value: a number or a categorical token.
///
/// Tokens compare by string equality only; there is no ordinal meaning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell<T> {
    Num(T),
    Cat(Arc<str>),
}

impl<T: Scalar> Cell<T> {
    pub fn cat(s: &str) -> Self {
        Cell::Cat(Arc::from(s))
    }

    pub fn num(v: f64) -> Self {
        Cell::Num(T::of(v))
    }

    pub fn as_num(&self) -> Option<T> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Cat(_) => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            Cell::Num(_) => None,
            Cell::Cat(s) => Some(s),
        }
    }

    pub fn is_num(&self) -> bool {
        matches!(self, Cell::Num(_))
    }

    /// Total order: numbers before tokens, numbers by value, tokens lexicographically.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cell::Num(a), Cell::Num(b)) => a.total_cmp_nan_last(b),
            (Cell::Num(_), Cell::Cat(_)) => Ordering::Less,
            (Cell::Cat(_), Cell::Num(_)) => Ordering::Greater,
            (Cell::Cat(a), Cell::Cat(b)) => a.cmp(b),
        }
    }

    /// Equality with an absolute tolerance on numbers; tokens compare exactly.
    pub fn approx_eq(&self, other: &Self, eps: T) -> bool {
        match (self, other) {
            (Cell::Num(a), Cell::Num(b)) => (*a - *b).abs() <= eps,
            (Cell::Cat(a), Cell::Cat(b)) => a == b,
            _ => false,
        }
    }
}

impl<T: Scalar> fmt::Display for Cell<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Cat(s) => f.write_str(s),
        }
    }
}

/// Sorted distinct values of a column.
pub fn distinct_sorted<'a, T: Scalar, I>(cells: I) -> Vec<Cell<T>>
where
    I: IntoIterator<Item = &'a Cell<T>>,
{
    let mut v: Vec<Cell<T>> = cells.into_iter().cloned().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_dedups_mixed_cells() {
        let cells: Vec<Cell<f64>> = vec![
            Cell::cat("b"),
            Cell::Num(2.0),
            Cell::cat("a"),
            Cell::Num(2.0),
            Cell::Num(-1.0),
            Cell::cat("b"),
        ];
        let d = distinct_sorted(&cells);
        assert_eq!(
            d,
            vec![Cell::Num(-1.0), Cell::Num(2.0), Cell::cat("a"), Cell::cat("b")]
        );
    }

    #[test]
    fn untagged_json() {
        let c: Vec<Cell<f64>> = serde_json::from_str(r#"[1.5, "yes"]"#).unwrap();
        assert_eq!(c, vec![Cell::Num(1.5), Cell::cat("yes")]);
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"[1.5,"yes"]"#);
    }

    #[test]
    fn approx_eq_tolerance() {
        let a: Cell<f64> = Cell::Num(1.0);
        assert!(a.approx_eq(&Cell::Num(1.0 + 1e-9), 1e-8));
        assert!(!a.approx_eq(&Cell::Num(1.0 + 1e-6), 1e-8));
        assert!(!a.approx_eq(&Cell::cat("1"), 1e-8));
    }
}
