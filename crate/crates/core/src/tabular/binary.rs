use std::collections::BTreeSet;

use super::cell::Cell;
use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An actionable feature with exactly two observed values in the data.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryFeature<T> {
    pub index: usize,
    /// The two observed values, sorted.
    pub values: [Cell<T>; 2],
}

impl<T: Scalar> BinaryFeature<T> {
    /// The other element of the two-value domain, or `None` if `cell` is
    /// not one of them.
    pub fn other(&self, cell: &Cell<T>) -> Option<&Cell<T>> {
        if *cell == self.values[0] {
            Some(&self.values[1])
        } else if *cell == self.values[1] {
            Some(&self.values[0])
        } else {
            None
        }
    }
}

/// Actionable features whose column in `dataset` takes exactly two distinct
/// values, in ascending feature order.
pub fn binary_features<T: Scalar>(dataset: &Dataset<T>) -> Result<Vec<BinaryFeature<T>>> {
    if dataset.is_empty() {
        return Err(Error::NoData);
    }
    let schema = dataset.schema();
    let mut out = Vec::new();
    for j in 0..schema.len() {
        if !schema.feature(j).actionable {
            continue;
        }
        let distinct = dataset.distinct_values(j);
        if let [a, b] = distinct.as_slice() {
            out.push(BinaryFeature {
                index: j,
                values: [a.clone(), b.clone()],
            });
        }
    }
    Ok(out)
}

/// Index set of the binary actionable features.
pub fn identify_binary_features<T: Scalar>(dataset: &Dataset<T>) -> Result<BTreeSet<usize>> {
    Ok(binary_features(dataset)?.into_iter().map(|b| b.index).collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::tabular::{FeatureSchema, FeatureSpec, Instance};

    fn dataset(rows: &[[f64; 4]], fixed_last: bool) -> Dataset<f64> {
        let mut last = FeatureSpec::binary01("fixed_bin");
        if fixed_last {
            last = last.fixed();
        }
        let schema = FeatureSchema::new(vec![
            FeatureSpec::binary01("b"),
            FeatureSpec::numeric("tri", 0.0, 2.0),
            FeatureSpec::numeric("const", 1.0, 1.0),
            last,
        ])
        .unwrap();
        let rows = rows.iter().map(|r| Instance::from_numbers(r)).collect();
        Dataset::new(Arc::new(schema), rows, None).unwrap()
    }

    #[test]
    fn detects_two_valued_actionable_columns() {
        let d = dataset(
            &[[0.0, 0.0, 1.0, 0.0], [1.0, 1.0, 1.0, 1.0], [1.0, 2.0, 1.0, 0.0]],
            true,
        );
        assert_eq!(identify_binary_features(&d).unwrap(), BTreeSet::from([0]));
        let d = dataset(
            &[[0.0, 0.0, 1.0, 0.0], [1.0, 1.0, 1.0, 1.0], [1.0, 2.0, 1.0, 0.0]],
            false,
        );
        assert_eq!(identify_binary_features(&d).unwrap(), BTreeSet::from([0, 3]));
    }

    #[test]
    fn numeric_column_with_two_values_counts() {
        let d = dataset(&[[0.0, 0.0, 1.0, 0.0], [1.0, 2.0, 1.0, 0.0]], false);
        assert_eq!(identify_binary_features(&d).unwrap(), BTreeSet::from([0, 1]));
    }

    #[test]
    fn empty_dataset_errors() {
        let d = dataset(&[], false);
        assert!(matches!(identify_binary_features(&d), Err(Error::NoData)));
    }

    #[test]
    fn other_value() {
        let b = BinaryFeature::<f64> {
            index: 0,
            values: [Cell::cat("no"), Cell::cat("yes")],
        };
        assert_eq!(b.other(&Cell::cat("yes")), Some(&Cell::cat("no")));
        assert_eq!(b.other(&Cell::cat("maybe")), None);
    }
}
