use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cell::{distinct_sorted, Cell};
use super::schema::FeatureSchema;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One row of feature values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instance<T> {
    values: Vec<Cell<T>>,
}

impl<T: Scalar> Instance<T> {
    pub fn new(values: Vec<Cell<T>>) -> Self {
        Self { values }
    }

    pub fn from_numbers(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Cell::num(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Cell<T>] {
        &self.values
    }

    pub fn get(&self, j: usize) -> &Cell<T> {
        &self.values[j]
    }

    pub fn set(&mut self, j: usize, cell: Cell<T>) {
        self.values[j] = cell;
    }

    /// Feature indices where `self` and `other` differ by more than `eps`
    /// (numbers) or at all (tokens).
    pub fn diff(&self, other: &Self, eps: T) -> Vec<usize> {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .filter(|(_, (a, b))| !a.approx_eq(b, eps))
            .map(|(j, _)| j)
            .collect()
    }
}

impl<T> std::ops::Index<usize> for Instance<T> {
    type Output = Cell<T>;

    fn index(&self, j: usize) -> &Cell<T> {
        &self.values[j]
    }
}

/// Row-major mixed-type table with optional class labels and row ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    schema: Arc<FeatureSchema<T>>,
    rows: Vec<Instance<T>>,
    labels: Option<Vec<usize>>,
    ids: Option<Vec<String>>,
}

/// Number of classes handled by the labelled-data utilities.
pub const N_CLASSES: usize = 2;

impl<T: Scalar> Dataset<T> {
    pub fn new(
        schema: Arc<FeatureSchema<T>>,
        rows: Vec<Instance<T>>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            schema
                .check_instance(row)
                .map_err(|e| Error::InvalidData(format!("row {i}: {e}")))?;
        }
        if let Some(l) = &labels {
            if l.len() != rows.len() {
                return Err(Error::InvalidData(format!(
                    "{} labels for {} rows",
                    l.len(),
                    rows.len()
                )));
            }
            if let Some(bad) = l.iter().find(|&&c| c >= N_CLASSES) {
                return Err(Error::InvalidData(format!("label {bad} is not a valid class")));
            }
        }
        Ok(Self {
            schema,
            rows,
            labels,
            ids: None,
        })
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.rows.len() {
            return Err(Error::InvalidData(format!(
                "{} ids for {} rows",
                ids.len(),
                self.rows.len()
            )));
        }
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn schema(&self) -> &FeatureSchema<T> {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<FeatureSchema<T>> {
        Arc::clone(&self.schema)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Instance<T>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Instance<T> {
        &self.rows[i]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Labels, or an error if the dataset is unlabelled.
    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::InvalidData("dataset has no labels".into()))
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    /// Row id as displayed to users: the id column when present, else the row index.
    pub fn row_id(&self, i: usize) -> String {
        match &self.ids {
            Some(ids) => ids[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn find_row(&self, id: &str) -> Option<usize> {
        match &self.ids {
            Some(ids) => ids.iter().position(|x| x == id),
            None => id.parse::<usize>().ok().filter(|&i| i < self.rows.len()),
        }
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = &Cell<T>> + '_ {
        self.rows.iter().map(move |r| &r.values()[j])
    }

    pub fn distinct_values(&self, j: usize) -> Vec<Cell<T>> {
        distinct_sorted(self.column(j))
    }

    /// Rows at `indices`, in that order, sharing this dataset's schema.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            schema: Arc::clone(&self.schema),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            ids: self
                .ids
                .as_ref()
                .map(|ids| indices.iter().map(|&i| ids[i].clone()).collect()),
        }
    }

    /// Replaces the labels, keeping rows and schema.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        let ids = self.ids.take();
        let mut out = Self::new(self.schema, self.rows, Some(labels))?;
        out.ids = ids;
        Ok(out)
    }
}
