use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cell::Cell;
use super::dataset::Instance;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Binary,
    Categorical,
}

/// Observed domain of a feature: a closed numeric range or a sorted value set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Domain<T> {
    Range { min: T, max: T },
    Values(Vec<Cell<T>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec<T> {
    pub name: String,
    pub kind: FeatureKind,
    pub domain: Domain<T>,
    pub actionable: bool,
}

impl<T: Scalar> FeatureSpec<T> {
    pub fn numeric(name: &str, min: f64, max: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            domain: Domain::Range {
                min: T::of(min),
                max: T::of(max),
            },
            actionable: true,
        }
    }

    /// Binary feature over the numeric values `{0, 1}`.
    pub fn binary01(name: &str) -> Self {
        Self::binary(name, Cell::num(0.0), Cell::num(1.0))
    }

    pub fn binary(name: &str, a: Cell<T>, b: Cell<T>) -> Self {
        let mut values = vec![a, b];
        values.sort_by(|x, y| x.total_cmp(y));
        Self {
            name: name.to_string(),
            kind: FeatureKind::Binary,
            domain: Domain::Values(values),
            actionable: true,
        }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        let mut values: Vec<Cell<T>> = levels.iter().map(|s| Cell::cat(s)).collect();
        values.sort_by(|x, y| x.total_cmp(y));
        values.dedup();
        Self {
            name: name.to_string(),
            kind: FeatureKind::Categorical,
            domain: Domain::Values(values),
            actionable: true,
        }
    }

    pub fn fixed(mut self) -> Self {
        self.actionable = false;
        self
    }

    /// Width of a numeric domain; zero for non-numeric features.
    pub fn range(&self) -> T {
        match &self.domain {
            Domain::Range { min, max } => *max - *min,
            Domain::Values(_) => T::zero(),
        }
    }

    pub fn values(&self) -> &[Cell<T>] {
        match &self.domain {
            Domain::Values(v) => v,
            Domain::Range { .. } => &[],
        }
    }

    /// Checks that `cell` is admissible for this feature.
    pub fn check_cell(&self, cell: &Cell<T>) -> Result<()> {
        match (&self.kind, cell) {
            (FeatureKind::Numeric, Cell::Num(v)) if v.is_finite() => Ok(()),
            (FeatureKind::Numeric, _) => Err(Error::SchemaMismatch(format!(
                "feature '{}' expects a finite number, got '{cell}'",
                self.name
            ))),
            (_, c) if self.values().contains(c) => Ok(()),
            _ => Err(Error::SchemaMismatch(format!(
                "value '{cell}' is outside the domain of feature '{}'",
                self.name
            ))),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::InvalidSchema("feature names must be non-empty".into()));
        }
        match (&self.kind, &self.domain) {
            (FeatureKind::Numeric, Domain::Range { min, max }) => {
                if !(min.is_finite() && max.is_finite()) || min > max {
                    return Err(Error::InvalidSchema(format!(
                        "numeric feature '{}' needs a finite range with min <= max",
                        self.name
                    )));
                }
            }
            (FeatureKind::Binary, Domain::Values(v)) => {
                if v.len() != 2 || v[0] == v[1] {
                    return Err(Error::InvalidSchema(format!(
                        "binary feature '{}' must have exactly two values",
                        self.name
                    )));
                }
            }
            (FeatureKind::Categorical, Domain::Values(v)) => {
                if v.is_empty() || v.len() == 2 {
                    return Err(Error::InvalidSchema(format!(
                        "categorical feature '{}' has {} values; two-valued features are binary",
                        self.name,
                        v.len()
                    )));
                }
            }
            _ => {
                return Err(Error::InvalidSchema(format!(
                    "feature '{}' has a domain that does not match its kind",
                    self.name
                )))
            }
        }
        Ok(())
    }
}

/// Ordered feature list shared by the dataset, the model and every search stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema<T>", bound = "T: Scalar")]
pub struct FeatureSchema<T> {
    features: Vec<FeatureSpec<T>>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawSchema<T> {
    features: Vec<FeatureSpec<T>>,
}

impl<T: Scalar> TryFrom<RawSchema<T>> for FeatureSchema<T> {
    type Error = Error;

    fn try_from(raw: RawSchema<T>) -> Result<Self> {
        FeatureSchema::new(raw.features)
    }
}

impl<T: Scalar> FeatureSchema<T> {
    pub fn new(features: Vec<FeatureSpec<T>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &features {
            f.validate()?;
            if !seen.insert(f.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature name '{}'", f.name)));
            }
        }
        Ok(Self { features })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureSpec<T>] {
        &self.features
    }

    pub fn feature(&self, j: usize) -> &FeatureSpec<T> {
        &self.features[j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// Indices of features the schema marks as immutable.
    pub fn immutable(&self) -> impl Iterator<Item = usize> + '_ {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.actionable)
            .map(|(j, _)| j)
    }

    /// Returns a copy with the given features marked actionable or fixed.
    pub fn with_actionable(&self, j: usize, actionable: bool) -> Self {
        let mut out = self.clone();
        out.features[j].actionable = actionable;
        out
    }

    pub fn check_instance(&self, x: &Instance<T>) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::SchemaMismatch(format!(
                "instance has {} values, schema has {} features",
                x.len(),
                self.len()
            )));
        }
        for (spec, cell) in self.features.iter().zip(x.values()) {
            spec.check_cell(cell)?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON encoding, hex encoded.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&json))
    }
}
