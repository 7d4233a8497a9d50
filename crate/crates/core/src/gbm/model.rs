use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Node, Tree};
use crate::error::{Error, Result};
use crate::predictor::Predictor;
use crate::scalar::{sigmoid, Scalar};
use crate::tabular::{Dataset, FeatureSchema, Instance};

pub const MODEL_VERSION: u32 = 1;

/// Additive ensemble of regression trees over logits (binary classification).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GbmModel<T> {
    pub version: u32,
    pub base_score: T,
    pub trees: Vec<Tree<T>>,
    pub schema_fingerprint: String,
    pub feature_names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance<T> {
    pub feature: String,
    pub importance: T,
}

impl<T: Scalar> GbmModel<T> {
    pub fn new(base_score: T, trees: Vec<Tree<T>>, schema: &FeatureSchema<T>) -> Self {
        Self {
            version: MODEL_VERSION,
            base_score,
            trees,
            schema_fingerprint: schema.fingerprint(),
            feature_names: schema.names().map(str::to_string).collect(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// The first `n` trees of this ensemble.
    pub fn truncated(&self, n: usize) -> Self {
        let mut m = self.clone();
        m.trees.truncate(n);
        m
    }

    /// Ensemble logit for `x`.
    pub fn raw_score(&self, x: &Instance<T>) -> Result<T> {
        if x.len() != self.n_features() {
            return Err(Error::SchemaMismatch(format!(
                "instance has {} values, model expects {}",
                x.len(),
                self.n_features()
            )));
        }
        let mut z = self.base_score;
        for t in &self.trees {
            z = z + t.predict(x)?;
        }
        Ok(z)
    }

    /// Whether `schema` is the one this model was trained on.
    pub fn matches_schema(&self, schema: &FeatureSchema<T>) -> bool {
        self.schema_fingerprint == schema.fingerprint()
    }

    pub fn check_schema(&self, schema: &FeatureSchema<T>) -> Result<()> {
        if self.matches_schema(schema) {
            Ok(())
        } else {
            Err(Error::SchemaMismatch(
                "model was trained on a different feature schema".into(),
            ))
        }
    }

    /// Split gain summed per feature and normalized to sum to one. All zeros
    /// when the ensemble has no splits.
    pub fn feature_importance(&self) -> Vec<FeatureImportance<T>> {
        let mut gain = vec![T::zero(); self.n_features()];
        for t in &self.trees {
            for node in &t.nodes {
                if let Node::Split { feature, gain: g, .. } = node {
                    gain[*feature] = gain[*feature] + g.max(T::zero());
                }
            }
        }
        let total: T = gain.iter().copied().sum();
        self.feature_names
            .iter()
            .zip(gain)
            .map(|(name, g)| FeatureImportance {
                feature: name.clone(),
                importance: if total > T::zero() { g / total } else { T::zero() },
            })
            .collect()
    }

    /// Mean logistic loss over a labelled dataset.
    pub fn log_loss(&self, dataset: &Dataset<T>) -> Result<T> {
        let labels = dataset.require_labels()?;
        let mut total = T::zero();
        for (x, &y) in dataset.rows().iter().zip(labels) {
            let z = self.raw_score(x)?;
            // log(1 + e^z) - y z, computed stably
            let softplus = if z > T::zero() {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            total = total + softplus - T::of(y as f64) * z;
        }
        Ok(total / T::of(dataset.n_rows() as f64))
    }

    pub fn to_json_writer<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json_reader<R: Read>(r: R) -> Result<Self> {
        let m: Self = serde_json::from_reader(r)?;
        m.validate()?;
        Ok(m)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json_reader(s.as_bytes())
    }

    fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion(self.version));
        }
        for t in &self.trees {
            t.validate(self.n_features())?;
        }
        Ok(())
    }
}

/// Writes feature importances ranked by decreasing importance, ties by name.
pub fn write_importance_csv<T: Scalar, W: Write>(
    importance: &[FeatureImportance<T>],
    w: W,
) -> Result<()> {
    let mut ranked: Vec<&FeatureImportance<T>> = importance.iter().collect();
    ranked.sort_by(|a, b| {
        b.importance
            .total_cmp_nan_last(&a.importance)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["rank", "feature", "importance"])?;
    for (i, f) in ranked.iter().enumerate() {
        w.write_record([(i + 1).to_string(), f.feature.clone(), f.importance.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

impl<T: Scalar> Predictor<T> for GbmModel<T> {
    fn n_classes(&self) -> usize {
        2
    }

    fn predict_batch(&self, xs: &[Instance<T>]) -> Result<Vec<Vec<T>>> {
        let one = |x: &Instance<T>| -> Result<Vec<T>> {
            let p1 = sigmoid(self.raw_score(x)?);
            Ok(vec![T::one() - p1, p1])
        };
        if xs.len() >= 256 {
            xs.par_iter().map(one).collect()
        } else {
            xs.iter().map(one).collect()
        }
    }
}
