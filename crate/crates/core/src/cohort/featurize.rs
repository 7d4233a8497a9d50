use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::timeline::EventTimeline;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tabular::{Cell, Dataset, FeatureSchema, FeatureSpec, Instance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeKind {
    Diagnosis,
    Medication,
    Lab,
}

/// Columns sort aggregations by [`Aggregation::name`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Presence,
    Count,
    LastValue,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Presence => "presence",
            Aggregation::Count => "count",
            Aggregation::LastValue => "last_value",
        }
    }
}

pub const DIAGNOSES: [&str; 5] = ["HTN", "CKD", "DM", "CAD", "HFpEF"];
pub const MEDICATIONS: [&str; 2] = ["loop-diuretic", "ACE-inhibitor"];
pub const LABS: [&str; 2] = ["creatinine", "A1c"];

/// Windows are half-open `[start, end)` in days relative to the index date.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub windows: Vec<(i32, i32)>,
    pub codes: BTreeMap<String, CodeKind>,
    pub aggregations: BTreeMap<CodeKind, Vec<Aggregation>>,
}

impl Default for WindowSpec {
    fn default() -> Self {
        let mut codes = BTreeMap::new();
        for c in DIAGNOSES {
            codes.insert(c.to_string(), CodeKind::Diagnosis);
        }
        for c in MEDICATIONS {
            codes.insert(c.to_string(), CodeKind::Medication);
        }
        for c in LABS {
            codes.insert(c.to_string(), CodeKind::Lab);
        }
        Self {
            windows: vec![(-365, 0), (0, 180)],
            codes,
            aggregations: BTreeMap::from([
                (CodeKind::Diagnosis, vec![Aggregation::Presence]),
                (CodeKind::Medication, vec![Aggregation::Presence, Aggregation::Count]),
                (CodeKind::Lab, vec![Aggregation::Presence, Aggregation::LastValue]),
            ]),
        }
    }
}

/// One output column of the featurizer.
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub code: String,
    pub window: (i32, i32),
    pub aggregation: Aggregation,
}

impl Column {
    pub fn name(&self) -> String {
        format!("{}@{}_{}:{}", self.code, self.window.0, self.window.1, self.aggregation.name())
    }
}

pub fn feature_name(code: &str, window: (i32, i32), aggregation: Aggregation) -> String {
    Column { code: code.into(), window, aggregation }.name()
}

pub const STATIC_FEATURES: [&str; 3] = ["age", "sex", "eci"];

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() {
            return Err(Error::InvalidConfig("at least one window is required".into()));
        }
        if let Some(w) = self.windows.iter().find(|(s, e)| s >= e) {
            return Err(Error::InvalidConfig(format!("window start must precede end, got {w:?}")));
        }
        for (code, kind) in &self.codes {
            if self.aggregations.get(kind).is_none_or(Vec::is_empty) {
                return Err(Error::InvalidConfig(format!("no aggregation configured for code '{code}'")));
            }
        }
        Ok(())
    }

    /// Event columns sorted by code, then window, then aggregation name.
    pub fn columns(&self) -> Vec<Column> {
        let mut windows = self.windows.clone();
        windows.sort_unstable();
        windows.dedup();
        let mut cols = Vec::new();
        for (code, kind) in &self.codes {
            for &window in &windows {
                let mut aggs = self.aggregations.get(kind).cloned().unwrap_or_default();
                aggs.sort_by_key(|a| a.name());
                aggs.dedup();
                for aggregation in aggs {
                    cols.push(Column { code: code.clone(), window, aggregation });
                }
            }
        }
        cols
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns()
            .iter()
            .map(Column::name)
            .chain(STATIC_FEATURES.iter().map(|s| s.to_string()))
            .collect()
    }
}

fn column_values<T: Scalar>(t: &EventTimeline, cols: &[Column]) -> Vec<Cell<T>> {
    let mut out = Vec::with_capacity(cols.len() + 3);
    for c in cols {
        let (start, end) = c.window;
        let hits = t
            .events
            .iter()
            .filter(|e| e.code == c.code && start <= e.offset && e.offset < end);
        let v = match c.aggregation {
            Aggregation::Presence => {
                if hits.count() > 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Aggregation::Count => hits.count() as f64,
            // latest valued event; equal offsets resolve to the later record
            Aggregation::LastValue => hits
                .filter_map(|e| e.value.map(|v| (e.offset, v)))
                .fold(None, |best: Option<(i32, f64)>, (o, v)| match best {
                    Some((bo, _)) if bo > o => best,
                    _ => Some((o, v)),
                })
                .map_or(0.0, |(_, v)| v),
        };
        out.push(Cell::Num(T::of(v)));
    }
    out.push(Cell::Num(T::of(t.statics.age)));
    out.push(Cell::cat(t.statics.sex.as_str()));
    out.push(Cell::Num(T::of(t.statics.eci as f64)));
    out
}

/// Fixed-window aggregation of one timeline, followed by age, sex and ECI.
pub fn featurize<T: Scalar>(timeline: &EventTimeline, spec: &WindowSpec) -> Result<Instance<T>> {
    spec.validate()?;
    Ok(Instance::new(column_values(timeline, &spec.columns())))
}

/// Schema for featurized timelines. Presence bits are binary `{0, 1}`;
/// counts, last values, age and ECI are numeric over their observed range
/// (widened to include 0 for event columns); sex is binary `{F, M}`.
/// Age and sex are not actionable.
pub fn cohort_schema<T: Scalar>(spec: &WindowSpec, rows: &[Instance<T>]) -> Result<FeatureSchema<T>> {
    let cols = spec.columns();
    let range = |j: usize, include_zero: bool| -> (f64, f64) {
        let init = if include_zero { (0.0, 0.0) } else { (f64::INFINITY, f64::NEG_INFINITY) };
        let (lo, hi) = rows.iter().filter_map(|r| r.get(j).as_num()).fold(init, |(lo, hi), v| {
            let v = v.as_f64();
            (lo.min(v), hi.max(v))
        });
        if lo > hi {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    };
    let mut features: Vec<FeatureSpec<T>> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| match c.aggregation {
            Aggregation::Presence => FeatureSpec::binary01(&c.name()),
            _ => {
                let (lo, hi) = range(j, true);
                FeatureSpec::numeric(&c.name(), lo, hi)
            }
        })
        .collect();
    let p = cols.len();
    let (lo, hi) = range(p, false);
    features.push(FeatureSpec::numeric("age", lo, hi).fixed());
    features.push(FeatureSpec::binary("sex", Cell::cat("F"), Cell::cat("M")).fixed());
    let (lo, hi) = range(p + 2, false);
    features.push(FeatureSpec::numeric("eci", lo, hi));
    FeatureSchema::new(features)
}

/// Featurizes every timeline (in parallel, order preserved) and builds a
/// dataset with patient ids and, when given, labels.
pub fn cohort_dataset<T: Scalar>(
    timelines: &[EventTimeline],
    labels: Option<Vec<usize>>,
    spec: &WindowSpec,
) -> Result<Dataset<T>> {
    spec.validate()?;
    let cols = spec.columns();
    let rows: Vec<Instance<T>> = timelines
        .par_iter()
        .map(|t| Instance::new(column_values(t, &cols)))
        .collect();
    let schema = cohort_schema(spec, &rows)?;
    let ids = timelines.iter().map(|t| t.patient_id.clone()).collect();
    Dataset::new(Arc::new(schema), rows, labels)?.with_ids(ids)
}
