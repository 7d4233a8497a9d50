//! CSV and schema-file I/O.
//!
//! The schema file is a JSON object
//! `{"features":[{"name","kind","actionable","domain"}], "label":"<column>"}`
//! with an optional `"id"` column. `kind`, `actionable` and `domain` may be
//! omitted and are then inferred from the data. An empty feature list means
//! "every column except label and id".

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cell::{distinct_sorted, Cell};
use super::dataset::{Dataset, Instance};
use super::schema::{Domain, FeatureKind, FeatureSchema, FeatureSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SchemaFile<T> {
    #[serde(default)]
    pub features: Vec<FeatureDecl<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FeatureDecl<T> {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<FeatureKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actionable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain<T>>,
}

impl<T: Scalar> FeatureDecl<T> {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: None,
            actionable: None,
            domain: None,
        }
    }
}

impl<T: Scalar> SchemaFile<T> {
    /// Fully specified schema file for an existing schema.
    pub fn from_schema(schema: &FeatureSchema<T>, label: Option<&str>, id: Option<&str>) -> Self {
        Self {
            features: schema
                .features()
                .iter()
                .map(|f| FeatureDecl {
                    name: f.name.clone(),
                    kind: Some(f.kind),
                    actionable: Some(f.actionable),
                    domain: Some(f.domain.clone()),
                })
                .collect(),
            label: label.map(str::to_string),
            id: id.map(str::to_string),
        }
    }

    pub fn from_json_reader<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_label(s: &str) -> Option<usize> {
    match s {
        "true" | "TRUE" | "True" => Some(1),
        "false" | "FALSE" | "False" => Some(0),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| v.fract() == 0.0 && *v >= 0.0)
            .map(|v| v as usize),
    }
}

fn parse_column<T: Scalar>(
    name: &str,
    raw: &[String],
    decl: Option<&FeatureDecl<T>>,
) -> Result<(FeatureSpec<T>, Vec<Cell<T>>)> {
    let all_numeric = raw.iter().all(|s| parse_number(s).is_some());
    let to_cells = |numeric: bool| -> Vec<Cell<T>> {
        raw.iter()
            .map(|s| match numeric {
                true => Cell::Num(T::of(parse_number(s).expect("checked numeric"))),
                false => Cell::cat(s),
            })
            .collect()
    };
    let declared = decl.and_then(|d| d.kind);
    let (kind, cells) = match declared {
        Some(FeatureKind::Numeric) => {
            if !all_numeric {
                return Err(Error::InvalidData(format!(
                    "column '{name}' is declared numeric but holds non-numeric values"
                )));
            }
            (FeatureKind::Numeric, to_cells(true))
        }
        Some(FeatureKind::Binary) => (FeatureKind::Binary, to_cells(all_numeric)),
        Some(FeatureKind::Categorical) => (FeatureKind::Categorical, to_cells(false)),
        None => {
            let cells = to_cells(all_numeric);
            let kind = if distinct_sorted(&cells).len() == 2 {
                FeatureKind::Binary
            } else if all_numeric {
                FeatureKind::Numeric
            } else {
                FeatureKind::Categorical
            };
            (kind, cells)
        }
    };
    let domain = match decl.and_then(|d| d.domain.clone()) {
        Some(d) => d,
        None => match kind {
            FeatureKind::Numeric => {
                let mut it = cells.iter().filter_map(Cell::as_num);
                let first = it.next().unwrap_or_else(T::zero);
                let (min, max) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
                Domain::Range { min, max }
            }
            _ => Domain::Values(distinct_sorted(&cells)),
        },
    };
    let spec = FeatureSpec {
        name: name.to_string(),
        kind,
        domain,
        actionable: decl.and_then(|d| d.actionable).unwrap_or(true),
    };
    Ok((spec, cells))
}

/// Reads a CSV table (header row, comma separated) into a dataset.
pub fn read_csv<T: Scalar, R: Read>(reader: R, decl: &SchemaFile<T>) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidData(format!("column '{name}' not found in header")))
    };
    let label_col = decl.label.as_deref().map(col).transpose()?;
    let id_col = decl.id.as_deref().map(col).transpose()?;
    let feature_cols: Vec<(usize, Option<&FeatureDecl<T>>)> = if decl.features.is_empty() {
        (0..headers.len())
            .filter(|c| Some(*c) != label_col && Some(*c) != id_col)
            .map(|c| (c, None))
            .collect()
    } else {
        decl.features
            .iter()
            .map(|d| Ok((col(&d.name)?, Some(d))))
            .collect::<Result<_>>()?
    };

    let mut raw_cols: Vec<Vec<String>> = vec![Vec::new(); feature_cols.len()];
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let field = |c: usize| -> Result<String> {
            let v = record.get(c).map(str::trim).unwrap_or("");
            if v.is_empty() {
                Err(Error::InvalidData(format!(
                    "missing value at data row {} column '{}'",
                    r + 1,
                    headers[c]
                )))
            } else {
                Ok(v.to_string())
            }
        };
        for (k, (c, _)) in feature_cols.iter().enumerate() {
            raw_cols[k].push(field(*c)?);
        }
        if let Some(c) = label_col {
            let v = field(c)?;
            labels.push(parse_label(&v).ok_or_else(|| {
                Error::InvalidData(format!("bad label '{v}' at data row {}", r + 1))
            })?);
        }
        if let Some(c) = id_col {
            ids.push(field(c)?);
        }
    }

    let n = labels.len().max(ids.len()).max(raw_cols.first().map_or(0, Vec::len));
    let mut specs = Vec::with_capacity(feature_cols.len());
    let mut rows: Vec<Vec<Cell<T>>> = vec![Vec::with_capacity(feature_cols.len()); n];
    for ((c, d), raw) in feature_cols.iter().zip(&raw_cols) {
        let (spec, cells) = parse_column(&headers[*c], raw, *d)?;
        specs.push(spec);
        for (row, cell) in rows.iter_mut().zip(cells) {
            row.push(cell);
        }
    }
    let schema = Arc::new(FeatureSchema::new(specs)?);
    let rows = rows.into_iter().map(Instance::new).collect();
    let ds = Dataset::new(schema, rows, label_col.map(|_| labels))?;
    match id_col {
        Some(_) => ds.with_ids(ids),
        None => Ok(ds),
    }
}

/// Writes the dataset as CSV: optional id column, features, optional label column.
pub fn write_csv<T: Scalar, W: Write>(
    dataset: &Dataset<T>,
    writer: W,
    label: Option<&str>,
    id: Option<&str>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = Vec::new();
    let ids = id.zip(dataset.ids());
    if let Some((name, _)) = ids {
        header.push(name.to_string());
    }
    header.extend(dataset.schema().names().map(str::to_string));
    let labels = label.zip(dataset.labels());
    if let Some((name, _)) = labels {
        header.push(name.to_string());
    }
    w.write_record(&header)?;
    for (i, row) in dataset.rows().iter().enumerate() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some((_, ids)) = ids {
            rec.push(ids[i].clone());
        }
        rec.extend(row.values().iter().map(|c| c.to_string()));
        if let Some((_, l)) = labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a JSON object mapping feature names to values. Numeric features
/// and numeric-valued binaries take JSON numbers; everything else takes
/// strings. Every feature must be present and no unknown keys are allowed.
pub fn instance_from_json<T: Scalar>(schema: &FeatureSchema<T>, value: &serde_json::Value) -> Result<Instance<T>> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::SchemaMismatch("instance must be a JSON object of feature values".into()))?;
    if let Some(k) = obj.keys().find(|k| schema.index_of(k).is_none()) {
        return Err(Error::SchemaMismatch(format!("unknown feature '{k}'")));
    }
    let mut cells = Vec::with_capacity(schema.len());
    for f in schema.features() {
        let v = obj
            .get(&f.name)
            .ok_or_else(|| Error::SchemaMismatch(format!("missing feature '{}'", f.name)))?;
        let numeric = match &f.domain {
            Domain::Range { .. } => true,
            Domain::Values(vals) => vals.first().is_some_and(Cell::is_num),
        };
        let cell = match (numeric, v) {
            (true, serde_json::Value::Number(n)) => n.as_f64().map(Cell::num),
            (false, serde_json::Value::String(s)) => Some(Cell::cat(s)),
            _ => None,
        }
        .ok_or_else(|| {
            Error::SchemaMismatch(format!(
                "feature '{}' expects a {}, got {v}",
                f.name,
                if numeric { "number" } else { "string" }
            ))
        })?;
        cells.push(cell);
    }
    let x = Instance::new(cells);
    schema.check_instance(&x)?;
    Ok(x)
}

/// JSON object mapping feature names to values, in schema order.
pub fn instance_to_json<T: Scalar>(schema: &FeatureSchema<T>, x: &Instance<T>) -> serde_json::Map<String, serde_json::Value> {
    schema
        .names()
        .zip(x.values())
        .map(|(name, c)| (name.to_string(), serde_json::to_value(c).unwrap_or(serde_json::Value::Null)))
        .collect()
}

/// Feature indices for a list of names.
pub fn resolve_features<T: Scalar, S: AsRef<str>>(schema: &FeatureSchema<T>, names: &[S]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            let n = n.as_ref().trim();
            schema
                .index_of(n)
                .ok_or_else(|| Error::SchemaMismatch(format!("unknown feature '{n}'")))
        })
        .collect()
}
