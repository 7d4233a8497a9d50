use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use recourse_core::EvalReport;
use recourse_core::tabular::{read_csv, SchemaFile};
use recourse_core::{Dataset, GbmModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;

pub const COHORT_CSV: &str = "cohort.csv";
pub const SCHEMA_JSON: &str = "schema.json";
pub const SPLIT_JSON: &str = "split.json";
pub const TIMELINES_JSONL: &str = "timelines.jsonl";
pub const MATCHING_JSON: &str = "matching.json";
pub const LABEL_COLUMN: &str = "pasc_hf";
pub const ID_COLUMN: &str = "patient_id";

/// Train/test partition by patient id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub test_fraction: f64,
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T, rec: &mut Recorder) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    rec.output(path);
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path, rec: &mut Recorder) -> CliResult<T> {
    rec.input(path);
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

/// A featurized cohort directory: CSV, schema file and optional split.
pub struct DataDir {
    pub dataset: Dataset,
    pub split: Option<Split>,
}

impl DataDir {
    pub fn load(dir: &Path, rec: &mut Recorder) -> CliResult<Self> {
        let schema_path = dir.join(SCHEMA_JSON);
        let decl: SchemaFile<f64> = read_json(&schema_path, rec)?;
        let csv_path = dir.join(COHORT_CSV);
        rec.input(&csv_path);
        let dataset = read_csv(open(&csv_path)?, &decl)?;
        let split_path = dir.join(SPLIT_JSON);
        let split = if split_path.exists() {
            Some(read_json(&split_path, rec)?)
        } else {
            None
        };
        Ok(Self { dataset, split })
    }

    fn indices(&self, ids: &[String]) -> CliResult<Vec<usize>> {
        let lookup: HashMap<String, usize> =
            (0..self.dataset.n_rows()).map(|i| (self.dataset.row_id(i), i)).collect();
        ids.iter()
            .map(|id| {
                lookup
                    .get(id)
                    .copied()
                    .ok_or_else(|| CliError::Data(format!("split refers to unknown id '{id}'")))
            })
            .collect()
    }

    /// Row indices of the training split; every row when there is no split.
    pub fn train_rows(&self) -> CliResult<Vec<usize>> {
        match &self.split {
            Some(s) => self.indices(&s.train),
            None => Ok((0..self.dataset.n_rows()).collect()),
        }
    }

    pub fn test_rows(&self) -> CliResult<Vec<usize>> {
        match &self.split {
            Some(s) => self.indices(&s.test),
            None => Err(CliError::Data(format!("no {SPLIT_JSON} in the data directory"))),
        }
    }
}

pub fn load_model(path: &Path, rec: &mut Recorder) -> CliResult<GbmModel> {
    rec.input(path);
    GbmModel::from_json_reader(open(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn load_eval(path: &Path, rec: &mut Recorder) -> CliResult<EvalReport> {
    read_json(path, rec)
}

/// Resolves relative paths against a base directory.
#[derive(Clone, Debug)]
pub struct Paths {
    pub base: PathBuf,
}

impl Paths {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}
