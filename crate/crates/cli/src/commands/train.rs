use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use recourse_core::gbm::{cross_validate, train, CvResult, GbmConfig};
use serde::Serialize;

use crate::data::{self, DataDir, Paths};
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;

pub const MODEL_JSON: &str = "model.json";
pub const CV_JSON: &str = "cv.json";

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Cohort directory written by `synth`.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for the model and CV report.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub n_trees: usize,
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
    #[arg(long, default_value_t = 5)]
    pub min_leaf: usize,
    #[arg(long, default_value_t = 1.0)]
    pub subsample: f64,
    /// Cross-validation folds on the training split; 0 skips CV.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Serialize)]
struct CvReport<'a> {
    config: &'a GbmConfig,
    folds: usize,
    #[serde(flatten)]
    result: Option<CvResult<f64>>,
}

pub fn run(args: &TrainArgs, paths: &Paths, rec: &mut Recorder) -> CliResult<()> {
    let config = GbmConfig {
        n_trees: args.n_trees,
        max_depth: args.max_depth,
        learning_rate: args.learning_rate,
        l2_leaf_penalty: args.l2,
        min_samples_leaf: args.min_leaf,
        subsample: args.subsample,
        seed: args.seed,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if args.folds == 1 {
        return Err(CliError::Usage("--folds must be 0 or at least 2".into()));
    }
    rec.seed("gbm", args.seed);
    let data = DataDir::load(&paths.resolve(&args.data), rec)?;
    let train_set = data.dataset.subset(&data.train_rows()?);

    let cv = if args.folds >= 2 {
        let r = cross_validate(&train_set, &config, args.folds)?;
        let folds: Vec<String> = r.fold_auroc.iter().map(|a| format!("{a:.4}")).collect();
        println!("cv auroc: mean {:.4} (folds {})", r.mean_auroc, folds.join(", "));
        Some(r)
    } else {
        None
    };
    let model = train(&train_set, &config)?;

    let out = paths.resolve(&args.out);
    data::ensure_dir(&out)?;
    let p = out.join(MODEL_JSON);
    model.to_json_writer(BufWriter::new(File::create(&p)?))?;
    rec.output(&p);
    data::write_json(&out.join(CV_JSON), &CvReport { config: &config, folds: args.folds, result: cv }, rec)?;
    rec.manifest_dir = Some(out);
    println!("trained {} trees on {} rows", model.trees.len(), train_set.n_rows());
    Ok(())
}
