use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use recourse_core::eval::{EvalOptions, EvalReport};
use recourse_core::gbm::write_importance_csv;
use recourse_core::Predictor;

use crate::data::{self, DataDir, Paths};
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;

pub const EVAL_JSON: &str = "eval.json";
pub const ROC_CSV: &str = "roc.csv";
pub const IMPORTANCE_CSV: &str = "importance.csv";

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory for the report, ROC and importance files.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n_boot: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Split the Youden threshold is chosen on.
    #[arg(long, value_enum, default_value_t = ThresholdSplit::Train)]
    pub threshold_split: ThresholdSplit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ThresholdSplit {
    Train,
    Test,
}

/// Scores the test split. The Youden threshold is picked on the chosen split
/// (training by default) and then applied to the test split.
pub fn run(args: &EvaluateArgs, paths: &Paths, rec: &mut Recorder) -> CliResult<()> {
    if args.n_boot < 100 {
        return Err(CliError::Usage("--n-boot must be at least 100".into()));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Usage("--level must be in (0, 1)".into()));
    }
    rec.seed("bootstrap", args.seed);
    let data = DataDir::load(&paths.resolve(&args.data), rec)?;
    let model = data::load_model(&paths.resolve(&args.model), rec)?;
    model.check_schema(data.dataset.schema())?;

    let train = data.dataset.subset(&data.train_rows()?);
    let test = data.dataset.subset(&data.test_rows()?);
    let train_scores = model.class_probabilities(train.rows(), 1)?;
    let test_scores = model.class_probabilities(test.rows(), 1)?;
    let opts = EvalOptions { n_boot: args.n_boot, level: args.level, seed: args.seed };
    let report = EvalReport::compute(
        &test_scores,
        test.require_labels()?,
        &opts,
        "test",
        match args.threshold_split {
            ThresholdSplit::Train => Some(("train", &train_scores[..], train.require_labels()?)),
            ThresholdSplit::Test => None,
        },
    )?;

    let out = paths.resolve(&args.out);
    data::ensure_dir(&out)?;
    data::write_json(&out.join(EVAL_JSON), &report, rec)?;
    let p = out.join(ROC_CSV);
    report.write_roc_csv(BufWriter::new(File::create(&p)?))?;
    rec.output(&p);
    let p = out.join(IMPORTANCE_CSV);
    write_importance_csv(&model.feature_importance(), BufWriter::new(File::create(&p)?))?;
    rec.output(&p);
    rec.manifest_dir = Some(out);
    println!(
        "test auroc {:.4} ({:.0}% CI {:.4}-{:.4}); threshold {:.4}: sensitivity {:.3}, specificity {:.3}",
        report.auroc,
        report.level * 100.0,
        report.ci_low,
        report.ci_high,
        report.threshold,
        report.sensitivity,
        report.specificity
    );
    Ok(())
}
