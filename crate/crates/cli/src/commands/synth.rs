use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use recourse_core::cohort::{
    cohort_dataset, generate_cohort, match_controls, write_jsonl, CohortConfig, MatchConfig, WindowSpec,
};
use recourse_core::gbm::train_test_split;
use recourse_core::tabular::{write_csv, SchemaFile};
use recourse_core::Dataset;
use serde::Serialize;

use crate::data::{self, Paths, Split};
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory for the cohort files.
    #[arg(long)]
    pub out: PathBuf,
    /// Patients generated before matching.
    #[arg(long, default_value_t = recourse_core::cohort::DEFAULT_N)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Controls per case; 0 keeps the whole generated population.
    #[arg(long, default_value_t = 6)]
    pub match_ratio: usize,
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    /// JSON generator settings (intercept, coefficients, noise).
    #[arg(long)]
    pub cohort_config: Option<PathBuf>,
    /// JSON window specification.
    #[arg(long)]
    pub windows: Option<PathBuf>,
}

#[derive(Serialize)]
struct MatchingSummary {
    ratio: usize,
    cases: usize,
    controls: usize,
    under_matched: Vec<String>,
}

pub fn run(args: &SynthArgs, paths: &Paths, rec: &mut Recorder) -> CliResult<()> {
    if !(args.test_fraction > 0.0 && args.test_fraction < 1.0) {
        return Err(CliError::Usage("--test-fraction must be in (0, 1)".into()));
    }
    let mut cfg: CohortConfig = match &args.cohort_config {
        Some(p) => data::read_json(&paths.resolve(p), rec)?,
        None => CohortConfig::default(),
    };
    cfg.n = args.n;
    cfg.seed = args.seed;
    let spec: WindowSpec = match &args.windows {
        Some(p) => data::read_json(&paths.resolve(p), rec)?,
        None => WindowSpec::default(),
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    rec.seed("cohort", cfg.seed);
    rec.seed("split", args.seed);

    let cohort = generate_cohort(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;

    // matching precedes the train/test split
    let keep: Vec<usize> = if args.match_ratio > 0 {
        let (cases, controls): (Vec<usize>, Vec<usize>) = (0..cohort.labels.len()).partition(|&i| cohort.labels[i] == 1);
        let pick = |idx: &[usize]| idx.iter().map(|&i| cohort.timelines[i].clone()).collect::<Vec<_>>();
        let m = match_controls(&pick(&cases), &pick(&controls), args.match_ratio, &MatchConfig::default())?;
        let mut keep: Vec<usize> = cases.clone();
        keep.extend(m.matched_pool().into_iter().map(|k| controls[k]));
        keep.sort_unstable();
        let summary = MatchingSummary {
            ratio: args.match_ratio,
            cases: cases.len(),
            controls: m.matched_pool().len(),
            under_matched: m.under_matched.iter().map(|&c| cohort.timelines[cases[c]].patient_id.clone()).collect(),
        };
        println!(
            "matched {} cases to {} controls (ratio 1:{}, {} under-matched)",
            summary.cases,
            summary.controls,
            args.match_ratio,
            summary.under_matched.len()
        );
        data::ensure_dir(&paths.resolve(&args.out))?;
        data::write_json(&paths.resolve(&args.out).join(data::MATCHING_JSON), &summary, rec)?;
        keep
    } else {
        (0..cohort.labels.len()).collect()
    };
    rec.note("order", "match-then-split");

    let timelines: Vec<_> = keep.iter().map(|&i| cohort.timelines[i].clone()).collect();
    let labels: Vec<usize> = keep.iter().map(|&i| cohort.labels[i]).collect();
    let dataset: Dataset = cohort_dataset(&timelines, Some(labels.clone()), &spec)?;
    let (train, test) = train_test_split(&labels, args.test_fraction, args.seed)?;
    let split = Split {
        test_fraction: args.test_fraction,
        seed: args.seed,
        train: train.iter().map(|&i| dataset.row_id(i)).collect(),
        test: test.iter().map(|&i| dataset.row_id(i)).collect(),
    };

    let out = paths.resolve(&args.out);
    data::ensure_dir(&out)?;
    let p = out.join(data::TIMELINES_JSONL);
    write_jsonl(&timelines, BufWriter::new(File::create(&p)?))?;
    rec.output(&p);
    let p = out.join(data::COHORT_CSV);
    write_csv(&dataset, BufWriter::new(File::create(&p)?), Some(data::LABEL_COLUMN), Some(data::ID_COLUMN))?;
    rec.output(&p);
    let decl = SchemaFile::from_schema(dataset.schema(), Some(data::LABEL_COLUMN), Some(data::ID_COLUMN));
    data::write_json(&out.join(data::SCHEMA_JSON), &decl, rec)?;
    data::write_json(&out.join(data::SPLIT_JSON), &split, rec)?;
    rec.manifest_dir = Some(out);

    let pos = labels.iter().filter(|&&y| y == 1).count();
    println!(
        "cohort: {} patients, {} features, {} positive; split {} train / {} test",
        dataset.n_rows(),
        dataset.n_features(),
        pos,
        split.train.len(),
        split.test.len()
    );
    Ok(())
}
