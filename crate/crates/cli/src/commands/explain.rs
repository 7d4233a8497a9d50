use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use recourse_core::cf::{generate, write_trace_csv, CounterfactualExport, HybridOptions, MocConfig, StageUsed};
use recourse_core::tabular::{instance_from_json, resolve_features};
use recourse_core::{CfQuery, Predictor};

use crate::data::{self, DataDir, Paths};
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluation report supplying the default upper band edge.
    #[arg(long)]
    pub eval: Option<PathBuf>,
    /// Patient id of the instance to explain.
    #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
    pub row: Option<String>,
    /// JSON file with an object of feature values.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub target_class: usize,
    #[arg(long, default_value_t = 0.0)]
    pub p_min: f64,
    /// Defaults to just below the stored Youden threshold.
    #[arg(long)]
    pub p_max: Option<f64>,
    /// Features that must not change.
    #[arg(long, value_delimiter = ',')]
    pub fix: Vec<String>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = recourse_core::cf::DEFAULT_M_MAX)]
    pub m_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub population: usize,
    #[arg(long, default_value_t = 60)]
    pub generations: usize,
    /// Wall-clock limit per search stage, in seconds.
    #[arg(long)]
    pub stage_budget: Option<f64>,
    /// Report JSON output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Compact per-counterfactual export.
    #[arg(long)]
    pub export: Option<PathBuf>,
    /// Per-generation MOC trace CSV (written only when MOC ran).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// Returns whether any counterfactual was found.
pub fn run(args: &ExplainArgs, paths: &Paths, rec: &mut Recorder) -> CliResult<bool> {
    let usage = |m: String| CliError::Usage(m);
    if args.k == 0 {
        return Err(usage("--k must be positive".into()));
    }
    if !(args.alpha > 0.0 && args.beta > 0.0) {
        return Err(usage("--alpha and --beta must be positive".into()));
    }
    if args.stage_budget.is_some_and(|b| !(b > 0.0 && b.is_finite())) {
        return Err(usage("--stage-budget must be a positive number of seconds".into()));
    }
    let data = DataDir::load(&paths.resolve(&args.data), rec)?;
    let model = data::load_model(&paths.resolve(&args.model), rec)?;
    let d = &data.dataset;
    model.check_schema(d.schema())?;

    let p_max = match (args.p_max, &args.eval) {
        (Some(p), _) => p,
        (None, Some(e)) => {
            // half-open [0, threshold): largest double below the threshold
            data::load_eval(&paths.resolve(e), rec)?.threshold.next_down()
        }
        (None, None) => return Err(usage("--p-max is required without --eval".into())),
    };
    if !(0.0 <= args.p_min && args.p_min < p_max && p_max <= 1.0) {
        return Err(usage(format!("probability band must satisfy 0 <= p_min < p_max <= 1, got [{}, {p_max}]", args.p_min)));
    }
    if args.target_class >= model.n_classes() {
        return Err(usage(format!("--target-class must be below {}", model.n_classes())));
    }
    let fixed = resolve_features(d.schema(), &args.fix).map_err(|e| usage(e.to_string()))?;

    let (x0, label) = match (&args.row, &args.instance) {
        (Some(id), _) => {
            let i = d.find_row(id).ok_or_else(|| CliError::Data(format!("unknown row id '{id}'")))?;
            (d.row(i).clone(), id.clone())
        }
        (None, Some(p)) => {
            let v: serde_json::Value = data::read_json(&paths.resolve(p), rec)?;
            (instance_from_json(d.schema(), &v)?, p.display().to_string())
        }
        (None, None) => unreachable!("clap requires one of --row and --instance"),
    };

    let query = CfQuery::new(x0, args.target_class, args.p_min, p_max)
        .with_fixed(fixed)
        .with_k(args.k)
        .with_weights(args.alpha, args.beta)
        .with_m_max(args.m_max)
        .with_seed(args.seed);
    let options = HybridOptions {
        moc: MocConfig { population: args.population, generations: args.generations, ..Default::default() },
        stage_budget: args.stage_budget.map(Duration::from_secs_f64),
        ..Default::default()
    };
    options.moc.validate().map_err(|e| usage(e.to_string()))?;
    rec.seed("search", args.seed);

    let mut report = generate(&query, &model, d, &options)?;
    rec.note("timings_ms", report.timings_ms.take());

    let out = paths.resolve(&args.out);
    if let Some(dir) = out.parent() {
        data::ensure_dir(dir)?;
        rec.manifest_dir = Some(dir.to_path_buf());
    }
    data::write_json(&out, &report, rec)?;
    if let Some(p) = &args.export {
        let export: Vec<CounterfactualExport<f64>> = report.counterfactuals.iter().map(|c| c.export()).collect();
        data::write_json(&paths.resolve(p), &export, rec)?;
    }
    if let Some(p) = &args.trace {
        if !report.moc_trace.is_empty() {
            let p = paths.resolve(p);
            write_trace_csv(&report.moc_trace, BufWriter::new(File::create(&p)?))?;
            rec.output(&p);
        }
    }

    println!(
        "{label}: risk {:.3}, band [{}, {:.4}], m = {}, stage {} ({} candidates)",
        report.p_origin, args.p_min, p_max, report.m, report.stage_used, report.candidates_evaluated
    );
    for cf in &report.counterfactuals {
        let changes: Vec<String> = cf.changes.iter().map(|c| format!("{}: {} -> {}", c.feature, c.from, c.to)).collect();
        println!("  {:.3} -> {:.3}  score {:.3}  [{}]", cf.p_origin, cf.p_target, cf.score, changes.join("; "));
    }
    Ok(report.stage_used != StageUsed::None)
}
