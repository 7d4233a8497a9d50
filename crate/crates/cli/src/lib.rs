//! The `recourse` command-line pipeline.
//!
//! Every run writes a manifest recording its effective arguments, seeds and
//! the hashes of the files it read and wrote; `recourse replay` re-executes a
//! manifest.

pub mod commands;
pub mod data;
pub mod error;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::commands::{evaluate, explain, serve, synth, train};
use crate::data::Paths;
use crate::error::{CliError, CliResult};
use crate::manifest::{hash_file, now_unix, sha256_hex, FileHash, Manifest, Recorder};

/// Environment variable giving the base directory for relative paths.
pub const DATA_DIR_ENV: &str = "RECOURSE_DATA_DIR";

/// Exit code when a search finished without any valid counterfactual.
pub const EXIT_NO_COUNTERFACTUAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "recourse", version, about = "Counterfactual explanations for tabular risk models")]
pub struct Cli {
    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Manifest output path (default: next to the command's outputs).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic cohort and its featurized table.
    Synth(synth::SynthArgs),
    /// Cross-validate and fit the gradient-boosted model.
    Train(train::TrainArgs),
    /// Held-out discrimination, threshold and feature importance.
    Evaluate(evaluate::EvaluateArgs),
    /// Search counterfactuals for one patient.
    Explain(explain::ExplainArgs),
    /// Run the HTTP API.
    Serve(serve::ServeArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Explain(_) => "explain",
            Command::Serve(_) => "serve",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Fail unless every output hashes as recorded.
    #[arg(long)]
    pub check: bool,
}

/// Runs the CLI on full argv (program name first) and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString>,
{
    let argv: Vec<String> = argv
        .into_iter()
        .map(|s| s.into().to_string_lossy().into_owned())
        .collect();
    let base = std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .or_else(|| std::env::current_dir().ok())
        .unwrap_or_else(|| PathBuf::from("."));
    match run_in(&argv, &base) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn run_in(argv: &[String], base: &Path) -> CliResult<i32> {
    let program = argv.first().cloned().unwrap_or_else(|| "recourse".into());
    let args = argv.get(1..).unwrap_or_default();
    let paths = Paths { base: base.to_path_buf() };

    let (mut args, config_path) = strip_config(args)?;
    let config_file = match &config_path {
        Some(p) => {
            let p = paths.resolve(p);
            let text = std::fs::read_to_string(&p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let value: Value =
                serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            expand_config(&mut args, &value)?;
            Some(FileHash { path: p.display().to_string(), sha256: sha256_hex(text.as_bytes()) })
        }
        None => None,
    };

    let cli = match Cli::try_parse_from(std::iter::once(program.clone()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return Ok(code);
        }
    };

    if let Command::Replay(r) = &cli.command {
        return replay(&program, r, &paths);
    }

    let mut rec = Recorder::default();
    let outcome = with_threads(cli.threads, || dispatch(&cli.command, &paths, &mut rec))??;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: cli.command.name().to_string(),
        config_hash: sha256_hex(serde_json::to_string(&args)?.as_bytes()),
        argv: args,
        base_dir: paths.base.display().to_string(),
        config_file,
        seeds: rec.seeds.clone(),
        threads: cli.threads,
        inputs: hash_all(&rec.inputs)?,
        outputs: hash_all(&rec.outputs)?,
        notes: rec.notes.clone(),
        created_unix: now_unix(),
    };
    let manifest_path = match (&cli.manifest, &rec.manifest_dir) {
        (Some(p), _) => Some(paths.resolve(p)),
        (None, Some(dir)) => Some(dir.join(format!("manifest.{}.json", manifest.subcommand))),
        (None, None) => None,
    };
    if let Some(p) = manifest_path {
        manifest.write(&p)?;
        log::info!("manifest written to {}", p.display());
    }
    Ok(outcome)
}

fn dispatch(command: &Command, paths: &Paths, rec: &mut Recorder) -> CliResult<i32> {
    match command {
        Command::Synth(a) => synth::run(a, paths, rec).map(|_| 0),
        Command::Train(a) => train::run(a, paths, rec).map(|_| 0),
        Command::Evaluate(a) => evaluate::run(a, paths, rec).map(|_| 0),
        Command::Explain(a) => {
            explain::run(a, paths, rec).map(|found| if found { 0 } else { EXIT_NO_COUNTERFACTUAL })
        }
        Command::Serve(a) => serve::run(a, paths, rec).map(|_| 0),
        Command::Replay(_) => unreachable!("replay is handled before dispatch"),
    }
}

fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> CliResult<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Data(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn hash_all(paths: &[PathBuf]) -> CliResult<Vec<FileHash>> {
    let mut seen = std::collections::BTreeSet::new();
    paths
        .iter()
        .filter(|p| seen.insert(p.to_path_buf()))
        .map(|p| hash_file(p))
        .collect()
}

fn replay(program: &str, args: &ReplayArgs, paths: &Paths) -> CliResult<i32> {
    let recorded = Manifest::read(&paths.resolve(&args.manifest))?;
    if recorded.subcommand == "replay" {
        return Err(CliError::Usage("cannot replay a replay manifest".into()));
    }
    let argv: Vec<String> = std::iter::once(program.to_string()).chain(recorded.argv.iter().cloned()).collect();
    let code = run_in(&argv, Path::new(&recorded.base_dir))?;
    if args.check && code == 0 {
        let mut mismatched = Vec::new();
        for out in &recorded.outputs {
            let now = hash_file(Path::new(&out.path))?;
            if now.sha256 != out.sha256 {
                mismatched.push(out.path.clone());
            }
        }
        if !mismatched.is_empty() {
            return Err(CliError::Data(format!("replay outputs differ: {}", mismatched.join(", "))));
        }
        println!("replay reproduced {} outputs", recorded.outputs.len());
    }
    Ok(code)
}

/// Removes `--config PATH` / `--config=PATH` from the arguments.
fn strip_config(args: &[String]) -> CliResult<(Vec<String>, Option<PathBuf>)> {
    let mut out = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let p = it.next().ok_or_else(|| CliError::Usage("--config needs a path".into()))?;
            config = Some(PathBuf::from(p));
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            out.push(a.clone());
        }
    }
    Ok((out, config))
}

/// Appends `--key value` for each config entry not already given on the
/// command line. Keys may use `_` or `-`.
fn expand_config(args: &mut Vec<String>, config: &Value) -> CliResult<()> {
    let obj = config
        .as_object()
        .ok_or_else(|| CliError::Usage("config file must hold a JSON object".into()))?;
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        let given = args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue;
        }
        match value {
            Value::Bool(true) => args.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar_arg).collect::<CliResult<_>>()?;
                args.push(flag);
                args.push(parts.join(","));
            }
            v => {
                args.push(flag);
                args.push(scalar_arg(v)?);
            }
        }
    }
    Ok(())
}

fn scalar_arg(v: &Value) -> CliResult<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(CliError::Usage(format!("unsupported config value {other}"))),
    }
}
