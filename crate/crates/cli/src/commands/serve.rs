use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Args;
use recourse_service::AppState;

use crate::data::{self, DataDir, Paths};
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub eval: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Directory of static files (the explorer build) served at `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Per-request search timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
}

pub fn run(args: &ServeArgs, paths: &Paths, rec: &mut Recorder) -> CliResult<()> {
    if !(args.timeout > 0.0 && args.timeout.is_finite()) {
        return Err(CliError::Usage("--timeout must be a positive number of seconds".into()));
    }
    let data = DataDir::load(&paths.resolve(&args.data), rec)?;
    let model = data::load_model(&paths.resolve(&args.model), rec)?;
    let mut state = AppState::new(model, data.dataset)?;
    if let Some(e) = &args.eval {
        let report = data::load_eval(&paths.resolve(e), rec)?;
        state.default_p_max = report.threshold.next_down();
        state.metrics = Some(report);
    }
    state.timeout = Duration::from_secs_f64(args.timeout);
    let static_dir = args.static_dir.as_ref().map(|p| paths.resolve(p));
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Data(e.to_string()))?;
    println!("serving on http://{}", args.addr);
    rt.block_on(recourse_service::serve(args.addr, Arc::new(state), static_dir))
        .map_err(|e| CliError::Data(format!("server: {e}")))
}
