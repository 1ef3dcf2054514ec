use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use qbtransfer_cli::{
    read_config, run_with_workers, write_outputs, CliResult, Format, Mode, Overrides, Results,
};

#[derive(Parser, Debug)]
#[command(
    name = "simulate",
    version,
    about = "Charger-to-battery transfer in the two-qubit Rabi model"
)]
struct Args {
    /// JSON experiment description.
    config: PathBuf,
    /// Overrides `mode`.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown mode `{s}` (spectrum, evolve, sweep, jump)"))
}

fn execute(args: &Args) -> CliResult<bool> {
    let overrides = Overrides {
        mode: args.mode,
        out: args.out.clone(),
        workers: args.workers,
        format: args.format,
    };
    let cfg = read_config(&args.config)?
        .with_overrides(&overrides)
        .resolve()?;
    let workers = cfg.workers.unwrap_or_else(rayon::current_num_threads);
    let start = Instant::now();
    let report = run_with_workers(&cfg)?;
    let wall = start.elapsed().as_secs_f64();
    for f in &report.failures {
        log::warn!("{} failed at g = {:?}: {}", f.stage, f.g, f.error);
    }
    let paths = write_outputs(&report, &cfg, workers, wall)?;
    for p in &paths {
        println!("{}", p.display());
    }
    let jump_missing = matches!(report.results, Results::Jump { jump: None, .. });
    Ok(!jump_missing)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: no power jump located; sweep data written");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
