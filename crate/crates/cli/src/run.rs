//! Executes a resolved configuration.

use qbtransfer::dynamics::{battery_energy_series, time_grid};
use qbtransfer::metrics::{
    evolve_from, jump_locator, sweep_g, JumpLocation, MetricsOptions, TransferMetrics,
};
use qbtransfer::spectrum::{analyze_spectrum, SpectrumResult, SweepOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Mode};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveSeries {
    pub times: Vec<f64>,
    /// One E_B(t) column per successful coupling.
    pub couplings: Vec<f64>,
    pub battery_energy: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Results {
    Spectrum(SpectrumResult),
    Evolve(EvolveSeries),
    Sweep {
        points: Vec<TransferMetrics>,
    },
    Jump {
        points: Vec<TransferMetrics>,
        jump: Option<JumpLocation>,
    },
}

/// A parameter point that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub g: Option<f64>,
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub results: Results,
    pub failures: Vec<Failure>,
}

fn failure(g: Option<f64>, stage: &str, e: impl ToString) -> Failure {
    Failure {
        g,
        stage: stage.to_string(),
        error: e.to_string(),
    }
}

fn metrics_options(cfg: &ExperimentConfig) -> MetricsOptions {
    MetricsOptions {
        dt: cfg.grid.dt,
        window: cfg.grid.window,
        ..MetricsOptions::default()
    }
}

fn run_spectrum(cfg: &ExperimentConfig) -> CliResult<RunReport> {
    let p = cfg.system_params(0.0);
    let cavity = cfg.cavity_spec().amplitudes(p.n_max)?;
    let opts = SweepOptions {
        k: cfg.grid.levels,
        ..SweepOptions::default()
    };
    let s = analyze_spectrum(&p, &cavity, &cfg.grid.couplings(), &opts)?;
    Ok(RunReport {
        results: Results::Spectrum(s),
        failures: Vec::new(),
    })
}

fn run_evolve(cfg: &ExperimentConfig) -> CliResult<RunReport> {
    let couplings = cfg.evolve_couplings();
    let t_end = couplings.iter().map(|&g| cfg.t_end(g)).fold(0.0, f64::max);
    let times = time_grid(t_end, cfg.grid.dt);
    let b = cfg.bath_params();
    let opts = metrics_options(cfg).evolve;
    let outcomes: Vec<(f64, qbtransfer::Result<Vec<f64>>)> = couplings
        .par_iter()
        .map(|&g| {
            let p = cfg.system_params(g);
            let series = cfg
                .cavity_spec()
                .amplitudes(p.n_max)
                .and_then(|c| evolve_from(&p, &b, &c, &times, &opts))
                .map(|rec| battery_energy_series(&rec, &p));
            (g, series)
        })
        .collect();
    let mut series = EvolveSeries {
        times,
        couplings: Vec::new(),
        battery_energy: Vec::new(),
    };
    let mut failures = Vec::new();
    for (g, outcome) in outcomes {
        match outcome {
            Ok(e) => {
                series.couplings.push(g);
                series.battery_energy.push(e);
            }
            Err(e) => failures.push(failure(Some(g), "evolve", e)),
        }
    }
    if series.couplings.is_empty() {
        return Err(CliError::TotalFailure);
    }
    Ok(RunReport {
        results: Results::Evolve(series),
        failures,
    })
}

fn run_sweep(cfg: &ExperimentConfig) -> CliResult<(Vec<TransferMetrics>, Vec<Failure>)> {
    let p = cfg.system_params(0.0);
    let cavity = cfg.cavity_spec().amplitudes(p.n_max)?;
    let points = sweep_g(
        &p,
        &cfg.bath_params(),
        &cavity,
        &cfg.grid.couplings(),
        &metrics_options(cfg),
    )?;
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for pt in points {
        match pt.outcome {
            Ok(m) => ok.push(m),
            Err(e) => failures.push(failure(Some(pt.g), "sweep", e)),
        }
    }
    if ok.is_empty() {
        return Err(CliError::TotalFailure);
    }
    Ok((ok, failures))
}

fn run_jump(cfg: &ExperimentConfig) -> CliResult<RunReport> {
    let (points, mut failures) = run_sweep(cfg)?;
    let p = cfg.system_params(0.0);
    let cavity = cfg.cavity_spec().amplitudes(p.n_max)?;
    let jump = match jump_locator(
        &points,
        &p,
        &cfg.bath_params(),
        &cavity,
        &metrics_options(cfg),
    ) {
        Ok(j) => Some(j),
        Err(e) => {
            failures.push(failure(None, "jump", e));
            None
        }
    };
    Ok(RunReport {
        results: Results::Jump { points, jump },
        failures,
    })
}

/// Runs the configured mode. Parallel work uses the current rayon pool.
pub fn run(cfg: &ExperimentConfig) -> CliResult<RunReport> {
    match cfg.mode {
        Mode::Spectrum => run_spectrum(cfg),
        Mode::Evolve => run_evolve(cfg),
        Mode::Sweep => {
            let (points, failures) = run_sweep(cfg)?;
            Ok(RunReport {
                results: Results::Sweep { points },
                failures,
            })
        }
        Mode::Jump => run_jump(cfg),
    }
}

/// [`run`] on a dedicated pool of `cfg.workers` threads, if set.
pub fn run_with_workers(cfg: &ExperimentConfig) -> CliResult<RunReport> {
    match cfg.workers {
        None => run(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Pool(e.to_string()))?
            .install(|| run(cfg)),
    }
}
