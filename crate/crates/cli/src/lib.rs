//! Command-line front end: resolves a run configuration, runs an ensemble
//! or a single trajectory, and writes CSV/JSON results.

pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use prodline::pdmp::{output_grid, simulate_on_grid, trajectory_rng};
use prodline::{run_ensemble, EnsembleConfig, SimError};
use thiserror::Error;

pub use config::{load_config, preset, ConfigFile, RunConfig, RunMeta};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {}: {reason}", path.display())]
    Parse { path: PathBuf, reason: String },

    #[error("invalid config `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("CFL condition violated: v * dt = {v_dt} > dx = {dx}")]
    Cfl { v_dt: f64, dx: f64 },

    #[error("I/O error on {}: {reason}", path.display())]
    Io { path: PathBuf, reason: String },

    #[error("simulation failed: {0}")]
    Simulation(#[from] SimError),
}

impl CliError {
    /// 1 for configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Cfl { .. } => 1,
            CliError::Io { .. } | CliError::Simulation(_) => 2,
        }
    }
}

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub wall_time_seconds: f64,
}

/// Runs `config` and writes its outputs into `config.output_dir`.
///
/// Ensemble runs write `moments.csv`, `histogram.csv` and `meta.json`;
/// single-trajectory runs write `trajectory.csv`, `jumps.csv` and `meta.json`.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let scenario = config.scenario()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.clone(),
        reason: e.to_string(),
    })?;

    let mut outputs: Vec<(&str, String)> = Vec::new();
    if config.single_trajectory {
        let grid = output_grid(&scenario, config.output_thinning);
        let record = simulate_on_grid(&scenario, &grid, trajectory_rng(config.master_seed, 0))?;
        outputs.push(("trajectory.csv", output::trajectory_csv(&record)));
        outputs.push(("jumps.csv", output::jumps_csv(&record.jumps)));
    } else {
        let ensemble = EnsembleConfig::new(config.n_samples, config.master_seed)
            .workers(config.workers)
            .output_stride(config.output_thinning);
        let stats = run_ensemble(&scenario, &ensemble)?;
        outputs.push(("moments.csv", output::moments_csv(&stats)));
        outputs.push(("histogram.csv", output::histogram_csv(&stats)));
    }

    let mut files = Vec::new();
    for (name, contents) in &outputs {
        output::write_file(dir, name, contents)?;
        files.push(dir.join(name));
    }
    let wall_time_seconds = started.elapsed().as_secs_f64();
    let meta = RunMeta {
        config: config.to_file(),
        master_seed: config.master_seed,
        wall_time_seconds,
        version: env!("CARGO_PKG_VERSION").to_owned(),
    };
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    output::write_file(dir, "meta.json", &json)?;
    files.push(dir.join("meta.json"));
    Ok(RunSummary {
        files,
        wall_time_seconds,
    })
}
