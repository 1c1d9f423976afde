use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use prodline_cli::config::{read_config_file, ConfigFile, PRESETS};
use prodline_cli::CliError;

/// Monte Carlo simulator for a production line with workload-dependent
/// machine failures.
#[derive(Debug, Parser)]
#[command(name = "prodline", version)]
struct Args {
    /// TOML or JSON config file (a previous run's meta.json also works).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Compiled-in experiment: paper-g1 (inflow 0.5) or paper-g2 (inflow 1.5).
    #[arg(long)]
    preset: Option<String>,
    /// Number of Monte Carlo samples.
    #[arg(long)]
    samples: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulate one path and write trajectory.csv and jumps.csv.
    #[arg(long)]
    single_trajectory: bool,
    /// Start with zero workload instead of the initial work in progress.
    #[arg(long)]
    w0_zero: bool,
    /// Keep every n-th point of the time grid in the outputs.
    #[arg(long)]
    thin: Option<usize>,
}

impl Args {
    fn to_overrides(&self) -> ConfigFile {
        ConfigFile {
            preset: self.preset.clone(),
            n_samples: self.samples,
            master_seed: self.seed,
            workers: self.workers,
            output_dir: self.out.clone(),
            output_thinning: self.thin,
            w0_zero: self.w0_zero.then_some(true),
            single_trajectory: self.single_trajectory.then_some(true),
            ..ConfigFile::default()
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    if args.config.is_none() && args.preset.is_none() {
        return Err(CliError::Validation {
            key: "preset".into(),
            reason: format!("pass --config or --preset (one of {PRESETS:?})"),
        });
    }
    let mut file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => ConfigFile::default(),
    };
    file.overlay(&args.to_overrides());
    let config = file.resolve()?;
    let summary = prodline_cli::run(&config)?;
    for path in &summary.files {
        println!("wrote {}", path.display());
    }
    eprintln!("done in {:.2} s", summary.wall_time_seconds);
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
