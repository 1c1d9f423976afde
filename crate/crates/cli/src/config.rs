//! Run configuration: file schema, compiled-in presets and validation.
//!
//! Files are TOML, or JSON when the extension is `.json`. A `meta.json`
//! written by a previous run is accepted as well and reproduces that run.

use std::path::{Path, PathBuf};

use prodline::{InflowProfile, InitialWorkload, ModelParams64, Scenario64, SimError, Status};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const PRESETS: [&str; 2] = ["paper-g1", "paper-g2"];

/// Model parameters as they appear in a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub v: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub lambda_10_min: Option<f64>,
    pub lambda_10_max: Option<f64>,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub lambda_01: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflowSegment {
    pub start: f64,
    pub rate: f64,
}

/// Either a constant or a list of piecewise-constant segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InflowSpec {
    Constant(f64),
    Piecewise(Vec<InflowSegment>),
}

/// Either a uniform value or one value per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Uniform(f64),
    Cells(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub horizon: Option<f64>,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub q0: Option<f64>,
    pub r0: Option<u8>,
    pub rho0: Option<DensitySpec>,
    pub inflow: Option<InflowSpec>,
}

/// On-disk schema. Every field is optional; missing values come from the
/// preset or from defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub n_samples: Option<u64>,
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub output_thinning: Option<usize>,
    pub w0_zero: Option<bool>,
    pub single_trajectory: Option<bool>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
}

/// `meta.json` written next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    pub config: ConfigFile,
    pub master_seed: u64,
    pub wall_time_seconds: f64,
    pub version: String,
}

/// Fully resolved and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub params: ModelParams64,
    pub inflow: InflowSpec,
    pub rho0: Vec<f64>,
    pub q0: f64,
    pub r0: Status,
    pub horizon: f64,
    pub dx: f64,
    pub dt: f64,
    pub w0_zero: bool,
    pub n_samples: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub output_thinning: usize,
    pub single_trajectory: bool,
}

/// Values of a preset, as a config file.
pub fn preset(name: &str) -> Option<ConfigFile> {
    let inflow = match name {
        "paper-g1" => 0.5,
        "paper-g2" => 1.5,
        _ => return None,
    };
    Some(ConfigFile {
        preset: Some(name.to_owned()),
        params: ParamsSection {
            v: Some(1.0),
            a: Some(0.0),
            b: Some(1.0),
            c: Some(2.0),
            lambda_10_min: Some(0.1),
            lambda_10_max: Some(2.0),
            theta1: Some(0.1),
            theta2: Some(5.0),
            lambda_01: Some(2.0),
        },
        scenario: ScenarioSection {
            horizon: Some(50.0),
            dx: Some(0.1),
            dt: Some(0.1),
            q0: Some(0.0),
            r0: Some(1),
            rho0: Some(DensitySpec::Uniform(0.0)),
            inflow: Some(InflowSpec::Constant(inflow)),
        },
        ..ConfigFile::default()
    })
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($field:ident),+) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )+
    };
}

impl ConfigFile {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &ConfigFile) {
        overlay!(
            self,
            other,
            preset,
            n_samples,
            master_seed,
            workers,
            output_dir,
            output_thinning,
            w0_zero,
            single_trajectory
        );
        overlay!(
            self.params,
            other.params,
            v,
            a,
            b,
            c,
            lambda_10_min,
            lambda_10_max,
            theta1,
            theta2,
            lambda_01
        );
        overlay!(
            self.scenario,
            other.scenario,
            horizon,
            dx,
            dt,
            q0,
            r0,
            rho0,
            inflow
        );
    }

    /// Expands the preset named in the file (if any) underneath it.
    fn with_preset(&self) -> Result<ConfigFile, CliError> {
        let Some(name) = &self.preset else {
            return Ok(self.clone());
        };
        let mut base = preset(name).ok_or_else(|| CliError::Validation {
            key: "preset".into(),
            reason: format!("unknown preset `{name}`, expected one of {PRESETS:?}"),
        })?;
        base.overlay(self);
        Ok(base)
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = self.with_preset()?;
        let p = &file.params;
        let s = &file.scenario;
        let params = ModelParams64 {
            velocity: required("params.v", p.v)?,
            a: required("params.a", p.a)?,
            b: required("params.b", p.b)?,
            max_capacity: required("params.c", p.c)?,
            lambda_10_min: required("params.lambda_10_min", p.lambda_10_min)?,
            lambda_10_max: required("params.lambda_10_max", p.lambda_10_max)?,
            theta1: required("params.theta1", p.theta1)?,
            theta2: required("params.theta2", p.theta2)?,
            lambda_01: required("params.lambda_01", p.lambda_01)?,
        };
        params.validate().map_err(prefix_key)?;
        let dx = required("scenario.dx", s.dx)?;
        let rho0 = match required("scenario.rho0", s.rho0.clone())? {
            DensitySpec::Cells(cells) => cells,
            DensitySpec::Uniform(value) => {
                let cells = ((params.b - params.a) / dx).round();
                if !(cells >= 1.0 && cells.is_finite()) {
                    return Err(CliError::Validation {
                        key: "scenario.dx".into(),
                        reason: format!("(b - a)/dx = {cells} is not a positive cell count"),
                    });
                }
                vec![value; cells as usize]
            }
        };
        let r0 = required("scenario.r0", s.r0)?;
        let r0 = Status::from_bit(r0).ok_or_else(|| CliError::Validation {
            key: "scenario.r0".into(),
            reason: format!("must be 0 or 1, got {r0}"),
        })?;
        let positive_count = |key: &str, value: Option<usize>, default: usize| {
            let v = value.unwrap_or(default);
            if v == 0 {
                Err(CliError::Validation {
                    key: key.into(),
                    reason: "must be >= 1".into(),
                })
            } else {
                Ok(v)
            }
        };
        let config = RunConfig {
            preset: file.preset.clone(),
            params,
            inflow: required("scenario.inflow", s.inflow.clone())?,
            rho0,
            q0: required("scenario.q0", s.q0)?,
            r0,
            horizon: required("scenario.horizon", s.horizon)?,
            dx,
            dt: required("scenario.dt", s.dt)?,
            w0_zero: file.w0_zero.unwrap_or(false),
            n_samples: match file.n_samples.unwrap_or(10_000) {
                0 => {
                    return Err(CliError::Validation {
                        key: "n_samples".into(),
                        reason: "must be >= 1".into(),
                    })
                }
                n => n,
            },
            master_seed: file.master_seed.unwrap_or(0),
            workers: positive_count("workers", file.workers, 1)?,
            output_dir: file
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("out")),
            output_thinning: positive_count("output_thinning", file.output_thinning, 1)?,
            single_trajectory: file.single_trajectory.unwrap_or(false),
        };
        config.scenario()?.validate().map_err(prefix_key)?;
        Ok(config)
    }
}

fn required<T>(key: &str, value: Option<T>) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Validation {
        key: key.into(),
        reason: "missing (set it or choose a preset)".into(),
    })
}

/// Maps model-level field names onto config key paths.
fn prefix_key(err: SimError) -> CliError {
    match err {
        SimError::InvalidParameter { key, reason } => {
            let section = if [
                "v",
                "a",
                "b",
                "c",
                "lambda_10_min",
                "lambda_10_max",
                "theta1",
                "theta2",
                "lambda_01",
            ]
            .contains(&key.as_str())
            {
                "params"
            } else {
                "scenario"
            };
            CliError::Validation {
                key: format!("{section}.{key}"),
                reason,
            }
        }
        SimError::Cfl { v_dt, dx } => CliError::Cfl { v_dt, dx },
        other => CliError::Validation {
            key: "scenario".into(),
            reason: other.to_string(),
        },
    }
}

impl RunConfig {
    pub fn scenario(&self) -> Result<Scenario64, CliError> {
        let inflow = match &self.inflow {
            InflowSpec::Constant(rate) => InflowProfile::constant(*rate),
            InflowSpec::Piecewise(segments) => {
                InflowProfile::piecewise(segments.iter().map(|s| (s.start, s.rate)).collect())
                    .map_err(prefix_key)?
            }
        };
        Ok(Scenario64 {
            params: self.params,
            inflow,
            rho0: self.rho0.clone(),
            q0: self.q0,
            r0: self.r0,
            horizon: self.horizon,
            dx: self.dx,
            dt: self.dt,
            initial_workload: if self.w0_zero {
                InitialWorkload::Zero
            } else {
                InitialWorkload::InitialMass
            },
        })
    }

    /// Fully explicit file form; resolving it yields `self` again.
    pub fn to_file(&self) -> ConfigFile {
        let p = &self.params;
        ConfigFile {
            preset: self.preset.clone(),
            n_samples: Some(self.n_samples),
            master_seed: Some(self.master_seed),
            workers: Some(self.workers),
            output_dir: Some(self.output_dir.clone()),
            output_thinning: Some(self.output_thinning),
            w0_zero: Some(self.w0_zero),
            single_trajectory: Some(self.single_trajectory),
            params: ParamsSection {
                v: Some(p.velocity),
                a: Some(p.a),
                b: Some(p.b),
                c: Some(p.max_capacity),
                lambda_10_min: Some(p.lambda_10_min),
                lambda_10_max: Some(p.lambda_10_max),
                theta1: Some(p.theta1),
                theta2: Some(p.theta2),
                lambda_01: Some(p.lambda_01),
            },
            scenario: ScenarioSection {
                horizon: Some(self.horizon),
                dx: Some(self.dx),
                dt: Some(self.dt),
                q0: Some(self.q0),
                r0: Some(self.r0.bit()),
                rho0: Some(DensitySpec::Cells(self.rho0.clone())),
                inflow: Some(self.inflow.clone()),
            },
        }
    }
}

/// Parses a config file (TOML, JSON, or a previous run's `meta.json`)
/// without resolving it.
pub fn read_config_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse {
        path: path.to_owned(),
        reason: e.to_string(),
    })?;
    let parse_err = |reason: String| CliError::Parse {
        path: path.to_owned(),
        reason,
    };
    if path.extension().is_some_and(|ext| ext == "json") {
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        if value.get("config").is_some() {
            let meta: RunMeta =
                serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
            Ok(meta.config)
        } else {
            serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))
        }
    } else {
        toml::from_str(&text).map_err(|e| parse_err(e.to_string()))
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    read_config_file(path)?.resolve()
}
