//! Benchmark configuration: filter roster, scenario and noise files, and
//! run settings, loaded from TOML.

use crate::dynamics::{Scenario, ScenarioStage};
use crate::filters::BasisMode;
use crate::sensors::{GaussianMixture, MeasurementNoise, SensorError};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("unknown filter kind {0:?}")]
    UnknownFilter(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

/// The six runnable filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterKind {
    #[serde(rename = "UKF")]
    Ukf,
    #[serde(rename = "CKF")]
    Ckf,
    #[serde(rename = "PCKF")]
    Pckf,
    #[serde(rename = "MC-UKF")]
    McUkf,
    #[serde(rename = "MC-CKF")]
    McCkf,
    #[serde(rename = "MC-PCKF")]
    McPckf,
}

impl FilterKind {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s.to_ascii_uppercase().as_str() {
            "UKF" => Ok(FilterKind::Ukf),
            "CKF" => Ok(FilterKind::Ckf),
            "PCKF" => Ok(FilterKind::Pckf),
            "MC-UKF" | "MCUKF" => Ok(FilterKind::McUkf),
            "MC-CKF" | "MCCKF" => Ok(FilterKind::McCkf),
            "MC-PCKF" | "MCPCKF" => Ok(FilterKind::McPckf),
            other => Err(ConfigError::UnknownFilter(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Ukf => "UKF",
            FilterKind::Ckf => "CKF",
            FilterKind::Pckf => "PCKF",
            FilterKind::McUkf => "MC-UKF",
            FilterKind::McCkf => "MC-CKF",
            FilterKind::McPckf => "MC-PCKF",
        }
    }

    pub fn is_mc(&self) -> bool {
        matches!(self, FilterKind::McUkf | FilterKind::McCkf | FilterKind::McPckf)
    }
}

/// One configured filter instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Kernel bandwidth; meaningful for the correntropy variants only.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Unscented spread parameter; defaults to `3 - n`.
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Hermite normalization; defaults to the run-level setting.
    #[serde(default)]
    pub basis: Option<BasisMode>,
}

impl FilterSpec {
    pub fn of(kind: FilterKind) -> Self {
        FilterSpec { kind, sigma: None, kappa: None, basis: None }
    }

    pub fn with_sigma(kind: FilterKind, sigma: f64) -> Self {
        FilterSpec { kind, sigma: Some(sigma), kappa: None, basis: None }
    }

    /// Label carrying the bandwidth for correntropy filters, used in
    /// report headers.
    pub fn label(&self) -> String {
        match (self.kind.is_mc(), self.sigma) {
            (true, Some(s)) => format!("{}(s={s})", self.kind.name()),
            _ => self.kind.name().to_string(),
        }
    }
}

/// Which root-mean-square formula the reports use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RmseForm {
    /// Ensemble mean of the absolute error.
    #[default]
    Printed,
    /// Square root of the ensemble mean squared error.
    Conventional,
}

/// Full benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Stage schedule file; the built-in reference schedule if absent.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    /// Measurement noise file; the built-in reference mixtures if absent.
    #[serde(default)]
    pub noise: Option<PathBuf>,
    pub filters: Vec<FilterSpec>,
    #[serde(default = "default_mc_runs")]
    pub mc_runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_aps_cutoff")]
    pub aps_cutoff: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub rmse_form: RmseForm,
    #[serde(default)]
    pub basis: BasisMode,
    /// Truth integration step in seconds.
    #[serde(default = "default_dt_truth")]
    pub dt_truth: f64,
}

fn default_mc_runs() -> usize {
    25
}

fn default_aps_cutoff() -> f64 {
    200.0
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_dt_truth() -> f64 {
    0.01
}

impl RunConfig {
    /// Benchmark roster of the comparison: the three base filters plus
    /// their correntropy versions at both bandwidths.
    pub fn reference(seed: u64) -> Self {
        let mut filters = vec![
            FilterSpec::of(FilterKind::Pckf),
            FilterSpec::of(FilterKind::Ckf),
            FilterSpec::of(FilterKind::Ukf),
        ];
        for sigma in [0.5, 2.0] {
            filters.push(FilterSpec::with_sigma(FilterKind::McPckf, sigma));
            filters.push(FilterSpec::with_sigma(FilterKind::McCkf, sigma));
            filters.push(FilterSpec::with_sigma(FilterKind::McUkf, sigma));
        }
        RunConfig {
            scenario: None,
            noise: None,
            filters,
            mc_runs: default_mc_runs(),
            seed,
            aps_cutoff: default_aps_cutoff(),
            out_dir: default_out_dir(),
            rmse_form: RmseForm::default(),
            basis: BasisMode::default(),
            dt_truth: default_dt_truth(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mc_runs == 0 {
            return Err(ConfigError::Invalid("mc_runs must be at least 1".into()));
        }
        if self.filters.is_empty() {
            return Err(ConfigError::Invalid("no filters configured".into()));
        }
        if self.dt_truth <= 0.0 || self.dt_truth > 1.0 {
            return Err(ConfigError::Invalid("dt_truth must be in (0, 1]".into()));
        }
        for f in &self.filters {
            if f.kind.is_mc() && f.sigma.is_none() {
                return Err(ConfigError::Invalid(format!(
                    "{} requires a sigma",
                    f.kind.name()
                )));
            }
        }
        Ok(())
    }
}

/// On-disk stage schedule; angular rates are listed in deg/s.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub stages: Vec<ScenarioStageFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioStageFile {
    pub t_start: f64,
    pub t_end: f64,
    pub accel_ned: [f64; 3],
    pub rates_deg: [f64; 3],
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ScenarioFile = toml::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let stages = file
        .stages
        .into_iter()
        .map(|s| ScenarioStage {
            t_start: s.t_start,
            t_end: s.t_end,
            accel_ned: s.accel_ned,
            rates: s.rates_deg.map(|r| r.to_radians()),
        })
        .collect();
    Ok(Scenario::new(stages)?)
}

/// On-disk mixture description: `[[weight, mean, std], ...]` per
/// channel. Angle channels carry a `_deg` suffix and are converted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseFile {
    pub vel_north: Vec<[f64; 3]>,
    pub vel_east: Vec<[f64; 3]>,
    pub vel_down: Vec<[f64; 3]>,
    pub depth: Vec<[f64; 3]>,
    pub roll_deg: Vec<[f64; 3]>,
    pub pitch_deg: Vec<[f64; 3]>,
    pub yaw_deg: Vec<[f64; 3]>,
    pub lat_deg: Vec<[f64; 3]>,
    pub lon_deg: Vec<[f64; 3]>,
}

fn mixture(rows: &[[f64; 3]], to_rad: bool) -> Result<GaussianMixture, SensorError> {
    let k = if to_rad { std::f64::consts::PI / 180.0 } else { 1.0 };
    GaussianMixture::new(rows.iter().map(|r| (r[0], r[1] * k, r[2] * k)).collect())
}

pub fn load_noise(path: &Path) -> Result<MeasurementNoise, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let f: NoiseFile = toml::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(MeasurementNoise {
        vel_north: mixture(&f.vel_north, false)?,
        vel_east: mixture(&f.vel_east, false)?,
        vel_down: mixture(&f.vel_down, false)?,
        depth: mixture(&f.depth, false)?,
        roll: mixture(&f.roll_deg, true)?,
        pitch: mixture(&f.pitch_deg, true)?,
        yaw: mixture(&f.yaw_deg, true)?,
        lat: mixture(&f.lat_deg, true)?,
        lon: mixture(&f.lon_deg, true)?,
    })
}
