//! Experiment configuration files (JSON, units spelled out in field names).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use isac_core::model::{NormKind, SystemConfig};
use isac_core::robust::Method;
use isac_core::simkit::engine::theta_range;
use isac_core::simkit::{MonteCarloConfig, OutputFormat, PercentileMethod};

use crate::error::CliError;

/// `P[W] = 10^((P[dBm] − 30)/10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub users: usize,
    pub antennas: usize,
    pub frame_length: usize,
    /// Exactly one of `power_watts` and `power_dbm` must be given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_watts: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    pub noise_watts: f64,
    #[serde(default = "one")]
    pub symbol_power_watts: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_hz: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsSection {
    pub azimuths_deg: Vec<f64>,
    pub beam_weight: f64,
}

/// Explicit list or `{start, step, stop}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, step: f64, stop: f64 },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            Grid::List(v) => Ok(v.clone()),
            Grid::Range { start, step, stop } => {
                if !(*step > 0.0) || stop < start {
                    return Err(CliError::Config(format!(
                        "grid range needs step > 0 and stop >= start, got {start}:{step}:{stop}"
                    )));
                }
                Ok(theta_range(*start, *step, *stop))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<Grid>,
    #[serde(default = "one")]
    pub budget: f64,
    #[serde(default = "frobenius")]
    pub norm: NormKind,
    pub epsilon: f64,
}

fn frobenius() -> NormKind {
    NormKind::Frobenius
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub name: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_grid: Option<Vec<f64>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    1e4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub episodes: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub percentile: PercentileMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatName {
    Csv,
    Json,
}

impl From<FormatName> for OutputFormat {
    fn from(f: FormatName) -> Self {
        match f {
            FormatName::Csv => OutputFormat::Csv,
            FormatName::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    pub output_dir: PathBuf,
    #[serde(default = "csv_format")]
    pub format: FormatName,
}

fn csv_format() -> FormatName {
    FormatName::Csv
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { tolerance: default_tolerance() }
    }
}

pub fn default_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub targets: TargetsSection,
    pub uncertainty: UncertaintySection,
    pub method: MethodSection,
    /// Seed defaults to 0 and a single episode when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloSection>,
    pub io: IoSection,
    #[serde(default)]
    pub verify: VerifySection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The configuration used by the reference experiments.
    pub fn reference(method: Method, output_dir: PathBuf) -> Self {
        Self {
            system: SystemSection {
                users: 4,
                antennas: 16,
                frame_length: 30,
                power_watts: Some(2.5),
                power_dbm: None,
                noise_watts: 0.25,
                symbol_power_watts: 1.0,
                carrier_hz: None,
            },
            targets: TargetsSection { azimuths_deg: vec![-45.0, 45.0], beam_weight: 0.9 },
            uncertainty: UncertaintySection {
                theta: Some(0.127),
                theta_grid: Some(Grid::Range { start: 0.0, step: 0.01, stop: 0.2 }),
                budget: 1.0,
                norm: NormKind::Frobenius,
                epsilon: 0.05,
            },
            method: MethodSection { name: method, rho: Some(0.25), rho_grid: None, alpha: 1e4 },
            montecarlo: Some(MonteCarloSection { episodes: 1000, master_seed: 2024, percentile: PercentileMethod::NearestRank }),
            io: IoSection { output_dir, format: FormatName::Csv },
            verify: VerifySection::default(),
        }
    }

    pub fn power_watts(&self) -> Result<f64, CliError> {
        match (self.system.power_watts, self.system.power_dbm) {
            (Some(w), None) => Ok(w),
            (None, Some(d)) => Ok(dbm_to_watts(d)),
            (None, None) => Err(CliError::Config("missing field `system.power_watts` (or `system.power_dbm`)".into())),
            (Some(_), Some(_)) => Err(CliError::Config(
                "`system.power_watts` and `system.power_dbm` are mutually exclusive".into(),
            )),
        }
    }

    pub fn system_config(&self) -> Result<SystemConfig, CliError> {
        let cfg = SystemConfig {
            users: self.system.users,
            antennas: self.system.antennas,
            frame_length: self.system.frame_length,
            power_watts: self.power_watts()?,
            noise_watts: self.system.noise_watts,
            symbol_power: self.system.symbol_power_watts,
            carrier_hz: self.system.carrier_hz,
        };
        cfg.validate().map_err(|e| CliError::Config(format!("system: {e}")))?;
        Ok(cfg)
    }

    pub fn theta(&self) -> Result<f64, CliError> {
        let t = self.uncertainty.theta.ok_or_else(|| CliError::Config("missing field `uncertainty.theta`".into()))?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!("`uncertainty.theta` must be finite and nonnegative, got {t}")));
        }
        Ok(t)
    }

    pub fn theta_grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.uncertainty.theta_grid {
            Some(g) => g.values(),
            None => Ok(vec![self.theta().map_err(|_| {
                CliError::Config("missing field `uncertainty.theta_grid` (or `uncertainty.theta`)".into())
            })?]),
        }
    }

    fn rho_grid(&self) -> Result<Vec<f64>, CliError> {
        if !self.method.name.is_joint() {
            return Ok(vec![1.0]);
        }
        match (&self.method.rho_grid, self.method.rho) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(r)) => Ok(vec![r]),
            (None, None) => Err(CliError::Config(format!("missing field `method.rho` (required by {})", self.method.name))),
        }
    }

    /// Simulation settings with every module precondition checked.
    pub fn montecarlo_config(&self, theta_grid: Vec<f64>) -> Result<MonteCarloConfig, CliError> {
        let mc_section = self.montecarlo.as_ref();
        let mc = MonteCarloConfig {
            system: self.system_config()?,
            targets_deg: self.targets.azimuths_deg.clone(),
            beam_weight: self.targets.beam_weight,
            epsilon: self.uncertainty.epsilon,
            theta_grid,
            rho_grid: self.rho_grid()?,
            method: self.method.name,
            alpha: self.method.alpha,
            budget: self.uncertainty.budget,
            norm: self.uncertainty.norm,
            episodes: mc_section.map_or(1, |m| m.episodes),
            master_seed: mc_section.map_or(0, |m| m.master_seed),
            percentile: mc_section.map(|m| m.percentile).unwrap_or_default(),
        };
        mc.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.targets.azimuths_deg.is_empty() {
            return Err(CliError::Config("`targets.azimuths_deg` must not be empty".into()));
        }
        if !(self.verify.tolerance > 0.0) {
            return Err(CliError::Config(format!("`verify.tolerance` must be positive, got {}", self.verify.tolerance)));
        }
        Ok(mc)
    }

    pub fn set_seed(&mut self, seed: u64) {
        match &mut self.montecarlo {
            Some(m) => m.master_seed = seed,
            None => {
                self.montecarlo = Some(MonteCarloSection { episodes: 1, master_seed: seed, percentile: PercentileMethod::default() })
            }
        }
    }
}
