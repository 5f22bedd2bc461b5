//! Run configuration read from JSON.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::chain::{PlantSpec, SapmParams};
use crate::data::{EnsembleSchema, SplitSpec, StampConvention};
use crate::error::{Error, Result};
use crate::nn::{NnMode, TrainConfig};
use crate::pipeline::{Method, StrategyTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub ghi_forecast: PathBuf,
    pub ghi_obs: PathBuf,
    pub pv_obs: PathBuf,
    #[serde(default = "hour_end")]
    pub ghi_forecast_convention: StampConvention,
    #[serde(default = "mid_hour")]
    pub ghi_obs_convention: StampConvention,
    #[serde(default = "hour_start")]
    pub pv_obs_convention: StampConvention,
    #[serde(default)]
    pub schema: EnsembleSchema,
}

fn hour_end() -> StampConvention {
    StampConvention::HourEnd
}
fn mid_hour() -> StampConvention {
    StampConvention::MidHour
}
fn hour_start() -> StampConvention {
    StampConvention::HourStart
}

/// Site and plant description. Unset plant fields take the chain defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub latitude: f64,
    pub longitude: f64,
    pub utc_offset: i32,
    pub capacity_mw: f64,
    #[serde(default)]
    pub tilt_deg: Option<f64>,
    #[serde(default)]
    pub azimuth_deg: Option<f64>,
    #[serde(default)]
    pub albedo: Option<f64>,
    #[serde(default)]
    pub gamma_pdc: Option<f64>,
    #[serde(default)]
    pub temp_model: Option<SapmParams>,
}

impl SiteConfig {
    pub fn plant(&self) -> PlantSpec {
        let mut p = PlantSpec::for_site(crate::data::Site {
            latitude: self.latitude,
            longitude: self.longitude,
            utc_offset: self.utc_offset,
            capacity_mw: self.capacity_mw,
        });
        if let Some(v) = self.tilt_deg {
            p.tilt_deg = v;
        }
        if let Some(v) = self.azimuth_deg {
            p.azimuth_deg = v;
        }
        if let Some(v) = self.albedo {
            p.albedo = v;
        }
        if let Some(v) = self.gamma_pdc {
            p.gamma_pdc = v;
        }
        if let Some(v) = self.temp_model {
            p.temp_model = v;
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_year: i32,
}

impl From<SplitConfig> for SplitSpec {
    fn from(s: SplitConfig) -> Self {
        SplitSpec {
            train_start: s.train_start,
            train_end: s.train_end,
            test_year: s.test_year,
        }
    }
}

/// Optional overrides of the per-mode network training defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NnOverrides {
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub night_patience: Option<usize>,
    pub max_epochs: Option<usize>,
    pub validation_fraction: Option<f64>,
    pub repeats: Option<usize>,
    pub hidden_units: Option<usize>,
}

impl NnOverrides {
    pub fn apply(&self, mut c: TrainConfig) -> TrainConfig {
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.patience {
            c.patience = v;
        }
        if let Some(v) = self.night_patience {
            c.night_patience = v;
        }
        if let Some(v) = self.max_epochs {
            c.max_epochs = v;
        }
        if let Some(v) = self.validation_fraction {
            c.validation_fraction = v;
        }
        if let Some(v) = self.repeats {
            c.repeats = v;
        }
        if let Some(v) = self.hidden_units {
            c.hidden_units = v;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub site: SiteConfig,
    pub split: SplitConfig,
    #[serde(default = "all_strategies")]
    pub strategies: Vec<StrategyTag>,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub nn_embedding: NnOverrides,
    #[serde(default)]
    pub nn_hourly: NnOverrides,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Write fitted models into the run directory.
    #[serde(default = "yes")]
    pub save_models: bool,
}

fn yes() -> bool {
    true
}

fn all_strategies() -> Vec<StrategyTag> {
    StrategyTag::ALL.to_vec()
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

impl RunConfig {
    /// Reads a config file; relative data paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data.ghi_forecast, &mut cfg.data.ghi_obs, &mut cfg.data.pv_obs] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.site.plant().validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies selected".into()));
        }
        let test_start = NaiveDate::from_ymd_opt(self.split.test_year, 1, 1)
            .ok_or_else(|| Error::Config("invalid test year".into()))?;
        if self.split.train_end >= test_start || self.split.train_start > self.split.train_end {
            return Err(Error::Config("training period must precede the test year".into()));
        }
        for p in [&self.data.ghi_forecast, &self.data.ghi_obs, &self.data.pv_obs] {
            if !p.exists() {
                return Err(Error::Config(format!("data file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn train_config(&self, mode: NnMode, seed: u64) -> TrainConfig {
        let base = TrainConfig::for_mode(mode, seed);
        match mode {
            NnMode::Embedding => self.nn_embedding.apply(base),
            NnMode::Hourly => self.nn_hourly.apply(base),
        }
    }
}
