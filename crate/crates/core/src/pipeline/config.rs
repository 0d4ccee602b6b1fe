//! Pipeline configuration.
//!
//! The file is TOML, so both `[cluster]` tables and flat dotted keys such
//! as `cluster.k = 3` are accepted. Every field has a default and unknown
//! keys are rejected. Command-line overrides are applied as `key=value`
//! pairs on top of the file before deserialisation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::Algorithm;
use crate::forecast::{ArimaSpec, GruSpec, ModelSpec, ProphetSpec, RollingOptions};
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root seed; every stage seed derives from it unless set explicitly.
    pub seed: u64,
    pub paths: PathsConfig,
    pub generator: GeneratorConfig,
    pub pca: PcaConfig,
    pub cluster: ClusterConfig,
    pub forecast: ForecastConfig,
    pub allocate: AllocateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub feeder: Option<PathBuf>,
    pub inventory: Option<PathBuf>,
    /// Holiday calendar; without one no hour is a holiday.
    pub calendar: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: Option<u64>,
    pub n_buildings: usize,
    pub n_hours: usize,
    pub cluster_sizes: Vec<usize>,
    /// Fraction of feeder hours turned into gaps.
    pub gap_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    pub enabled: bool,
    pub variance_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub algorithm: String,
    pub k: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    /// Families to evaluate: any of `arima`, `sarima`, `prophet`, `gru`.
    pub models: Vec<String>,
    pub horizon: usize,
    pub step: usize,
    pub initial_train_fraction: f64,
    /// Score the GRU on the first fold only.
    pub gru_single_split: bool,
    /// `[p, d, q]`.
    pub arima_order: Vec<usize>,
    pub sarima_order: Vec<usize>,
    /// `[P, D, Q, period]`.
    pub sarima_seasonal: Vec<usize>,
    pub prophet_changepoints: usize,
    pub prophet_daily_order: usize,
    pub prophet_weekly_order: usize,
    pub prophet_ridge: f64,
    pub gru_hidden: usize,
    pub gru_lookback: usize,
    pub gru_epochs: usize,
    pub gru_learning_rate: f64,
    pub gru_max_windows: usize,
    pub gru_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocateConfig {
    /// Per-cluster priority weights in cluster-id order; empty selects the
    /// rank-based defaults.
    pub weights: Vec<f64>,
    /// Supply as a fraction of the forecast total, used without a supply file.
    pub supply_fraction: f64,
    /// `timestamp,kwh` supply readings covering the forecast hours.
    pub supply: Option<PathBuf>,
    /// Family used for the allocation forecast, or `best` for the lowest
    /// mean RMSE in evaluation.
    pub model: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            paths: PathsConfig::default(),
            generator: GeneratorConfig::default(),
            pca: PcaConfig::default(),
            cluster: ClusterConfig::default(),
            forecast: ForecastConfig::default(),
            allocate: AllocateConfig::default(),
        }
    }
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            feeder: None,
            inventory: None,
            calendar: None,
            output_dir: PathBuf::from("gridshed-out"),
        }
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: None,
            n_buildings: 55,
            n_hours: 3648,
            cluster_sizes: vec![9, 37, 9],
            gap_rate: 0.0,
        }
    }
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            variance_target: crate::reduce::DEFAULT_VARIANCE_TARGET,
        }
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            algorithm: "kmeans".into(),
            k: 3,
            k_min: 2,
            k_max: 8,
            seed: None,
        }
    }
}

impl Default for ForecastConfig {
    fn default() -> Self {
        let rolling = RollingOptions::default();
        let prophet = ProphetSpec::default();
        let gru = GruSpec::default();
        Self {
            models: ["arima", "sarima", "prophet", "gru"]
                .map(String::from)
                .to_vec(),
            horizon: rolling.horizon,
            step: rolling.step,
            initial_train_fraction: rolling.initial_train_fraction,
            gru_single_split: true,
            arima_order: vec![2, 1, 1],
            sarima_order: vec![1, 0, 1],
            sarima_seasonal: vec![0, 1, 1, 24],
            prophet_changepoints: prophet.n_changepoints,
            prophet_daily_order: prophet.daily_fourier_order,
            prophet_weekly_order: prophet.weekly_fourier_order,
            prophet_ridge: prophet.ridge_lambda,
            gru_hidden: gru.hidden_size,
            gru_lookback: gru.lookback,
            gru_epochs: gru.epochs,
            gru_learning_rate: gru.learning_rate,
            gru_max_windows: gru.max_windows,
            gru_seed: None,
        }
    }
}

impl Default for AllocateConfig {
    fn default() -> Self {
        Self {
            weights: Vec::new(),
            supply_fraction: 0.9,
            supply: None,
            model: "best".into(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parse one override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("malformed key '{key}'")));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("'{p}' in '{key}' is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl PipelineConfig {
    /// Parse TOML text, apply `key=value` overrides and validate.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        for (k, v) in overrides {
            set_dotted(&mut table, k, parse_value(v))?;
        }
        let config: PipelineConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Load `path` (or start from defaults) and apply overrides.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    /// Split `key=value` into its parts.
    pub fn parse_override(s: &str) -> Result<(String, String)> {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| config_err(format!("override '{s}' is not key=value")))?;
        Ok((k.trim().to_string(), v.trim().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.algorithm()?;
        let c = &self.cluster;
        if c.k < 2 {
            return Err(config_err(format!("cluster.k must be >= 2, got {}", c.k)));
        }
        if c.k_min < 2 || c.k_max < c.k_min {
            return Err(config_err(format!(
                "cluster k range {}..{} must satisfy 2 <= k_min <= k_max",
                c.k_min, c.k_max
            )));
        }
        if !(self.pca.variance_target > 0.0 && self.pca.variance_target <= 1.0) {
            return Err(config_err(format!(
                "pca.variance_target must lie in (0, 1], got {}",
                self.pca.variance_target
            )));
        }
        let g = &self.generator;
        if g.cluster_sizes.iter().sum::<usize>() != g.n_buildings {
            return Err(config_err(format!(
                "generator.cluster_sizes sum to {} but n_buildings is {}",
                g.cluster_sizes.iter().sum::<usize>(),
                g.n_buildings
            )));
        }
        if !(0.0..1.0).contains(&g.gap_rate) {
            return Err(config_err(format!(
                "generator.gap_rate must lie in [0, 1), got {}",
                g.gap_rate
            )));
        }
        if self.forecast.models.is_empty() {
            return Err(config_err("forecast.models is empty"));
        }
        self.model_specs()?;
        self.rolling_options()?;
        let a = &self.allocate;
        if !(a.supply_fraction >= 0.0) || !a.supply_fraction.is_finite() {
            return Err(config_err(format!(
                "allocate.supply_fraction must be >= 0, got {}",
                a.supply_fraction
            )));
        }
        if a.weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(config_err("allocate.weights must be positive"));
        }
        if a.model != "best" && !self.forecast.models.contains(&a.model) {
            return Err(config_err(format!(
                "allocate.model '{}' is neither 'best' nor one of forecast.models",
                a.model
            )));
        }
        Ok(())
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        self.cluster
            .algorithm
            .parse()
            .map_err(|e: Error| config_err(e.to_string()))
    }

    pub fn k_range(&self) -> Vec<usize> {
        (self.cluster.k_min..=self.cluster.k_max).collect()
    }

    pub fn generator_seed(&self) -> u64 {
        self.generator.seed.unwrap_or(self.seed)
    }

    pub fn cluster_seed(&self) -> u64 {
        self.cluster
            .seed
            .unwrap_or_else(|| derive_seed(self.seed, "cluster"))
    }

    pub fn gru_seed(&self) -> u64 {
        self.forecast
            .gru_seed
            .unwrap_or_else(|| derive_seed(self.seed, "forecast/gru"))
    }

    pub fn rolling_options(&self) -> Result<RollingOptions> {
        let f = &self.forecast;
        if f.horizon == 0 || f.step == 0 {
            return Err(config_err(
                "forecast.horizon and forecast.step must be >= 1",
            ));
        }
        if !(f.initial_train_fraction > 0.0 && f.initial_train_fraction < 1.0) {
            return Err(config_err(format!(
                "forecast.initial_train_fraction must lie in (0, 1), got {}",
                f.initial_train_fraction
            )));
        }
        Ok(RollingOptions {
            initial_train_fraction: f.initial_train_fraction,
            horizon: f.horizon,
            step: f.step,
        })
    }

    /// Specification for one family under this config.
    pub fn model_spec(&self, family: &str) -> Result<ModelSpec> {
        let f = &self.forecast;
        let order = |v: &[usize], name: &str, len: usize| -> Result<Vec<usize>> {
            if v.len() != len {
                return Err(config_err(format!(
                    "forecast.{name} needs {len} entries, got {}",
                    v.len()
                )));
            }
            Ok(v.to_vec())
        };
        let spec = match family {
            "arima" => {
                let o = order(&f.arima_order, "arima_order", 3)?;
                ModelSpec::Arima(
                    ArimaSpec::new(o[0], o[1], o[2]).map_err(|e| config_err(e.to_string()))?,
                )
            }
            "sarima" => {
                let o = order(&f.sarima_order, "sarima_order", 3)?;
                let s = order(&f.sarima_seasonal, "sarima_seasonal", 4)?;
                ModelSpec::Arima(
                    ArimaSpec::seasonal(o[0], o[1], o[2], s[0], s[1], s[2], s[3])
                        .map_err(|e| config_err(e.to_string()))?,
                )
            }
            "prophet" => {
                let spec = ProphetSpec {
                    n_changepoints: f.prophet_changepoints,
                    daily_fourier_order: f.prophet_daily_order,
                    weekly_fourier_order: f.prophet_weekly_order,
                    ridge_lambda: f.prophet_ridge,
                };
                spec.validate().map_err(|e| config_err(e.to_string()))?;
                ModelSpec::Prophet(spec)
            }
            "gru" => {
                let spec = GruSpec {
                    hidden_size: f.gru_hidden,
                    lookback: f.gru_lookback,
                    epochs: f.gru_epochs,
                    learning_rate: f.gru_learning_rate,
                    seed: self.gru_seed(),
                    max_windows: f.gru_max_windows,
                };
                spec.validate().map_err(|e| config_err(e.to_string()))?;
                ModelSpec::Gru(spec)
            }
            other => ModelSpec::default_for(other).map_err(|e| config_err(e.to_string()))?,
        };
        Ok(spec)
    }

    /// Specifications for `forecast.models`, in order.
    pub fn model_specs(&self) -> Result<Vec<ModelSpec>> {
        let mut seen = Vec::new();
        for m in &self.forecast.models {
            if seen.contains(m) {
                return Err(config_err(format!("model '{m}' listed twice")));
            }
            seen.push(m.clone());
        }
        self.forecast
            .models
            .iter()
            .map(|m| self.model_spec(m))
            .collect()
    }

    /// Canonical TOML rendering of the effective config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical rendering with the output directory left
    /// out, so relocating a run does not change its identity.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }
}
