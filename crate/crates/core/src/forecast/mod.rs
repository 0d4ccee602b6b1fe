//! Cluster-level short-term load forecasting.
//!
//! Four model families share the [`Forecaster`] interface: ARIMA and
//! SARIMA ([`arima`]), an additive trend/seasonality/holiday regression
//! ([`prophet`]) and a single-layer GRU ([`gru`]). [`evaluate`] scores any
//! forecaster by rolling-origin cross-validation with the metrics in
//! [`metrics`].

pub mod arima;
pub mod evaluate;
pub mod gru;
pub mod metrics;
pub mod prophet;
mod series;

pub use arima::{
    fit_arima, fit_sarima, forecast_arima, forecast_sarima, ArimaModel, ArimaSpec, SeasonalSpec,
};
pub use evaluate::{
    fold_origins, grid_search, rolling_origin_evaluate, Evaluation, FoldResult, GridResult,
    RollingOptions,
};
pub use gru::{fit_gru, forecast_gru, GruModel, GruSpec};
pub use metrics::{compute_metrics, crps_gaussian, MeanMetrics, Metrics, MAPE_EPSILON};
pub use prophet::{fit_prophet, forecast_prophet, ProphetModel, ProphetSpec};
pub use series::{build_cluster_series, cluster_series_from_labels, ClusterSeries};

use std::fmt;

use crate::data::HourlySeries;
use crate::{Error, Result};

/// Standard normal 90th percentile: half-width multiplier of a central
/// 80% Gaussian interval.
pub const Z80: f64 = 1.2815515655446004;

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub point: Vec<f64>,
    /// 80% nominal interval bounds.
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// Filled in when the forecast is scored against actuals.
    pub metrics: Option<Metrics>,
}

impl ForecastResult {
    pub fn point_only(point: Vec<f64>) -> Self {
        Self {
            point,
            lower: None,
            upper: None,
            metrics: None,
        }
    }

    /// Symmetric Gaussian interval with per-step standard deviations.
    pub fn with_gaussian_interval(point: Vec<f64>, sd: &[f64]) -> Self {
        let lower = point.iter().zip(sd).map(|(p, s)| p - Z80 * s).collect();
        let upper = point.iter().zip(sd).map(|(p, s)| p + Z80 * s).collect();
        Self {
            point,
            lower: Some(lower),
            upper: Some(upper),
            metrics: None,
        }
    }

    pub fn horizon(&self) -> usize {
        self.point.len()
    }

    pub fn intervals(&self) -> Option<(&[f64], &[f64])> {
        match (&self.lower, &self.upper) {
            (Some(l), Some(u)) => Some((l, u)),
            _ => None,
        }
    }
}

/// Anything that can be refit on a training window and forecast ahead.
pub trait Forecaster {
    fn name(&self) -> String;

    /// Estimated coefficient count, used to break ties in grid search.
    fn n_params(&self) -> usize;

    /// Fit on `train` and forecast `horizon` hours. `calendar` covers the
    /// training hours followed by the forecast hours.
    fn fit_forecast(
        &self,
        train: &HourlySeries,
        calendar: &[bool],
        horizon: usize,
    ) -> Result<ForecastResult>;
}

/// A model family with its specification.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Arima(ArimaSpec),
    Prophet(ProphetSpec),
    Gru(GruSpec),
}

impl ModelSpec {
    /// `arima`, `sarima`, `prophet` or `gru`.
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Arima(s) if s.seasonal.is_some() => "sarima",
            ModelSpec::Arima(_) => "arima",
            ModelSpec::Prophet(_) => "prophet",
            ModelSpec::Gru(_) => "gru",
        }
    }

    /// Default specification for a family name.
    pub fn default_for(family: &str) -> Result<Self> {
        match family {
            "arima" => Ok(ModelSpec::Arima(ArimaSpec::default_arima())),
            "sarima" => Ok(ModelSpec::Arima(ArimaSpec::default_sarima())),
            "prophet" => Ok(ModelSpec::Prophet(ProphetSpec::default())),
            "gru" => Ok(ModelSpec::Gru(GruSpec::default())),
            other => Err(Error::arg(format!(
                "unknown model family '{other}' (expected arima, sarima, prophet or gru)"
            ))),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Arima(s) => write!(f, "{s}"),
            ModelSpec::Prophet(s) => write!(
                f,
                "prophet(cp={}, daily={}, weekly={}, lambda={})",
                s.n_changepoints, s.daily_fourier_order, s.weekly_fourier_order, s.ridge_lambda
            ),
            ModelSpec::Gru(s) => write!(
                f,
                "gru(hidden={}, lookback={}, epochs={}, lr={}, windows={})",
                s.hidden_size, s.lookback, s.epochs, s.learning_rate, s.max_windows
            ),
        }
    }
}

impl Forecaster for ModelSpec {
    fn name(&self) -> String {
        self.to_string()
    }

    fn n_params(&self) -> usize {
        match self {
            ModelSpec::Arima(s) => s.n_params(),
            ModelSpec::Prophet(s) => s.n_columns(),
            ModelSpec::Gru(s) => s.n_params(),
        }
    }

    fn fit_forecast(
        &self,
        train: &HourlySeries,
        calendar: &[bool],
        horizon: usize,
    ) -> Result<ForecastResult> {
        match self {
            ModelSpec::Arima(s) => forecast_arima(&fit_arima(train, s)?, horizon),
            ModelSpec::Prophet(s) => {
                let n = train.len();
                if calendar.len() < n + horizon {
                    return Err(Error::arg(format!(
                        "calendar covers {} hours, need {}",
                        calendar.len(),
                        n + horizon
                    )));
                }
                let model = fit_prophet(train, &calendar[..n], s)?;
                forecast_prophet(&model, horizon, &calendar[n..n + horizon])
            }
            ModelSpec::Gru(s) => forecast_gru(&fit_gru(train, s)?, horizon),
        }
    }
}
