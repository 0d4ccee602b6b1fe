//! Additive trend + seasonality + holiday regression.
//!
//! The trend is piecewise linear with hinge terms at changepoints spread
//! uniformly over the training span. Daily (period 24) and weekly
//! (period 168) seasonality are Fourier pairs, and a single indicator
//! column carries the holiday effect. Coefficients solve the ridge normal
//! equations; the intercept is not penalised. Gap hours are dropped.

use std::f64::consts::TAU;

use super::ForecastResult;
use crate::data::HourlySeries;
use crate::linalg::{cholesky, cholesky_solve, normal_equations, Matrix};
use crate::{Error, Result};

const DAILY_PERIOD: f64 = 24.0;
const WEEKLY_PERIOD: f64 = 168.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ProphetSpec {
    pub n_changepoints: usize,
    pub daily_fourier_order: usize,
    pub weekly_fourier_order: usize,
    pub ridge_lambda: f64,
}

impl Default for ProphetSpec {
    fn default() -> Self {
        Self {
            n_changepoints: 10,
            daily_fourier_order: 6,
            weekly_fourier_order: 3,
            ridge_lambda: 1.0,
        }
    }
}

impl ProphetSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge_lambda >= 0.0) || !self.ridge_lambda.is_finite() {
            return Err(Error::arg(format!(
                "ridge lambda must be >= 0, got {}",
                self.ridge_lambda
            )));
        }
        Ok(())
    }

    /// Intercept, slope, hinges, Fourier pairs and the holiday column.
    pub fn n_columns(&self) -> usize {
        2 + self.n_changepoints + 2 * self.daily_fourier_order + 2 * self.weekly_fourier_order + 1
    }

    pub fn holiday_column(&self) -> usize {
        self.n_columns() - 1
    }

    /// Shortest training series accepted by [`fit_prophet`].
    pub fn min_length(&self) -> usize {
        if self.weekly_fourier_order > 0 {
            2 * WEEKLY_PERIOD as usize
        } else if self.daily_fourier_order > 0 {
            2 * DAILY_PERIOD as usize
        } else {
            2
        }
    }

    /// Per-column ridge penalty (zero for the intercept).
    pub fn penalties(&self) -> Vec<f64> {
        let mut p = vec![self.ridge_lambda; self.n_columns()];
        p[0] = 0.0;
        p
    }

    /// Design row for hour `index` counted from the training start, where
    /// the training span covers indices `0..span`.
    pub fn design_row(&self, index: usize, span: usize, holiday: bool) -> Vec<f64> {
        let t = index as f64 / span.saturating_sub(1).max(1) as f64;
        let mut row = Vec::with_capacity(self.n_columns());
        row.push(1.0);
        row.push(t);
        for j in 1..=self.n_changepoints {
            let c = j as f64 / (self.n_changepoints + 1) as f64;
            row.push((t - c).max(0.0));
        }
        for (order, period) in [
            (self.daily_fourier_order, DAILY_PERIOD),
            (self.weekly_fourier_order, WEEKLY_PERIOD),
        ] {
            for k in 1..=order {
                let arg = TAU * k as f64 * index as f64 / period;
                row.push(arg.sin());
                row.push(arg.cos());
            }
        }
        row.push(if holiday { 1.0 } else { 0.0 });
        row
    }

    /// Design matrix over the given `(index, holiday)` rows.
    pub fn design_matrix(&self, rows: &[(usize, bool)], span: usize) -> Matrix {
        let p = self.n_columns();
        let mut x = Matrix::zeros(rows.len(), p);
        for (r, &(i, h)) in rows.iter().enumerate() {
            x.row_mut(r).copy_from_slice(&self.design_row(i, span, h));
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProphetModel {
    spec: ProphetSpec,
    coefficients: Vec<f64>,
    span: usize,
    residual_sd: f64,
}

impl ProphetModel {
    pub fn spec(&self) -> &ProphetSpec {
        &self.spec
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn holiday_effect(&self) -> f64 {
        self.coefficients[self.spec.holiday_column()]
    }

    pub fn residual_sd(&self) -> f64 {
        self.residual_sd
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn predict_at(&self, index: usize, holiday: bool) -> f64 {
        self.spec
            .design_row(index, self.span, holiday)
            .iter()
            .zip(&self.coefficients)
            .map(|(x, b)| x * b)
            .sum()
    }
}

/// `calendar` flags the holiday hours of `train`, one per hour.
pub fn fit_prophet(
    train: &HourlySeries,
    calendar: &[bool],
    spec: &ProphetSpec,
) -> Result<ProphetModel> {
    spec.validate()?;
    if calendar.len() != train.len() {
        return Err(Error::arg(format!(
            "calendar has {} flags for {} training hours",
            calendar.len(),
            train.len()
        )));
    }
    if train.len() < spec.min_length() {
        return Err(Error::arg(format!(
            "additive model needs at least {} hours, got {}",
            spec.min_length(),
            train.len()
        )));
    }
    let rows: Vec<(usize, bool)> = (0..train.len())
        .filter(|&i| !train.is_gap(i))
        .map(|i| (i, calendar[i]))
        .collect();
    let y: Vec<f64> = rows.iter().map(|&(i, _)| train.get(i).unwrap()).collect();
    let p = spec.n_columns();
    if rows.len() < p {
        return Err(Error::arg(format!(
            "{} observed hours for {p} coefficients",
            rows.len()
        )));
    }
    let span = train.len();
    let x = spec.design_matrix(&rows, span);
    let (mut gram, rhs) = normal_equations(&x, &y);
    for (j, pen) in spec.penalties().iter().enumerate() {
        gram[(j, j)] += pen;
    }
    let l = cholesky(&gram)
        .map_err(|e| Error::Numeric(format!("additive model design is rank deficient: {e}")))?;
    let coefficients = cholesky_solve(&l, &rhs);
    let sse: f64 = (0..rows.len())
        .map(|r| {
            let fit: f64 = x.row(r).iter().zip(&coefficients).map(|(a, b)| a * b).sum();
            (y[r] - fit) * (y[r] - fit)
        })
        .sum();
    let dof = rows.len().saturating_sub(p).max(1);
    Ok(ProphetModel {
        spec: spec.clone(),
        coefficients,
        span,
        residual_sd: (sse / dof as f64).sqrt(),
    })
}

/// Forecast the `horizon` hours after the training span. The trend keeps
/// its final slope.
pub fn forecast_prophet(
    model: &ProphetModel,
    horizon: usize,
    future_flags: &[bool],
) -> Result<ForecastResult> {
    if horizon == 0 {
        return Err(Error::arg("horizon must be >= 1"));
    }
    if future_flags.len() != horizon {
        return Err(Error::arg(format!(
            "{} future calendar flags for a horizon of {horizon}",
            future_flags.len()
        )));
    }
    let point: Vec<f64> = (0..horizon)
        .map(|h| model.predict_at(model.span + h, future_flags[h]))
        .collect();
    Ok(ForecastResult::with_gaussian_interval(
        point,
        &vec![model.residual_sd; horizon],
    ))
}
