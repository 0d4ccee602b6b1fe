//! Point and probabilistic forecast accuracy.

use statrs::function::erf::erf;

use super::Z80;
use crate::{Error, Result};

/// Actuals at or below this magnitude are left out of MAPE.
pub const MAPE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    /// Percent; `None` when every actual was skipped.
    pub mape: Option<f64>,
    pub mape_skipped: usize,
    /// May be negative; `-inf` for a constant actual that was missed.
    pub r_squared: f64,
    pub crps: Option<f64>,
}

/// Per-fold averages. MAPE and CRPS average over the folds where defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanMetrics {
    pub rmse: f64,
    pub mape: Option<f64>,
    pub r_squared: f64,
    pub crps: Option<f64>,
}

impl MeanMetrics {
    pub fn from_folds(folds: &[Metrics]) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::arg("no folds to average"));
        }
        let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        Ok(Self {
            rmse: mean(folds.iter().map(|m| m.rmse).collect()).unwrap(),
            mape: mean(folds.iter().filter_map(|m| m.mape).collect()),
            r_squared: mean(folds.iter().map(|m| m.r_squared).collect()).unwrap(),
            crps: mean(folds.iter().filter_map(|m| m.crps).collect()),
        })
    }
}

pub fn compute_metrics(
    actual: &[f64],
    predicted: &[f64],
    intervals: Option<(&[f64], &[f64])>,
) -> Result<Metrics> {
    let n = actual.len();
    if n == 0 || predicted.len() != n {
        return Err(Error::arg(format!(
            "need equal non-empty lengths, got {} actual and {} predicted",
            n,
            predicted.len()
        )));
    }
    if let Some((lo, hi)) = intervals {
        if lo.len() != n || hi.len() != n {
            return Err(Error::arg("interval bounds must match the forecast length"));
        }
    }
    let sse: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    let rmse = (sse / n as f64).sqrt();

    let mut ape = 0.0;
    let mut used = 0usize;
    for (a, p) in actual.iter().zip(predicted) {
        if a.abs() > MAPE_EPSILON {
            ape += ((a - p) / a).abs();
            used += 1;
        }
    }
    let mape = (used > 0).then(|| 100.0 * ape / used as f64);

    let mean = actual.iter().sum::<f64>() / n as f64;
    let sst: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    let r_squared = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };

    let crps = intervals.map(|(lo, hi)| {
        let total: f64 = (0..n)
            .map(|i| {
                let sigma = (hi[i] - lo[i]) / (2.0 * Z80);
                crps_gaussian(actual[i], predicted[i], sigma)
            })
            .sum();
        total / n as f64
    });

    Ok(Metrics {
        rmse,
        mape,
        mape_skipped: n - used,
        r_squared,
        crps,
    })
}

/// CRPS of `N(mu, sigma^2)` at observation `y`; the absolute error when
/// `sigma` is 0.
pub fn crps_gaussian(y: f64, mu: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return (y - mu).abs();
    }
    let z = (y - mu) / sigma;
    let cdf = 0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::f64::consts::PI.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_forecast() {
        let a = [1.0, 2.0, 3.0];
        let m = compute_metrics(&a, &a, None).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mape, Some(0.0));
        assert_eq!(m.r_squared, 1.0);
        assert_eq!(m.crps, None);
    }

    #[test]
    fn mean_forecast_has_zero_r2() {
        let m = compute_metrics(&[1.0, 2.0, 6.0], &[3.0; 3], None).unwrap();
        assert!(m.r_squared.abs() < 1e-15);
    }

    #[test]
    fn hand_computed() {
        let m = compute_metrics(&[10.0, 20.0], &[11.0, 18.0], None).unwrap();
        assert!((m.rmse - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((m.mape.unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn mape_skips_zero_actuals() {
        let m = compute_metrics(&[0.0, 10.0], &[1.0, 11.0], None).unwrap();
        assert_eq!(m.mape_skipped, 1);
        assert!((m.mape.unwrap() - 10.0).abs() < 1e-12);
        let m = compute_metrics(&[0.0, 0.0], &[1.0, 1.0], None).unwrap();
        assert_eq!(m.mape, None);
    }

    #[test]
    fn constant_actuals() {
        assert_eq!(
            compute_metrics(&[5.0, 5.0], &[5.0, 5.0], None)
                .unwrap()
                .r_squared,
            1.0
        );
        assert_eq!(
            compute_metrics(&[5.0, 5.0], &[4.0, 5.0], None)
                .unwrap()
                .r_squared,
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn crps_degenerate_is_absolute_error() {
        assert_eq!(crps_gaussian(3.0, 1.0, 0.0), 2.0);
        let m = compute_metrics(&[3.0], &[1.0], Some((&[1.0], &[1.0]))).unwrap();
        assert_eq!(m.crps, Some(2.0));
    }

    #[test]
    fn crps_at_mean_closed_form() {
        // z = 0: sigma * (2 phi(0) - 1/sqrt(pi)) = sigma (sqrt(2) - 1) / sqrt(pi).
        let expected = 2.0 * (2f64.sqrt() - 1.0) / std::f64::consts::PI.sqrt();
        assert!((crps_gaussian(1.0, 1.0, 2.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_metrics(&[1.0], &[1.0, 2.0], None).is_err());
        assert!(compute_metrics(&[], &[], None).is_err());
    }
}
