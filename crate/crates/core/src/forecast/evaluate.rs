//! Rolling-origin (expanding window) evaluation and grid search.

use super::{compute_metrics, ForecastResult, Forecaster, MeanMetrics, Metrics};
use crate::data::HourlySeries;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RollingOptions {
    /// Fraction of the series in the first training window.
    pub initial_train_fraction: f64,
    pub horizon: usize,
    /// Hours the origin advances between folds.
    pub step: usize,
}

impl Default for RollingOptions {
    fn default() -> Self {
        Self {
            initial_train_fraction: 0.8,
            horizon: 24,
            step: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    /// Index of the first forecast hour; training covers `0..origin`.
    pub origin: usize,
    pub forecast: ForecastResult,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub model: String,
    pub folds: Vec<FoldResult>,
    /// Folds whose forecast window held no observed value.
    pub skipped_folds: usize,
    pub mean: MeanMetrics,
}

/// Forecast origins: the first at `ceil(fraction * n)`, then every `step`
/// hours while a full horizon still fits.
pub fn fold_origins(n: usize, options: &RollingOptions) -> Result<Vec<usize>> {
    let f = options.initial_train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::arg(format!(
            "initial train fraction {f} outside (0, 1)"
        )));
    }
    if options.horizon == 0 || options.step == 0 {
        return Err(Error::arg("horizon and step must be >= 1"));
    }
    let first = (f * n as f64 - 1e-9).ceil().max(1.0) as usize;
    if first + options.horizon > n {
        return Err(Error::arg(format!(
            "series of {n} hours leaves no fold: first origin {first} plus horizon {} exceeds it",
            options.horizon
        )));
    }
    let count = (n - first - options.horizon) / options.step + 1;
    Ok((0..count).map(|i| first + i * options.step).collect())
}

/// Refit and forecast at every origin; metrics use the observed hours of
/// each forecast window. `calendar` is aligned with `series`.
pub fn rolling_origin_evaluate(
    series: &HourlySeries,
    calendar: &[bool],
    model: &dyn Forecaster,
    options: &RollingOptions,
) -> Result<Evaluation> {
    if calendar.len() != series.len() {
        return Err(Error::arg(format!(
            "calendar has {} flags for {} hours",
            calendar.len(),
            series.len()
        )));
    }
    let h = options.horizon;
    let mut folds = Vec::new();
    let mut skipped = 0;
    for origin in fold_origins(series.len(), options)? {
        let train = series.slice(0..origin)?;
        let mut forecast = model.fit_forecast(&train, &calendar[..origin + h], h)?;
        let observed: Vec<usize> = (0..h).filter(|&i| !series.is_gap(origin + i)).collect();
        if observed.is_empty() {
            log::info!("fold at hour {origin} has no observed actuals; skipped");
            skipped += 1;
            continue;
        }
        let pick = |v: &[f64]| observed.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let actual: Vec<f64> = observed
            .iter()
            .map(|&i| series.get(origin + i).unwrap())
            .collect();
        let point = pick(&forecast.point);
        let bounds = forecast.intervals().map(|(l, u)| (pick(l), pick(u)));
        let metrics = compute_metrics(
            &actual,
            &point,
            bounds.as_ref().map(|(l, u)| (l.as_slice(), u.as_slice())),
        )?;
        forecast.metrics = Some(metrics);
        folds.push(FoldResult {
            origin,
            forecast,
            metrics,
        });
    }
    if folds.is_empty() {
        return Err(Error::arg("every fold's forecast window is a gap"));
    }
    let per_fold: Vec<Metrics> = folds.iter().map(|f| f.metrics).collect();
    Ok(Evaluation {
        model: model.name(),
        mean: MeanMetrics::from_folds(&per_fold)?,
        folds,
        skipped_folds: skipped,
    })
}

#[derive(Debug, Clone)]
pub struct GridResult<F> {
    pub best: F,
    pub best_index: usize,
    /// Mean RMSE per candidate, or the failure message.
    pub scores: Vec<std::result::Result<f64, String>>,
}

/// Scores each candidate by rolling-origin evaluation inside `train` and
/// keeps the lowest mean RMSE. Ties go to fewer parameters, then to the
/// earlier candidate. Only the training slice is ever seen.
pub fn grid_search<F: Forecaster + Clone>(
    train: &HourlySeries,
    calendar: &[bool],
    grid: &[F],
    options: &RollingOptions,
) -> Result<GridResult<F>> {
    if grid.is_empty() {
        return Err(Error::arg("empty grid"));
    }
    let scores: Vec<std::result::Result<f64, String>> = grid
        .iter()
        .map(|m| {
            rolling_origin_evaluate(train, calendar, m, options)
                .map(|e| e.mean.rmse)
                .map_err(|e| e.to_string())
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        let Ok(rmse) = s else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let brmse = *scores[b].as_ref().unwrap();
                *rmse < brmse || (*rmse == brmse && grid[i].n_params() < grid[b].n_params())
            }
        };
        if better {
            best = Some(i);
        }
    }
    match best {
        Some(i) => Ok(GridResult {
            best: grid[i].clone(),
            best_index: i,
            scores,
        }),
        None => {
            let detail: Vec<String> = grid
                .iter()
                .zip(&scores)
                .map(|(m, s)| format!("{}: {}", m.name(), s.as_ref().unwrap_err()))
                .collect();
            Err(Error::Fit(format!(
                "every grid candidate failed ({})",
                detail.join("; ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_timestamp;

    struct Oracle(HourlySeries);

    impl Forecaster for Oracle {
        fn name(&self) -> String {
            "oracle".into()
        }
        fn n_params(&self) -> usize {
            0
        }
        fn fit_forecast(
            &self,
            train: &HourlySeries,
            _: &[bool],
            horizon: usize,
        ) -> Result<ForecastResult> {
            let o = train.len();
            let point = (o..o + horizon)
                .map(|i| self.0.get(i).unwrap_or(0.0))
                .collect();
            Ok(ForecastResult::with_gaussian_interval(
                point,
                &vec![0.0; horizon],
            ))
        }
    }

    #[derive(Clone)]
    struct Constant(f64, usize);

    impl Forecaster for Constant {
        fn name(&self) -> String {
            format!("const({})", self.0)
        }
        fn n_params(&self) -> usize {
            self.1
        }
        fn fit_forecast(
            &self,
            _: &HourlySeries,
            _: &[bool],
            horizon: usize,
        ) -> Result<ForecastResult> {
            if self.0 < 0.0 {
                return Err(Error::arg("negative"));
            }
            Ok(ForecastResult::point_only(vec![self.0; horizon]))
        }
    }

    fn series(n: usize) -> HourlySeries {
        let v = (0..n).map(|i| 10.0 + (i % 24) as f64).collect();
        HourlySeries::from_values(parse_timestamp("2024-01-01T00:00:00").unwrap(), v).unwrap()
    }

    #[test]
    fn fold_count_formula() {
        let o = RollingOptions::default();
        assert_eq!(fold_origins(1000, &o).unwrap().len(), (200 - 24) / 24 + 1);
        assert_eq!(fold_origins(1000, &o).unwrap()[0], 800);
        let one = RollingOptions {
            step: 1000,
            ..o.clone()
        };
        assert_eq!(fold_origins(1000, &one).unwrap(), vec![800]);
        assert!(fold_origins(100, &o).is_err());
    }

    #[test]
    fn perfect_foresight_is_perfect() {
        let s = series(500);
        let e = rolling_origin_evaluate(
            &s,
            &[false; 500],
            &Oracle(s.clone()),
            &RollingOptions::default(),
        )
        .unwrap();
        assert_eq!(e.folds.len(), 4);
        assert_eq!(e.mean.rmse, 0.0);
        assert_eq!(e.mean.r_squared, 1.0);
        assert_eq!(e.mean.mape, Some(0.0));
        assert_eq!(e.mean.crps, Some(0.0));
    }

    #[test]
    fn grid_tie_rules() {
        let s = series(500);
        let grid = [
            Constant(5.0, 3),
            Constant(5.0, 1),
            Constant(5.0, 1),
            Constant(-1.0, 0),
        ];
        let r = grid_search(&s, &[false; 500], &grid, &RollingOptions::default()).unwrap();
        assert_eq!(r.best_index, 1);
        assert!(r.scores[3].is_err());
    }

    #[test]
    fn grid_all_fail() {
        let s = series(500);
        let r = grid_search(
            &s,
            &[false; 500],
            &[Constant(-1.0, 0)],
            &RollingOptions::default(),
        );
        assert!(matches!(r, Err(Error::Fit(_))));
    }
}
