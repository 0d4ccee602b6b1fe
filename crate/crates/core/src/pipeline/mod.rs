//! End-to-end orchestration.
//!
//! [`run_pipeline`] loads a campus from CSV and runs disaggregation,
//! feature extraction, clustering, per-cluster forecasting and shedding
//! allocation in that order, writing every intermediate table to the output
//! directory. [`simulate`] does the same on a generated campus and adds
//! qualitative claim checks to the report. Each stage is also exposed on
//! its own so it can run on hand-made inputs.

pub mod artifacts;
pub mod config;
pub mod report;

pub use artifacts::*;
pub use config::PipelineConfig;
pub use report::{
    ClaimCheck, ClusteringSummary, DataSummary, ModelSummary, Provenance, RunReport,
    SheddingSummary,
};

use std::fmt;
use std::path::{Path, PathBuf};

use chrono::Duration;
use sha2::{Digest, Sha256};

use crate::allocate::{default_weights, schedule_shedding, DeficitSchedule, ScheduleResult};
use crate::cluster::{
    compute_validity, fit, label_agreement, select_k, Algorithm, ClusterModel, ValidityReport,
    ValidityRow, NOISE,
};
use crate::data::{
    generate_synthetic_campus_with, load_campus_csv, read_feeder_csv, write_campus_csv,
    CampusDataset, HourlySeries, SyntheticCampus, SyntheticOptions,
};
use crate::disagg::{aim_estimate, reconcile_all, HourFlag};
use crate::forecast::{
    build_cluster_series, rolling_origin_evaluate, ClusterSeries, Forecaster, ModelSpec,
    RollingOptions,
};
use crate::reduce::{extract_features, pca_fit, pca_transform, zscore_normalize, FeatureMatrix};
use crate::{Error, Result};

/// Marker written to the output directory when a run fails.
pub const FAILURE_MARKER: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Generate,
    Disaggregate,
    Features,
    Cluster,
    Forecast,
    Allocate,
    Report,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Disaggregate => "disaggregate",
            Stage::Features => "features",
            Stage::Cluster => "cluster",
            Stage::Forecast => "forecast",
            Stage::Allocate => "allocate",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage '{stage}' failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// File names inside the output directory.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub dir: PathBuf,
}

impl OutputPaths {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn estimates(&self) -> PathBuf {
        self.file("estimates.csv")
    }
    pub fn features(&self) -> PathBuf {
        self.file("features.csv")
    }
    pub fn clusters(&self) -> PathBuf {
        self.file("clusters.csv")
    }
    pub fn validity(&self) -> PathBuf {
        self.file("validity.csv")
    }
    pub fn selection(&self) -> PathBuf {
        self.file("selection.csv")
    }
    pub fn cluster_series(&self) -> PathBuf {
        self.file("cluster_series.csv")
    }
    pub fn metrics(&self) -> PathBuf {
        self.file("metrics.csv")
    }
    pub fn forecast(&self) -> PathBuf {
        self.file("forecast.csv")
    }
    pub fn plan(&self) -> PathBuf {
        self.file("plan.csv")
    }
    pub fn weights(&self) -> PathBuf {
        self.file("weights.csv")
    }
    pub fn report(&self) -> PathBuf {
        self.file("report.txt")
    }
    pub fn marker(&self) -> PathBuf {
        self.file(FAILURE_MARKER)
    }
}

/// Inventory estimates reconciled to the feeder, plus the largest relative
/// feeder balance error over reconciled hours.
pub fn disaggregate(dataset: &CampusDataset) -> Result<(EstimateTable, f64)> {
    let aim = aim_estimate(dataset);
    let rec = reconcile_all(&aim, dataset.feeder())?;
    let mut worst: f64 = 0.0;
    for t in 0..rec.reconciled.n_hours() {
        if rec.flags[t] == HourFlag::Gap {
            continue;
        }
        let feeder = dataset
            .feeder()
            .get(t)
            .expect("reconciled hours have readings");
        let total: f64 = rec.reconciled.row(t).iter().flatten().sum();
        worst = worst.max((total - feeder).abs() / feeder.abs().max(1.0));
    }
    Ok((
        EstimateTable {
            aim,
            reconciled: rec.reconciled,
            flags: rec.flags,
        },
        worst,
    ))
}

/// Per-building features from reconciled loads.
pub fn features(table: &EstimateTable) -> Result<FeatureMatrix> {
    extract_features(&table.reconciled)
}

/// Clustering inputs and results.
#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    /// The space the algorithms ran in: z-scored features, optionally
    /// projected onto principal components.
    pub space: FeatureMatrix,
    pub space_description: String,
    pub model: ClusterModel,
    pub validity: Vec<ValidityRow>,
    /// Algorithms whose partition leaves the indices undefined, with the
    /// number of clusters found and the reason.
    pub undefined: Vec<(Algorithm, usize, String)>,
    pub selection: ValidityReport,
}

/// Z-score, optional PCA, then the configured algorithm at `cluster.k`,
/// every algorithm at that k, and the configured algorithm over the k range.
pub fn cluster(features: &FeatureMatrix, config: &PipelineConfig) -> Result<ClusterOutcome> {
    let algorithm = config.algorithm()?;
    let seed = config.cluster_seed();
    let z = zscore_normalize(features)?.matrix;
    let (space, space_description) = if config.pca.enabled {
        let pca = pca_fit(&z, config.pca.variance_target)?;
        let desc = format!(
            "pca, {} of {} components, {:.1}% variance",
            pca.n_components(),
            z.n_features(),
            100.0 * pca.explained_fraction()
        );
        (pca_transform(&pca, &z)?, desc)
    } else {
        (z, format!("z-scored, {} features", features.n_features()))
    };
    let model = fit(&space, algorithm, config.cluster.k, seed)?;
    let mut validity = Vec::new();
    let mut undefined = Vec::new();
    for a in Algorithm::ALL {
        let m = if a == algorithm {
            model.clone()
        } else {
            fit(&space, a, config.cluster.k, seed)?
        };
        match compute_validity(&space, &m.labels) {
            Ok(scores) => validity.push(ValidityRow {
                algorithm: a,
                k: config.cluster.k,
                found: m.k,
                scores,
            }),
            Err(Error::Undefined(why)) => {
                log::warn!("{a}: validity undefined: {why}");
                undefined.push((a, m.k, why));
            }
            Err(e) => return Err(e),
        }
    }
    let max_k = space.n_rows().saturating_sub(1);
    let range: Vec<usize> = config
        .k_range()
        .into_iter()
        .filter(|&k| k <= max_k)
        .collect();
    let selection = select_k(&space, algorithm, &range, seed)?;
    Ok(ClusterOutcome {
        space,
        space_description,
        model,
        validity,
        undefined,
        selection,
    })
}

/// Rolling-origin scores of every configured model on every cluster.
/// A model that fails on a cluster is recorded rather than aborting.
pub fn evaluate(
    series: &[ClusterSeries],
    calendar: &[bool],
    config: &PipelineConfig,
) -> Result<Vec<ModelSummary>> {
    let base = config.rolling_options()?;
    let mut out = Vec::new();
    for spec in config.model_specs()? {
        let mut per_cluster = Vec::new();
        let mut failures = Vec::new();
        let mut folds = 0;
        for c in series {
            let options = match &spec {
                ModelSpec::Gru(_) if config.forecast.gru_single_split => RollingOptions {
                    step: c.series.len(),
                    ..base.clone()
                },
                _ => base.clone(),
            };
            log::info!("evaluating {} on cluster {}", spec.name(), c.cluster_id);
            match rolling_origin_evaluate(&c.series, calendar, &spec, &options) {
                Ok(e) => {
                    folds += e.folds.len();
                    per_cluster.push((c.cluster_id, e.mean));
                }
                Err(e) => {
                    log::warn!("{} failed on cluster {}: {e}", spec.name(), c.cluster_id);
                    failures.push((c.cluster_id, e.to_string()));
                }
            }
        }
        let means: Vec<_> = per_cluster.iter().map(|(_, m)| *m).collect();
        out.push(ModelSummary {
            model: spec.name(),
            family: spec.family().to_string(),
            folds,
            mean: summarize_metrics(&means),
            per_cluster,
            failures,
        });
    }
    Ok(out)
}

/// Per-model metric rows followed by a summary row per model.
pub fn metrics_rows(summaries: &[ModelSummary]) -> Vec<MetricsRow> {
    let mut rows = Vec::new();
    for m in summaries {
        for (id, mm) in &m.per_cluster {
            rows.push(MetricsRow {
                model: m.family.clone(),
                cluster_id: Some(*id),
                metrics: *mm,
            });
        }
    }
    for m in summaries {
        if let Some(mm) = m.mean {
            rows.push(MetricsRow {
                model: m.family.clone(),
                cluster_id: None,
                metrics: mm,
            });
        }
    }
    rows
}

/// Fit `spec` on each full series and forecast the following `horizon`
/// hours. Future hours are treated as regular days.
pub fn forecast(
    series: &[ClusterSeries],
    calendar: &[bool],
    spec: &ModelSpec,
    horizon: usize,
) -> Result<Vec<ClusterForecast>> {
    series
        .iter()
        .map(|c| {
            let n = c.series.len();
            if calendar.len() != n {
                return Err(Error::arg(format!(
                    "calendar has {} flags for {n} hours",
                    calendar.len()
                )));
            }
            let mut cal = calendar.to_vec();
            cal.resize(n + horizon, false);
            let f = spec.fit_forecast(&c.series, &cal, horizon).map_err(|e| {
                Error::Fit(format!("{} on cluster {}: {e}", spec.name(), c.cluster_id))
            })?;
            Ok(ClusterForecast {
                cluster_id: c.cluster_id,
                start: c.series.start() + Duration::hours(n as i64),
                forecast: f,
            })
        })
        .collect()
}

/// Where hourly supply comes from.
#[derive(Debug, Clone)]
pub enum SupplySource {
    /// Fraction of the forecast total in each hour.
    Fraction(f64),
    /// Readings covering every forecast hour.
    Series(HourlySeries),
}

impl SupplySource {
    pub fn from_config(config: &PipelineConfig) -> Result<Self> {
        match &config.allocate.supply {
            Some(p) => Ok(SupplySource::Series(read_feeder_csv(p)?)),
            None => Ok(SupplySource::Fraction(config.allocate.supply_fraction)),
        }
    }

    pub fn hourly(&self, table: &ForecastTable) -> Result<Vec<f64>> {
        match self {
            SupplySource::Fraction(f) => Ok(table
                .demands
                .iter()
                .map(|d| f * d.iter().sum::<f64>())
                .collect()),
            SupplySource::Series(s) => (0..table.demands.len())
                .map(|h| {
                    let ts = table.timestamp(h);
                    let offset = (ts - s.start()).num_hours();
                    (offset >= 0)
                        .then(|| s.get(offset as usize))
                        .flatten()
                        .ok_or_else(|| Error::Schema(format!("no supply reading for {ts}")))
                })
                .collect(),
        }
    }
}

/// Weights from the config in cluster-id order, or rank-based defaults
/// from mean forecast demand.
pub fn resolve_weights(configured: &[f64], table: &ForecastTable) -> Result<Vec<f64>> {
    let n = table.cluster_ids.len();
    if configured.is_empty() {
        let hours = table.demands.len().max(1) as f64;
        let means: Vec<f64> = (0..n)
            .map(|c| table.demands.iter().map(|d| d[c]).sum::<f64>() / hours)
            .collect();
        return Ok(default_weights(&means));
    }
    if configured.len() != n {
        return Err(Error::arg(format!(
            "{} weights configured for {n} clusters",
            configured.len()
        )));
    }
    Ok(configured.to_vec())
}

/// Shed the hourly deficit between forecast demand and supply.
pub fn allocate(table: &ForecastTable, supply: &[f64], weights: &[f64]) -> Result<ScheduleResult> {
    schedule_shedding(
        &DeficitSchedule::new(supply.to_vec(), table.demands.clone())?,
        weights,
    )
}

/// Forecast table assembled in memory from per-cluster forecasts.
pub fn forecast_table(forecasts: &[ClusterForecast]) -> Result<ForecastTable> {
    let first = forecasts
        .first()
        .ok_or_else(|| Error::arg("no cluster forecasts"))?;
    let h = first.forecast.horizon();
    if forecasts
        .iter()
        .any(|f| f.start != first.start || f.forecast.horizon() != h)
    {
        return Err(Error::arg("cluster forecasts cover different hours"));
    }
    Ok(ForecastTable {
        start: first.start,
        cluster_ids: forecasts.iter().map(|f| f.cluster_id).collect(),
        demands: (0..h)
            .map(|i| {
                forecasts
                    .iter()
                    .map(|f| f.forecast.point[i].max(0.0))
                    .collect()
            })
            .collect(),
    })
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs every stage on `dataset`, writing artifacts under `out`.
fn run_on_dataset(
    config: &PipelineConfig,
    dataset: &CampusDataset,
    inputs: Vec<(String, String)>,
    planted: Option<&[usize]>,
    out: &OutputPaths,
) -> std::result::Result<RunReport, StageError> {
    use Stage::*;

    let (table, balance) = disaggregate(dataset).at(Disaggregate)?;
    write_estimates_csv(&out.estimates(), &table).at(Disaggregate)?;

    let feats = features(&table).at(Features)?;
    write_features_csv(&out.features(), &feats).at(Features)?;

    let outcome = cluster(&feats, config).at(Cluster)?;
    let model = &outcome.model;
    write_clusters_csv(&out.clusters(), &feats.building_ids, &model.labels).at(Cluster)?;
    write_validity_csv(&out.validity(), &outcome.validity).at(Cluster)?;
    write_validity_csv(&out.selection(), &outcome.selection.rows).at(Cluster)?;
    let mut sizes: Vec<(i32, usize)> = (0..model.k as i32)
        .map(|c| (c, model.members(c).len()))
        .collect();
    if model.noise_count() > 0 {
        sizes.push((NOISE, model.noise_count()));
    }
    let planted_accuracy = planted
        .map(|p| label_agreement(&model.labels, p))
        .transpose()
        .at(Cluster)?;

    let observed = table.observed().at(Forecast)?;
    let series = build_cluster_series(&observed, model).at(Forecast)?;
    write_cluster_series_csv(&out.cluster_series(), &series).at(Forecast)?;
    let summaries = evaluate(&series, dataset.calendar(), config).at(Forecast)?;
    write_metrics_csv(&out.metrics(), &metrics_rows(&summaries)).at(Forecast)?;
    let family = if config.allocate.model == "best" {
        summaries
            .iter()
            .filter_map(|m| m.mean.map(|mm| (m.family.clone(), mm.rmse)))
            .fold(None, |best: Option<(String, f64)>, (f, r)| match best {
                Some((_, b)) if b <= r => best,
                _ => Some((f, r)),
            })
            .map(|(f, _)| f)
            .ok_or_else(|| Error::Fit("no model could be scored on any cluster".into()))
            .at(Forecast)?
    } else {
        config.allocate.model.clone()
    };
    let spec = config.model_spec(&family).at(Forecast)?;
    let forecasts =
        forecast(&series, dataset.calendar(), &spec, config.forecast.horizon).at(Forecast)?;
    write_forecast_csv(&out.forecast(), &forecasts).at(Forecast)?;

    let ftable = forecast_table(&forecasts).at(Allocate)?;
    let supply = SupplySource::from_config(config)
        .and_then(|s| s.hourly(&ftable))
        .at(Allocate)?;
    let weights = resolve_weights(&config.allocate.weights, &ftable).at(Allocate)?;
    let schedule = allocate(&ftable, &supply, &weights).at(Allocate)?;
    write_plan_csv(
        &out.plan(),
        ftable.start,
        &ftable.cluster_ids,
        &ftable.demands,
        &schedule.plans,
    )
    .at(Allocate)?;
    write_weights_csv(&out.weights(), &ftable.cluster_ids, &weights).at(Allocate)?;

    let mut seeds = vec![
        ("root".to_string(), config.seed),
        ("cluster".to_string(), config.cluster_seed()),
    ];
    if config.forecast.models.iter().any(|m| m == "gru") {
        seeds.push(("gru".to_string(), config.gru_seed()));
    }
    let report = RunReport {
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            seeds,
            inputs,
        },
        data: DataSummary {
            n_buildings: table.aim.n_buildings(),
            n_hours: table.aim.n_hours(),
            gap_hours: table.flags.iter().filter(|&&f| f == HourFlag::Gap).count(),
            uniform_split_hours: table
                .flags
                .iter()
                .filter(|&&f| f == HourFlag::UniformSplit)
                .count(),
            max_balance_error: balance,
            feature_space: outcome.space_description.clone(),
        },
        clustering: ClusteringSummary {
            algorithm: config.cluster.algorithm.clone(),
            k: config.cluster.k,
            sizes,
            validity: outcome.validity.clone(),
            undefined: outcome
                .undefined
                .iter()
                .map(|(a, k, why)| (a.as_str().to_string(), *k, why.clone()))
                .collect(),
            selection: outcome.selection.clone(),
            planted_accuracy,
        },
        forecasting: summaries,
        shedding: SheddingSummary {
            model: spec.name(),
            hours: ftable.demands.len(),
            deficit_hours: schedule
                .plans
                .iter()
                .filter(|p| p.total_shed > 0.0 || !p.feasible)
                .count(),
            infeasible_hours: schedule.plans.iter().filter(|p| !p.feasible).count(),
            total_demand: ftable.demands.iter().flatten().sum(),
            total_supply: supply.iter().sum(),
            total_shed: schedule.plans.iter().map(|p| p.total_shed).sum(),
            objective: schedule.plans.iter().map(|p| p.objective).sum(),
            per_cluster: ftable
                .cluster_ids
                .iter()
                .zip(&weights)
                .zip(&schedule.totals)
                .map(|((&id, &w), &t)| (id, w, t))
                .collect(),
        },
        claims: Vec::new(),
    };
    Ok(report)
}

fn finish(
    out: &OutputPaths,
    result: std::result::Result<RunReport, StageError>,
) -> std::result::Result<RunReport, StageError> {
    let marker = out.marker();
    match result {
        Ok(report) => {
            std::fs::write(out.report(), report.render())
                .map_err(|e| Error::io(out.report(), e))
                .at(Stage::Report)?;
            if marker.exists() {
                std::fs::remove_file(&marker)
                    .map_err(|e| Error::io(&marker, e))
                    .at(Stage::Report)?;
            }
            Ok(report)
        }
        Err(e) => {
            let body = format!("stage: {}\nerror: {}\n", e.stage, e.source);
            if let Err(io) = std::fs::write(&marker, body) {
                log::error!("could not write {}: {io}", marker.display());
            }
            Err(e)
        }
    }
}

/// Load the campus named in `config.paths` and run every stage.
pub fn run_pipeline(config: &PipelineConfig) -> std::result::Result<RunReport, StageError> {
    let out = OutputPaths::new(&config.paths.output_dir);
    ensure_dir(&out.dir).at(Stage::Report)?;
    let result = (|| {
        let missing = |what: &str| Error::Config(format!("paths.{what} is not set"));
        let feeder = config
            .paths
            .feeder
            .as_deref()
            .ok_or_else(|| missing("feeder"))
            .at(Stage::Disaggregate)?;
        let inventory = config
            .paths
            .inventory
            .as_deref()
            .ok_or_else(|| missing("inventory"))
            .at(Stage::Disaggregate)?;
        let calendar = config.paths.calendar.as_deref();
        let dataset = load_campus_csv(feeder, inventory, calendar).at(Stage::Disaggregate)?;
        let mut inputs = vec![
            (
                "feeder".to_string(),
                sha256_file(feeder).at(Stage::Disaggregate)?,
            ),
            (
                "inventory".to_string(),
                sha256_file(inventory).at(Stage::Disaggregate)?,
            ),
        ];
        if let Some(c) = calendar {
            inputs.push((
                "calendar".to_string(),
                sha256_file(c).at(Stage::Disaggregate)?,
            ));
        }
        run_on_dataset(config, &dataset, inputs, None, &out)
    })();
    finish(&out, result)
}

/// Synthetic campus described by `config.generator`.
pub fn generate(config: &PipelineConfig) -> Result<SyntheticCampus> {
    let g = &config.generator;
    let options = SyntheticOptions {
        gap_rate: g.gap_rate,
        ..SyntheticOptions::default()
    };
    generate_synthetic_campus_with(
        config.generator_seed(),
        g.n_buildings,
        g.n_hours,
        &g.cluster_sizes,
        &options,
    )
}

/// Writes the campus CSVs and the planted groups (`building_id,label`)
/// into `dir`.
pub fn write_synthetic(campus: &SyntheticCampus, dir: &Path) -> Result<()> {
    write_campus_csv(&campus.dataset, dir)?;
    let labels: Vec<i32> = campus.planted.iter().map(|&g| g as i32).collect();
    write_clusters_csv(
        &dir.join("planted.csv"),
        &campus.dataset.building_ids(),
        &labels,
    )
}

/// Generate a campus, run every stage on it and check the qualitative
/// claims: silhouette peaks at k = 3 and the additive model has the lowest
/// mean RMSE.
pub fn simulate(config: &PipelineConfig) -> std::result::Result<RunReport, StageError> {
    let out = OutputPaths::new(&config.paths.output_dir);
    ensure_dir(&out.dir).at(Stage::Report)?;
    let result = (|| {
        let campus = generate(config).at(Stage::Generate)?;
        write_synthetic(&campus, &out.file("data")).at(Stage::Generate)?;
        let g = &config.generator;
        let inputs = vec![(
            "synthetic".to_string(),
            format!(
                "seed {}, {} buildings, {} hours, groups {:?}, gap rate {}",
                config.generator_seed(),
                g.n_buildings,
                g.n_hours,
                g.cluster_sizes,
                g.gap_rate
            ),
        )];
        let mut report =
            run_on_dataset(config, &campus.dataset, inputs, Some(&campus.planted), &out)?;
        report.claims = claim_checks(&report, config);
        Ok(report)
    })();
    finish(&out, result)
}

fn claim_checks(report: &RunReport, config: &PipelineConfig) -> Vec<ClaimCheck> {
    let sel = &report.clustering.selection;
    let k_claim = ClaimCheck {
        claim: "silhouette argmax at k = 3".into(),
        holds: Some(sel.best_silhouette_k == 3),
        detail: format!(
            "{} over k = {}..{} peaks at k = {}",
            config.cluster.algorithm,
            config.cluster.k_min,
            config.cluster.k_max,
            sel.best_silhouette_k
        ),
    };
    let scored: Vec<String> = report
        .forecasting
        .iter()
        .filter_map(|m| m.mean.map(|mm| format!("{} {:.4}", m.family, mm.rmse)))
        .collect();
    let prophet_scored = report.model("prophet").is_some_and(|m| m.mean.is_some());
    let rmse_claim = ClaimCheck {
        claim: "additive (prophet-style) model has the lowest mean RMSE".into(),
        holds: (prophet_scored && scored.len() > 1)
            .then(|| report.best_family() == Some("prophet")),
        detail: if scored.is_empty() {
            "no model scored".into()
        } else {
            format!("mean RMSE: {}", scored.join(", "))
        },
    };
    vec![k_claim, rmse_claim]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_config(out: &Path) -> PipelineConfig {
        let mut c = PipelineConfig::default();
        c.paths.output_dir = out.to_path_buf();
        c.generator.n_hours = 24 * 7 * 4;
        c.forecast.models = vec!["arima".into(), "prophet".into()];
        c.forecast.step = 96;
        c
    }

    #[test]
    fn simulate_writes_artifacts_and_claims() {
        let dir = tempfile::tempdir().unwrap();
        let r = simulate(&fast_config(dir.path())).unwrap();
        assert_eq!(r.clustering.validity.len(), 6);
        assert_eq!(r.claims.len(), 2);
        assert!(r.data.max_balance_error < 1e-9);
        let out = OutputPaths::new(dir.path());
        for p in [
            out.estimates(),
            out.features(),
            out.clusters(),
            out.validity(),
            out.selection(),
            out.cluster_series(),
            out.metrics(),
            out.forecast(),
            out.plan(),
            out.weights(),
            out.report(),
        ] {
            assert!(p.exists(), "{}", p.display());
        }
        assert!(!out.marker().exists());
        assert!(dir.path().join("data/planted.csv").exists());
    }

    #[test]
    fn missing_inventory_is_a_disaggregate_failure() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = fast_config(dir.path());
        c.paths.feeder = Some(dir.path().join("feeder.csv"));
        c.paths.inventory = Some(dir.path().join("nope.csv"));
        std::fs::write(
            dir.path().join("feeder.csv"),
            "timestamp,kwh\n2024-01-01T00:00:00,1\n",
        )
        .unwrap();
        let e = run_pipeline(&c).unwrap_err();
        assert_eq!(e.stage, Stage::Disaggregate);
        assert!(e.to_string().contains("nope.csv"));
        let marker = std::fs::read_to_string(dir.path().join(FAILURE_MARKER)).unwrap();
        assert!(marker.starts_with("stage: disaggregate"));
    }

    #[test]
    fn supply_series_alignment() {
        let start = crate::data::parse_timestamp("2024-01-02T00:00:00").unwrap();
        let t = ForecastTable {
            start,
            cluster_ids: vec![0, 1],
            demands: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        };
        let s = HourlySeries::from_values(
            crate::data::parse_timestamp("2024-01-01T23:00:00").unwrap(),
            vec![9.0, 5.0, 6.0],
        )
        .unwrap();
        assert_eq!(
            SupplySource::Series(s.clone()).hourly(&t).unwrap(),
            vec![5.0, 6.0]
        );
        assert_eq!(
            SupplySource::Fraction(0.5).hourly(&t).unwrap(),
            vec![1.5, 3.5]
        );
        let short = s.slice(0..2).unwrap();
        assert!(SupplySource::Series(short).hourly(&t).is_err());
    }

    #[test]
    fn configured_weights_must_match_clusters() {
        let start = crate::data::parse_timestamp("2024-01-02T00:00:00").unwrap();
        let t = ForecastTable {
            start,
            cluster_ids: vec![0, 1, 2],
            demands: vec![vec![1.0, 5.0, 3.0]],
        };
        assert_eq!(resolve_weights(&[], &t).unwrap(), vec![1.0, 3.0, 2.0]);
        assert!(resolve_weights(&[1.0], &t).is_err());
    }
}
