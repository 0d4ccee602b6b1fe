//! `gridshed` command-line front end.
//!
//! Every stage has its own subcommand reading and writing the CSV formats
//! documented in `gridshed::pipeline::artifacts`; `run` and `simulate`
//! chain all of them. Exit codes: 0 success, 2 config error, 3 input
//! error, 4 stage failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridshed::data::{read_calendar_csv, HourlySeries};
use gridshed::forecast::ClusterSeries;
use gridshed::pipeline::{
    self, OutputPaths, PipelineConfig, RunReport, Stage, StageError, SupplySource,
};
use gridshed::Error;

#[derive(Parser, Debug)]
#[command(
    name = "gridshed",
    version,
    about = "Campus load estimation, clustering, forecasting and load shedding"
)]
struct Cli {
    /// TOML config file (`section.key = value` lines or tables).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory. For single-stage commands a path ending in `.csv`
    /// names the main output file instead; companions go beside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,

    /// Override a config key, e.g. `--set cluster.k=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct GeneratorArgs {
    /// Number of buildings (defaults to the sum of the group sizes).
    #[arg(long)]
    buildings: Option<usize>,

    /// Hours to generate.
    #[arg(long)]
    hours: Option<usize>,

    /// Planted group sizes, e.g. `9,37,9`.
    #[arg(long, value_delimiter = ',')]
    cluster_sizes: Option<Vec<usize>>,

    /// Fraction of feeder hours turned into gaps.
    #[arg(long)]
    gaps: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct InputArgs {
    /// Feeder readings, `timestamp,kwh`.
    #[arg(long)]
    feeder: Option<PathBuf>,
    /// Appliance inventory, one row per appliance.
    #[arg(long)]
    inventory: Option<PathBuf>,
    /// Holiday calendar, `timestamp,is_holiday`.
    #[arg(long)]
    calendar: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic campus (feeder, inventory, calendar, planted groups).
    Generate(GeneratorArgs),
    /// Inventory estimates reconciled to the feeder.
    Disaggregate(InputArgs),
    /// Per-building features from an estimates table.
    Features {
        /// Estimates table written by `disaggregate`.
        #[arg(long)]
        estimates: PathBuf,
    },
    /// Cluster buildings from a features table.
    Cluster {
        /// Features table written by `features`.
        #[arg(long)]
        features: PathBuf,
        /// Also write per-cluster load series from this estimates table.
        #[arg(long)]
        estimates: Option<PathBuf>,
        /// Clustering algorithm.
        #[arg(long)]
        algorithm: Option<String>,
        /// Number of clusters.
        #[arg(long)]
        k: Option<usize>,
        /// Tabulate validity indices over a k range, e.g. `2..8`.
        #[arg(long, value_name = "MIN..MAX")]
        select_k: Option<String>,
    },
    /// Forecast each cluster series past its end.
    Forecast {
        /// Cluster series, `timestamp,cluster_id,kwh`.
        #[arg(long)]
        series: PathBuf,
        /// Holiday calendar covering the series and horizon.
        #[arg(long)]
        calendar: Option<PathBuf>,
        /// Model family: arima, sarima, prophet or gru.
        #[arg(long, default_value = "prophet")]
        model: String,
        /// Hours to forecast.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Rolling-origin evaluation of the configured models.
    Evaluate {
        /// Cluster series, `timestamp,cluster_id,kwh`.
        #[arg(long)]
        series: PathBuf,
        /// Holiday calendar covering the series.
        #[arg(long)]
        calendar: Option<PathBuf>,
        /// Families to score, comma separated, or `all`.
        #[arg(long = "model", alias = "models", value_delimiter = ',')]
        models: Option<Vec<String>>,
    },
    /// Shed forecast demand exceeding supply.
    Allocate {
        /// Forecast table written by `forecast`.
        #[arg(long)]
        forecast: PathBuf,
        /// `timestamp,kwh` supply readings.
        #[arg(long)]
        supply: Option<PathBuf>,
        /// Supply as a fraction of forecast demand, when no supply file is given.
        #[arg(long)]
        supply_fraction: Option<f64>,
        /// `cluster_id,weight` priorities.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Run every stage on the campus named in the config.
    Run(InputArgs),
    /// Generate a synthetic campus and run every stage with claim checks.
    Simulate {
        #[command(flatten)]
        generator: GeneratorArgs,
        /// Families to score, comma separated.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
    },
}

enum Failure {
    Config(Error),
    Stage(StageError),
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure::Stage(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Stage(e) => match e.source {
                Error::Config(_) => 2,
                Error::Io { .. }
                | Error::Parse { .. }
                | Error::Schema(_)
                | Error::Csv(_)
                | Error::Validation(_) => 3,
                _ => 4,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(e) => e.to_string(),
            Failure::Stage(e) => e.to_string(),
        }
    }
}

fn at(stage: Stage) -> impl FnOnce(Error) -> Failure {
    move |source| Failure::Stage(StageError { stage, source })
}

fn is_single_stage(c: &Command) -> bool {
    !matches!(
        c,
        Command::Generate(_) | Command::Run(_) | Command::Simulate { .. }
    )
}

/// `--out` when it names the main output file of a single-stage command.
fn primary_file(cli: &Cli) -> Option<&Path> {
    cli.out
        .as_deref()
        .filter(|p| is_single_stage(&cli.command) && p.extension().is_some_and(|e| e == "csv"))
}

fn apply_generator(config: &mut PipelineConfig, g: &GeneratorArgs) {
    if let Some(sizes) = &g.cluster_sizes {
        config.generator.cluster_sizes = sizes.clone();
        config.generator.n_buildings = sizes.iter().sum();
    }
    if let Some(n) = g.buildings {
        config.generator.n_buildings = n;
    }
    if let Some(h) = g.hours {
        config.generator.n_hours = h;
    }
    if let Some(r) = g.gaps {
        config.generator.gap_rate = r;
    }
}

fn apply_inputs(config: &mut PipelineConfig, i: &InputArgs) {
    if let Some(p) = &i.feeder {
        config.paths.feeder = Some(p.clone());
    }
    if let Some(p) = &i.inventory {
        config.paths.inventory = Some(p.clone());
    }
    if let Some(p) = &i.calendar {
        config.paths.calendar = Some(p.clone());
    }
}

/// File config, then `--set` overrides, then dedicated flags.
fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let overrides = cli
        .set
        .iter()
        .map(|s| PipelineConfig::parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut config = PipelineConfig::load(cli.config.as_deref(), &overrides)?;
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(o) = &cli.out {
        config.paths.output_dir = match primary_file(cli) {
            Some(f) => f
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .to_path_buf(),
            None => o.clone(),
        };
    }
    match &cli.command {
        Command::Generate(g) => apply_generator(&mut config, g),
        Command::Simulate { generator, models } => {
            apply_generator(&mut config, generator);
            if let Some(m) = models {
                config.forecast.models = m.clone();
                if !m.contains(&config.allocate.model) {
                    config.allocate.model = "best".into();
                }
            }
        }
        Command::Disaggregate(i) | Command::Run(i) => apply_inputs(&mut config, i),
        Command::Cluster {
            algorithm,
            k,
            select_k,
            ..
        } => {
            if let Some(a) = algorithm {
                config.cluster.algorithm = a.clone();
            }
            if let Some(k) = k {
                config.cluster.k = *k;
            }
            if let Some(r) = select_k {
                let (lo, hi) = r
                    .split_once("..")
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                    .ok_or_else(|| {
                        Error::Config(format!("--select-k expects MIN..MAX, got '{r}'"))
                    })?;
                config.cluster.k_min = lo;
                config.cluster.k_max = hi;
            }
        }
        Command::Forecast { horizon, model, .. } => {
            if let Some(h) = horizon {
                config.forecast.horizon = *h;
            }
            config.model_spec(model)?;
        }
        Command::Evaluate { models, .. } => {
            if let Some(m) = models.as_ref().filter(|m| m.as_slice() != ["all"]) {
                config.forecast.models = m.clone();
                config.allocate.model = "best".into();
            }
        }
        Command::Allocate {
            supply,
            supply_fraction,
            ..
        } => {
            if let Some(p) = supply {
                config.allocate.supply = Some(p.clone());
            }
            if let Some(f) = supply_fraction {
                config.allocate.supply_fraction = *f;
            }
        }
        Command::Features { .. } => {}
    }
    config.validate()?;
    Ok(config)
}

fn prepare_out(config: &PipelineConfig) -> Result<OutputPaths, Failure> {
    let out = OutputPaths::new(&config.paths.output_dir);
    std::fs::create_dir_all(&out.dir)
        .map_err(|e| Error::Io {
            path: out.dir.clone(),
            source: e,
        })
        .map_err(at(Stage::Report))?;
    Ok(out)
}

fn calendar_for(path: Option<&Path>, series: &[ClusterSeries]) -> Result<Vec<bool>, Error> {
    let axis: &HourlySeries = &series
        .first()
        .ok_or_else(|| Error::Schema("no cluster series".into()))?
        .series;
    if series
        .iter()
        .any(|c| c.series.start() != axis.start() || c.series.len() != axis.len())
    {
        return Err(Error::Schema("cluster series cover different hours".into()));
    }
    match path {
        Some(p) => read_calendar_csv(p, axis),
        None => Ok(vec![false; axis.len()]),
    }
}

fn say(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn print_report(quiet: bool, report: &RunReport) {
    if !quiet {
        print!("{}", report.render());
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let config = load_config(cli).map_err(Failure::Config)?;
    let quiet = cli.quiet;
    let target = |default: PathBuf| primary_file(cli).map(Path::to_path_buf).unwrap_or(default);
    match &cli.command {
        Command::Generate(_) => {
            let out = prepare_out(&config)?;
            let campus = pipeline::generate(&config).map_err(at(Stage::Generate))?;
            pipeline::write_synthetic(&campus, &out.dir).map_err(at(Stage::Generate))?;
            say(
                quiet,
                format!("wrote synthetic campus to {}", out.dir.display()),
            );
        }
        Command::Disaggregate(_) => {
            let out = prepare_out(&config)?;
            let missing =
                |what: &str| Error::Config(format!("--{what} (or paths.{what}) is required"));
            let feeder = config
                .paths
                .feeder
                .as_deref()
                .ok_or_else(|| missing("feeder"))
                .map_err(at(Stage::Disaggregate))?;
            let inventory = config
                .paths
                .inventory
                .as_deref()
                .ok_or_else(|| missing("inventory"))
                .map_err(at(Stage::Disaggregate))?;
            let dataset = gridshed::data::load_campus_csv(
                feeder,
                inventory,
                config.paths.calendar.as_deref(),
            )
            .map_err(at(Stage::Disaggregate))?;
            let (table, balance) =
                pipeline::disaggregate(&dataset).map_err(at(Stage::Disaggregate))?;
            pipeline::write_estimates_csv(&target(out.estimates()), &table)
                .map_err(at(Stage::Disaggregate))?;
            say(
                quiet,
                format!(
                    "wrote {} (max balance error {balance:.2e})",
                    target(out.estimates()).display()
                ),
            );
        }
        Command::Features { estimates } => {
            let out = prepare_out(&config)?;
            let table = pipeline::read_estimates_csv(estimates).map_err(at(Stage::Features))?;
            let f = pipeline::features(&table).map_err(at(Stage::Features))?;
            pipeline::write_features_csv(&target(out.features()), &f)
                .map_err(at(Stage::Features))?;
            say(quiet, format!("wrote {}", target(out.features()).display()));
        }
        Command::Cluster {
            features,
            estimates,
            select_k,
            ..
        } => {
            let out = prepare_out(&config)?;
            let f = pipeline::read_features_csv(features).map_err(at(Stage::Cluster))?;
            let outcome = pipeline::cluster(&f, &config).map_err(at(Stage::Cluster))?;
            pipeline::write_clusters_csv(
                &target(out.clusters()),
                &f.building_ids,
                &outcome.model.labels,
            )
            .map_err(at(Stage::Cluster))?;
            pipeline::write_validity_csv(&out.validity(), &outcome.validity)
                .map_err(at(Stage::Cluster))?;
            if select_k.is_some() {
                pipeline::write_validity_csv(&out.selection(), &outcome.selection.rows)
                    .map_err(at(Stage::Cluster))?;
                say(
                    quiet,
                    format!(
                        "silhouette peaks at k = {}",
                        outcome.selection.best_silhouette_k
                    ),
                );
            }
            if let Some(e) = estimates {
                let table = pipeline::read_estimates_csv(e).map_err(at(Stage::Cluster))?;
                let labels = pipeline::align_labels(
                    &f.building_ids
                        .iter()
                        .cloned()
                        .zip(outcome.model.labels.iter().copied())
                        .collect::<Vec<_>>(),
                    table.reconciled.building_ids(),
                )
                .map_err(at(Stage::Cluster))?;
                let observed = table.observed().map_err(at(Stage::Cluster))?;
                let series = gridshed::forecast::cluster_series_from_labels(
                    &observed,
                    &labels,
                    outcome.model.k,
                )
                .map_err(at(Stage::Cluster))?;
                pipeline::write_cluster_series_csv(&out.cluster_series(), &series)
                    .map_err(at(Stage::Cluster))?;
            }
            say(quiet, format!("wrote {}", target(out.clusters()).display()));
        }
        Command::Forecast {
            series,
            calendar,
            model,
            ..
        } => {
            let out = prepare_out(&config)?;
            let s = pipeline::read_cluster_series_csv(series).map_err(at(Stage::Forecast))?;
            let cal = calendar_for(calendar.as_deref(), &s).map_err(at(Stage::Forecast))?;
            let spec = config.model_spec(model).map_err(Failure::Config)?;
            let f = pipeline::forecast(&s, &cal, &spec, config.forecast.horizon)
                .map_err(at(Stage::Forecast))?;
            pipeline::write_forecast_csv(&target(out.forecast()), &f)
                .map_err(at(Stage::Forecast))?;
            say(quiet, format!("wrote {}", target(out.forecast()).display()));
        }
        Command::Evaluate {
            series, calendar, ..
        } => {
            let out = prepare_out(&config)?;
            let s = pipeline::read_cluster_series_csv(series).map_err(at(Stage::Forecast))?;
            let cal = calendar_for(calendar.as_deref(), &s).map_err(at(Stage::Forecast))?;
            let summaries = pipeline::evaluate(&s, &cal, &config).map_err(at(Stage::Forecast))?;
            pipeline::write_metrics_csv(
                &target(out.metrics()),
                &pipeline::metrics_rows(&summaries),
            )
            .map_err(at(Stage::Forecast))?;
            for m in &summaries {
                match m.mean {
                    Some(mm) => say(quiet, format!("{:<8} mean rmse {:.4}", m.family, mm.rmse)),
                    None => say(quiet, format!("{:<8} failed on every cluster", m.family)),
                }
            }
            if summaries.iter().all(|m| m.mean.is_none()) {
                return Err(Failure::Stage(StageError {
                    stage: Stage::Forecast,
                    source: Error::Fit("no model could be scored".into()),
                }));
            }
        }
        Command::Allocate {
            forecast, weights, ..
        } => {
            let out = prepare_out(&config)?;
            let table = pipeline::read_forecast_csv(forecast).map_err(at(Stage::Allocate))?;
            let supply = SupplySource::from_config(&config)
                .and_then(|s| s.hourly(&table))
                .map_err(at(Stage::Allocate))?;
            let w = match weights {
                Some(p) => pipeline::read_weights_csv(p, &table.cluster_ids),
                None => pipeline::resolve_weights(&config.allocate.weights, &table),
            }
            .map_err(at(Stage::Allocate))?;
            let schedule = pipeline::allocate(&table, &supply, &w).map_err(at(Stage::Allocate))?;
            pipeline::write_plan_csv(
                &target(out.plan()),
                table.start,
                &table.cluster_ids,
                &table.demands,
                &schedule.plans,
            )
            .map_err(at(Stage::Allocate))?;
            pipeline::write_weights_csv(&out.weights(), &table.cluster_ids, &w)
                .map_err(at(Stage::Allocate))?;
            let shed: f64 = schedule.plans.iter().map(|p| p.total_shed).sum();
            let infeasible = schedule.plans.iter().filter(|p| !p.feasible).count();
            say(
                quiet,
                format!(
                    "shed {shed:.3} kWh over {} hours ({infeasible} infeasible)",
                    schedule.plans.len()
                ),
            );
        }
        Command::Run(_) => {
            let report = pipeline::run_pipeline(&config)?;
            print_report(quiet, &report);
        }
        Command::Simulate { .. } => {
            let report = pipeline::simulate(&config)?;
            print_report(quiet, &report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
