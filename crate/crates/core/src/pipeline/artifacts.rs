//! CSV formats exchanged between stages.
//!
//! | file | header |
//! |------|--------|
//! | estimates | `timestamp,building_id,kwh_aim,kwh_reconciled,flag` |
//! | features | `building_id,<feature names>` |
//! | clusters | `building_id,label` |
//! | validity | `algorithm,k,silhouette,davies_bouldin,calinski_harabasz,wcss` |
//! | cluster series | `timestamp,cluster_id,kwh` |
//! | forecast | `timestamp,cluster_id,point,lower,upper` |
//! | metrics | `model,cluster_id,rmse,mape,r2,crps` |
//! | plan | `timestamp,cluster_id,demand_kwh,shed_kwh,feasible` |
//! | weights | `cluster_id,weight` |
//!
//! Empty fields mark gaps and absent values.

use std::collections::HashMap;
use std::path::Path;

use chrono::NaiveDateTime;

use crate::allocate::SheddingPlan;
use crate::cluster::ValidityRow;
use crate::data::{
    check_header, create_writer, format_kwh, format_timestamp, open_reader, parse_err,
    parse_timestamp, record_line, HourlySeries,
};
use crate::disagg::{BuildingEstimates, HourFlag};
use crate::forecast::{ClusterSeries, ForecastResult, MeanMetrics, Metrics};
use crate::linalg::Matrix;
use crate::reduce::FeatureMatrix;
use crate::{Error, Result};

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(format_kwh).unwrap_or_default()
}

fn flush(w: &mut csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_f64(path: &Path, line: usize, name: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| parse_err(path, line, format!("invalid {name} '{raw}'")))
}

fn parse_opt_f64(path: &Path, line: usize, name: &str, raw: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_f64(path, line, name, raw).map(Some)
    }
}

fn parse_label(path: &Path, line: usize, raw: &str) -> Result<i32> {
    raw.parse()
        .map_err(|_| parse_err(path, line, format!("invalid cluster id '{raw}'")))
}

fn parse_flag(path: &Path, line: usize, raw: &str) -> Result<HourFlag> {
    [HourFlag::Reconciled, HourFlag::Gap, HourFlag::UniformSplit]
        .into_iter()
        .find(|f| f.as_str() == raw)
        .ok_or_else(|| parse_err(path, line, format!("unknown flag '{raw}'")))
}

fn check_hourly(
    path: &Path,
    line: usize,
    start: NaiveDateTime,
    index: usize,
    ts: NaiveDateTime,
) -> Result<()> {
    let expected = start + chrono::Duration::hours(index as i64);
    if ts != expected {
        return Err(Error::Schema(format!(
            "{}: line {line}: expected timestamp {}, found {}",
            path.display(),
            format_timestamp(expected),
            format_timestamp(ts)
        )));
    }
    Ok(())
}

/// Inventory estimates, reconciled values and per-hour flags.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTable {
    pub aim: BuildingEstimates,
    pub reconciled: BuildingEstimates,
    pub flags: Vec<HourFlag>,
}

impl EstimateTable {
    /// Reconciled values with feeder-gap hours masked out.
    pub fn observed(&self) -> Result<BuildingEstimates> {
        let nb = self.reconciled.n_buildings();
        let data = (0..self.reconciled.n_hours())
            .flat_map(|t| {
                let gap = self.flags[t] == HourFlag::Gap;
                (0..nb).map(move |b| (t, b, gap))
            })
            .map(|(t, b, gap)| if gap { None } else { self.reconciled.get(t, b) })
            .collect();
        BuildingEstimates::new(
            self.reconciled.start(),
            self.reconciled.building_ids().to_vec(),
            self.reconciled.n_hours(),
            data,
        )
    }
}

pub fn write_estimates_csv(path: &Path, table: &EstimateTable) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record([
        "timestamp",
        "building_id",
        "kwh_aim",
        "kwh_reconciled",
        "flag",
    ])?;
    let axis = table.aim.axis();
    for t in 0..table.aim.n_hours() {
        let ts = format_timestamp(axis.timestamp(t));
        for (b, id) in table.aim.building_ids().iter().enumerate() {
            w.write_record([
                ts.as_str(),
                id,
                &opt(table.aim.get(t, b)),
                &opt(table.reconciled.get(t, b)),
                table.flags[t].as_str(),
            ])?;
        }
    }
    flush(&mut w, path)
}

/// Rows must run hour by hour with every building listed in the same order
/// each hour.
pub fn read_estimates_csv(path: &Path) -> Result<EstimateTable> {
    let mut reader = open_reader(path)?;
    check_header(
        &mut reader,
        path,
        &header(&[
            "timestamp",
            "building_id",
            "kwh_aim",
            "kwh_reconciled",
            "flag",
        ]),
    )?;
    let mut ids: Vec<String> = Vec::new();
    let mut start: Option<NaiveDateTime> = None;
    let mut aim = Vec::new();
    let mut rec = Vec::new();
    let mut flags: Vec<HourFlag> = Vec::new();
    let mut hour = 0usize;
    let mut pos = 0usize;
    let mut ids_closed = false;
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 5 {
            return Err(parse_err(
                path,
                line,
                format!("expected 5 fields, found {}", record.len()),
            ));
        }
        let ts = parse_timestamp(&record[0]).map_err(|e| parse_err(path, line, e.to_string()))?;
        let s = *start.get_or_insert(ts);
        if !ids_closed && ts != s {
            ids_closed = true;
        }
        if !ids_closed {
            if ids.iter().any(|i| i == &record[1]) {
                return Err(parse_err(
                    path,
                    line,
                    format!("building '{}' repeated within an hour", &record[1]),
                ));
            }
            ids.push(record[1].to_string());
        } else {
            if pos == ids.len() {
                pos = 0;
                hour += 1;
            }
            if record[1] != ids[pos] {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected building '{}', found '{}'", ids[pos], &record[1]),
                ));
            }
        }
        check_hourly(path, line, s, hour, ts)?;
        let flag = parse_flag(path, line, &record[4])?;
        if pos == 0 {
            flags.push(flag);
        } else if flags[hour] != flag {
            return Err(parse_err(path, line, "flag differs within an hour"));
        }
        aim.push(parse_opt_f64(path, line, "kwh_aim", &record[2])?);
        rec.push(parse_opt_f64(path, line, "kwh_reconciled", &record[3])?);
        pos += 1;
    }
    let start = start.ok_or_else(|| Error::Schema(format!("{}: no data rows", path.display())))?;
    if ids_closed && pos != ids.len() {
        return Err(Error::Schema(format!(
            "{}: final hour is incomplete",
            path.display()
        )));
    }
    let n_hours = flags.len();
    Ok(EstimateTable {
        aim: BuildingEstimates::new(start, ids.clone(), n_hours, aim)?,
        reconciled: BuildingEstimates::new(start, ids, n_hours, rec)?,
        flags,
    })
}

pub fn write_features_csv(path: &Path, features: &FeatureMatrix) -> Result<()> {
    let mut w = create_writer(path)?;
    let mut head = vec!["building_id".to_string()];
    head.extend(features.feature_names.iter().cloned());
    w.write_record(&head)?;
    for (i, id) in features.building_ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(features.row(i).iter().map(|&v| format_kwh(v)));
        w.write_record(&row)?;
    }
    flush(&mut w, path)
}

pub fn read_features_csv(path: &Path) -> Result<FeatureMatrix> {
    let mut reader = open_reader(path)?;
    let head: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if head.len() < 2 || head[0] != "building_id" {
        return Err(Error::Schema(format!(
            "{}: expected header `building_id,<features>`, found `{}`",
            path.display(),
            head.join(",")
        )));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != head.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", head.len(), record.len()),
            ));
        }
        ids.push(record[0].to_string());
        let row = (1..head.len())
            .map(|j| parse_f64(path, line, &head[j], &record[j]))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Schema(format!("{}: no data rows", path.display())));
    }
    FeatureMatrix::new(ids, Matrix::from_rows(&rows)?, head[1..].to_vec())
}

pub fn write_clusters_csv(path: &Path, building_ids: &[String], labels: &[i32]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(["building_id", "label"])?;
    for (id, l) in building_ids.iter().zip(labels) {
        w.write_record([id.clone(), l.to_string()])?;
    }
    flush(&mut w, path)
}

pub fn read_clusters_csv(path: &Path) -> Result<Vec<(String, i32)>> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &header(&["building_id", "label"]))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 2 {
            return Err(parse_err(
                path,
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        out.push((record[0].to_string(), parse_label(path, line, &record[1])?));
    }
    Ok(out)
}

/// Labels in the order of `building_ids`.
pub fn align_labels(assignments: &[(String, i32)], building_ids: &[String]) -> Result<Vec<i32>> {
    let map: HashMap<&str, i32> = assignments
        .iter()
        .map(|(id, l)| (id.as_str(), *l))
        .collect();
    building_ids
        .iter()
        .map(|id| {
            map.get(id.as_str())
                .copied()
                .ok_or_else(|| Error::Schema(format!("no cluster label for building '{id}'")))
        })
        .collect()
}

/// `k` column holds the number of clusters actually found.
pub fn write_validity_csv(path: &Path, rows: &[ValidityRow]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record([
        "algorithm",
        "k",
        "silhouette",
        "davies_bouldin",
        "calinski_harabasz",
        "wcss",
    ])?;
    for r in rows {
        w.write_record([
            r.algorithm.as_str().to_string(),
            r.found.to_string(),
            format_kwh(r.scores.silhouette),
            format_kwh(r.scores.davies_bouldin),
            format_kwh(r.scores.calinski_harabasz),
            format_kwh(r.scores.wcss),
        ])?;
    }
    flush(&mut w, path)
}

pub fn write_cluster_series_csv(path: &Path, series: &[ClusterSeries]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(["timestamp", "cluster_id", "kwh"])?;
    for c in series {
        for (t, v) in c.series.values().iter().enumerate() {
            w.write_record([
                format_timestamp(c.series.timestamp(t)),
                c.cluster_id.to_string(),
                opt(*v),
            ])?;
        }
    }
    flush(&mut w, path)
}

/// Series in the order clusters first appear; each must be hourly and
/// contiguous.
pub fn read_cluster_series_csv(path: &Path) -> Result<Vec<ClusterSeries>> {
    let mut reader = open_reader(path)?;
    check_header(
        &mut reader,
        path,
        &header(&["timestamp", "cluster_id", "kwh"]),
    )?;
    let mut order: Vec<i32> = Vec::new();
    let mut data: HashMap<i32, (NaiveDateTime, Vec<Option<f64>>)> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 3 {
            return Err(parse_err(
                path,
                line,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let ts = parse_timestamp(&record[0]).map_err(|e| parse_err(path, line, e.to_string()))?;
        let id = parse_label(path, line, &record[1])?;
        let v = parse_opt_f64(path, line, "kwh", &record[2])?;
        let entry = data.entry(id).or_insert_with(|| {
            order.push(id);
            (ts, Vec::new())
        });
        check_hourly(path, line, entry.0, entry.1.len(), ts)?;
        entry.1.push(v);
    }
    if order.is_empty() {
        return Err(Error::Schema(format!("{}: no data rows", path.display())));
    }
    order
        .into_iter()
        .map(|id| {
            let (start, values) = data.remove(&id).expect("recorded id");
            Ok(ClusterSeries {
                cluster_id: id,
                series: HourlySeries::new(start, values)?,
            })
        })
        .collect()
}

/// One cluster's forecast starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterForecast {
    pub cluster_id: i32,
    pub start: NaiveDateTime,
    pub forecast: ForecastResult,
}

pub fn write_forecast_csv(path: &Path, forecasts: &[ClusterForecast]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(["timestamp", "cluster_id", "point", "lower", "upper"])?;
    for f in forecasts {
        for (h, &p) in f.forecast.point.iter().enumerate() {
            let ts = f.start + chrono::Duration::hours(h as i64);
            let (lo, hi) = match f.forecast.intervals() {
                Some((l, u)) => (format_kwh(l[h]), format_kwh(u[h])),
                None => (String::new(), String::new()),
            };
            w.write_record([
                format_timestamp(ts),
                f.cluster_id.to_string(),
                format_kwh(p),
                lo,
                hi,
            ])?;
        }
    }
    flush(&mut w, path)
}

/// Point forecasts laid out hours x clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastTable {
    pub start: NaiveDateTime,
    pub cluster_ids: Vec<i32>,
    pub demands: Vec<Vec<f64>>,
}

impl ForecastTable {
    pub fn timestamp(&self, hour: usize) -> NaiveDateTime {
        self.start + chrono::Duration::hours(hour as i64)
    }
}

/// Every cluster must cover the same contiguous hours.
pub fn read_forecast_csv(path: &Path) -> Result<ForecastTable> {
    let mut reader = open_reader(path)?;
    check_header(
        &mut reader,
        path,
        &header(&["timestamp", "cluster_id", "point", "lower", "upper"]),
    )?;
    let mut order: Vec<i32> = Vec::new();
    let mut data: HashMap<i32, (NaiveDateTime, Vec<f64>)> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 5 {
            return Err(parse_err(
                path,
                line,
                format!("expected 5 fields, found {}", record.len()),
            ));
        }
        let ts = parse_timestamp(&record[0]).map_err(|e| parse_err(path, line, e.to_string()))?;
        let id = parse_label(path, line, &record[1])?;
        let point = parse_f64(path, line, "point", &record[2])?;
        let entry = data.entry(id).or_insert_with(|| {
            order.push(id);
            (ts, Vec::new())
        });
        check_hourly(path, line, entry.0, entry.1.len(), ts)?;
        entry.1.push(point);
    }
    let first = *order
        .first()
        .ok_or_else(|| Error::Schema(format!("{}: no data rows", path.display())))?;
    let (start, len) = (data[&first].0, data[&first].1.len());
    if let Some(bad) = order
        .iter()
        .find(|id| data[id].0 != start || data[id].1.len() != len)
    {
        return Err(Error::Schema(format!(
            "{}: cluster {bad} does not cover the same hours as cluster {first}",
            path.display()
        )));
    }
    let demands = (0..len)
        .map(|h| order.iter().map(|id| data[id].1[h].max(0.0)).collect())
        .collect();
    Ok(ForecastTable {
        start,
        cluster_ids: order,
        demands,
    })
}

/// Per-cluster mean metrics of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub model: String,
    /// `None` for the all-cluster summary row.
    pub cluster_id: Option<i32>,
    pub metrics: MeanMetrics,
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(["model", "cluster_id", "rmse", "mape", "r2", "crps"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.cluster_id.map_or("all".to_string(), |c| c.to_string()),
            format_kwh(r.metrics.rmse),
            opt(r.metrics.mape),
            format_kwh(r.metrics.r_squared),
            opt(r.metrics.crps),
        ])?;
    }
    flush(&mut w, path)
}

/// Uniform mean over per-cluster summaries; optional metrics average the
/// clusters that report them.
pub fn summarize_metrics(per_cluster: &[MeanMetrics]) -> Option<MeanMetrics> {
    if per_cluster.is_empty() {
        return None;
    }
    let n = per_cluster.len() as f64;
    let mean_opt = |f: fn(&MeanMetrics) -> Option<f64>| {
        let v: Vec<f64> = per_cluster.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    Some(MeanMetrics {
        rmse: per_cluster.iter().map(|m| m.rmse).sum::<f64>() / n,
        mape: mean_opt(|m| m.mape),
        r_squared: per_cluster.iter().map(|m| m.r_squared).sum::<f64>() / n,
        crps: mean_opt(|m| m.crps),
    })
}

/// Metrics of a single fold viewed as a one-fold mean.
pub fn single_fold(m: &Metrics) -> MeanMetrics {
    MeanMetrics {
        rmse: m.rmse,
        mape: m.mape,
        r_squared: m.r_squared,
        crps: m.crps,
    }
}

pub fn write_plan_csv(
    path: &Path,
    start: NaiveDateTime,
    cluster_ids: &[i32],
    demands: &[Vec<f64>],
    plans: &[SheddingPlan],
) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record([
        "timestamp",
        "cluster_id",
        "demand_kwh",
        "shed_kwh",
        "feasible",
    ])?;
    for (h, (d, plan)) in demands.iter().zip(plans).enumerate() {
        let ts = format_timestamp(start + chrono::Duration::hours(h as i64));
        for (c, id) in cluster_ids.iter().enumerate() {
            w.write_record([
                ts.clone(),
                id.to_string(),
                format_kwh(d[c]),
                format_kwh(plan.curtailment[c]),
                plan.feasible.to_string(),
            ])?;
        }
    }
    flush(&mut w, path)
}

pub fn write_weights_csv(path: &Path, cluster_ids: &[i32], weights: &[f64]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(["cluster_id", "weight"])?;
    for (id, wt) in cluster_ids.iter().zip(weights) {
        w.write_record([id.to_string(), format_kwh(*wt)])?;
    }
    flush(&mut w, path)
}

/// Weights in the order of `cluster_ids`.
pub fn read_weights_csv(path: &Path, cluster_ids: &[i32]) -> Result<Vec<f64>> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &header(&["cluster_id", "weight"]))?;
    let mut map = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 2 {
            return Err(parse_err(
                path,
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let id = parse_label(path, line, &record[0])?;
        let w = parse_f64(path, line, "weight", &record[1])?;
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::invalid(format!(
                "{}: line {line}: weight {w} is not positive",
                path.display()
            )));
        }
        map.insert(id, w);
    }
    cluster_ids
        .iter()
        .map(|id| {
            map.get(id).copied().ok_or_else(|| {
                Error::Schema(format!("{}: no weight for cluster {id}", path.display()))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> NaiveDateTime {
        parse_timestamp("2024-01-01T00:00:00").unwrap()
    }

    fn table() -> EstimateTable {
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let aim = BuildingEstimates::new(
            start(),
            ids.clone(),
            3,
            vec![
                Some(1.0),
                Some(2.0),
                Some(3.0),
                Some(4.0),
                Some(0.5),
                Some(0.25),
            ],
        )
        .unwrap();
        let rec = BuildingEstimates::new(
            start(),
            ids,
            3,
            vec![
                Some(1.5),
                Some(2.5),
                Some(3.0),
                Some(4.0),
                Some(1.0),
                Some(0.0),
            ],
        )
        .unwrap();
        EstimateTable {
            aim,
            reconciled: rec,
            flags: vec![HourFlag::Reconciled, HourFlag::Gap, HourFlag::Reconciled],
        }
    }

    #[test]
    fn estimates_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        write_estimates_csv(&p, &table()).unwrap();
        let back = read_estimates_csv(&p).unwrap();
        assert_eq!(back, table());
        let obs = back.observed().unwrap();
        assert_eq!(obs.row(1), &[None, None]);
        assert_eq!(obs.row(2), &[Some(1.0), Some(0.0)]);
    }

    #[test]
    fn estimates_single_building() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        std::fs::write(
            &p,
            "timestamp,building_id,kwh_aim,kwh_reconciled,flag\n2024-01-01T00:00:00,a,1,1,ok\n2024-01-01T01:00:00,a,2,3,gap\n",
        )
        .unwrap();
        let t = read_estimates_csv(&p).unwrap();
        assert_eq!(t.flags, vec![HourFlag::Reconciled, HourFlag::Gap]);
        assert_eq!(t.reconciled.row(1), &[Some(3.0)]);
    }

    #[test]
    fn estimates_reject_shuffled_buildings() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        std::fs::write(
            &p,
            "timestamp,building_id,kwh_aim,kwh_reconciled,flag\n\
             2024-01-01T00:00:00,a,1,1,ok\n2024-01-01T00:00:00,b,1,1,ok\n\
             2024-01-01T01:00:00,b,1,1,ok\n2024-01-01T01:00:00,a,1,1,ok\n",
        )
        .unwrap();
        assert!(matches!(read_estimates_csv(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn features_and_clusters_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = FeatureMatrix::new(
            vec!["x".into(), "y".into()],
            Matrix::from_rows(&[vec![1.0, 2.5], vec![-3.0, 0.125]]).unwrap(),
            vec!["f1".into(), "f2".into()],
        )
        .unwrap();
        let p = dir.path().join("f.csv");
        write_features_csv(&p, &f).unwrap();
        assert_eq!(read_features_csv(&p).unwrap(), f);

        let c = dir.path().join("c.csv");
        write_clusters_csv(&c, &f.building_ids, &[1, -1]).unwrap();
        let a = read_clusters_csv(&c).unwrap();
        assert_eq!(
            align_labels(&a, &["y".into(), "x".into()]).unwrap(),
            vec![-1, 1]
        );
        assert!(align_labels(&a, &["z".into()]).is_err());
    }

    #[test]
    fn series_and_forecast_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = vec![
            ClusterSeries {
                cluster_id: 0,
                series: HourlySeries::new(start(), vec![Some(1.0), None, Some(2.0)]).unwrap(),
            },
            ClusterSeries {
                cluster_id: -1,
                series: HourlySeries::new(start(), vec![Some(4.0), Some(5.0), Some(6.0)]).unwrap(),
            },
        ];
        let p = dir.path().join("s.csv");
        write_cluster_series_csv(&p, &s).unwrap();
        assert_eq!(read_cluster_series_csv(&p).unwrap(), s);

        let f = vec![
            ClusterForecast {
                cluster_id: 0,
                start: start(),
                forecast: ForecastResult::point_only(vec![1.0, -2.0]),
            },
            ClusterForecast {
                cluster_id: 1,
                start: start(),
                forecast: ForecastResult::with_gaussian_interval(vec![3.0, 4.0], &[1.0, 1.0]),
            },
        ];
        let p = dir.path().join("f.csv");
        write_forecast_csv(&p, &f).unwrap();
        let t = read_forecast_csv(&p).unwrap();
        assert_eq!(t.cluster_ids, vec![0, 1]);
        assert_eq!(t.demands, vec![vec![1.0, 3.0], vec![0.0, 4.0]]);
    }

    #[test]
    fn forecast_misaligned_clusters_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(
            &p,
            "timestamp,cluster_id,point,lower,upper\n2024-01-01T00:00:00,0,1,,\n2024-01-01T01:00:00,1,1,,\n",
        )
        .unwrap();
        assert!(matches!(read_forecast_csv(&p), Err(Error::Schema(_))));
    }

    #[test]
    fn weights_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        write_weights_csv(&p, &[0, 1, -1], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(read_weights_csv(&p, &[-1, 0]).unwrap(), vec![1.0, 3.0]);
        assert!(read_weights_csv(&p, &[5]).is_err());
    }

    #[test]
    fn summary_averages_clusters() {
        let a = MeanMetrics {
            rmse: 1.0,
            mape: Some(10.0),
            r_squared: 0.5,
            crps: None,
        };
        let b = MeanMetrics {
            rmse: 3.0,
            mape: None,
            r_squared: 0.7,
            crps: Some(2.0),
        };
        let s = summarize_metrics(&[a, b]).unwrap();
        assert_eq!(s.rmse, 2.0);
        assert_eq!(s.mape, Some(10.0));
        assert!((s.r_squared - 0.6).abs() < 1e-12);
        assert_eq!(s.crps, Some(2.0));
        assert!(summarize_metrics(&[]).is_none());
    }
}
