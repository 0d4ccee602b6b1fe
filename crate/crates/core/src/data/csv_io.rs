use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;

use super::{Appliance, ApplianceInventory, CampusDataset, HourlySeries};
use crate::{Error, Result};

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    let s = s.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .ok_or_else(|| Error::arg(format!("unrecognised timestamp '{s}'")))
}

pub fn format_timestamp(t: NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M:%S").to_string()
}

/// Shortest decimal rendering of `x` rounded to 9 significant digits.
pub fn format_kwh(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    let s = format!("{rounded}");
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

pub(crate) fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

pub(crate) fn check_header(
    reader: &mut csv::Reader<File>,
    path: &Path,
    expected: &[String],
) -> Result<()> {
    let header = reader.headers()?;
    let got: Vec<&str> = header.iter().collect();
    if got.len() != expected.len() || got.iter().zip(expected).any(|(g, e)| g != e) {
        return Err(Error::Schema(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

pub(crate) fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

pub(crate) fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

/// Reads `timestamp,kwh`. Missing hours between rows and empty `kwh` fields
/// become explicit gaps.
pub fn read_feeder_csv(path: &Path) -> Result<HourlySeries> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &["timestamp".into(), "kwh".into()])?;

    let mut start: Option<NaiveDateTime> = None;
    let mut prev: Option<NaiveDateTime> = None;
    let mut values: Vec<Option<f64>> = Vec::new();
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
        let ts = parse_timestamp(&record[0]).map_err(|e| parse_err(path, line, e.to_string()))?;
        let kwh = match record[1].trim() {
            "" => None,
            raw => {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("invalid kwh '{raw}'")))?;
                if !v.is_finite() {
                    return Err(parse_err(path, line, format!("non-finite kwh '{raw}'")));
                }
                if v < 0.0 {
                    return Err(Error::invalid(format!(
                        "{}: line {line}: negative kwh {v}",
                        path.display()
                    )));
                }
                Some(v)
            }
        };
        match prev {
            None => {
                if ts.format("%M:%S").to_string() != "00:00" {
                    return Err(Error::Schema(format!(
                        "{}: line {line}: timestamp {ts} is not on an hour boundary",
                        path.display()
                    )));
                }
                start = Some(ts);
            }
            Some(p) => {
                let secs = (ts - p).num_seconds();
                if secs <= 0 || secs % 3600 != 0 {
                    return Err(Error::Schema(format!(
                        "{}: line {line}: non-hourly spacing of {secs} s after {p}",
                        path.display()
                    )));
                }
                for _ in 1..(secs / 3600) {
                    values.push(None);
                }
            }
        }
        values.push(kwh);
        prev = Some(ts);
    }
    let start = start.ok_or_else(|| Error::Schema(format!("{}: no data rows", path.display())))?;
    HourlySeries::new(start, values)
}

fn inventory_header() -> Vec<String> {
    let mut h: Vec<String> = ["building_id", "appliance", "rated_kw", "count"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..24).map(|i| format!("h{i}")));
    h
}

/// Reads `building_id,appliance,rated_kw,count,h0..h23`. Buildings keep
/// the order of their first appearance.
pub fn read_inventory_csv(path: &Path) -> Result<Vec<ApplianceInventory>> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &inventory_header())?;

    let mut order: Vec<String> = Vec::new();
    let mut grouped: std::collections::HashMap<String, Vec<Appliance>> = Default::default();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 28 {
            return Err(parse_err(
                path,
                line,
                format!("expected 28 fields, found {}", record.len()),
            ));
        }
        let building = record[0].to_string();
        if building.is_empty() {
            return Err(parse_err(path, line, "empty building_id"));
        }
        let name = record[1].to_string();
        let rated: f64 = record[2]
            .parse()
            .map_err(|_| parse_err(path, line, format!("invalid rated_kw '{}'", &record[2])))?;
        let count: i64 = record[3]
            .parse()
            .map_err(|_| parse_err(path, line, format!("invalid count '{}'", &record[3])))?;
        if count < 1 || count > i64::from(u32::MAX) {
            return Err(Error::invalid(format!(
                "{}: line {line}: count must be a positive integer, got {count}",
                path.display()
            )));
        }
        let mut schedule = [false; 24];
        for (h, slot) in schedule.iter_mut().enumerate() {
            *slot = match &record[4 + h] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(parse_err(
                        path,
                        line,
                        format!("h{h} must be 0 or 1, got '{other}'"),
                    ))
                }
            };
        }
        let appliance = Appliance::new(name, rated, count as u32, schedule)
            .map_err(|e| Error::invalid(format!("{}: line {line}: {e}", path.display())))?;
        if !grouped.contains_key(&building) {
            order.push(building.clone());
        }
        grouped.entry(building).or_default().push(appliance);
    }
    order
        .into_iter()
        .map(|id| {
            let apps = grouped.remove(&id).unwrap_or_default();
            ApplianceInventory::new(id, apps)
        })
        .collect()
}

/// Reads `timestamp,is_holiday` aligned to `axis`. Every hour of the axis
/// must be present exactly once.
pub fn read_calendar_csv(path: &Path, axis: &HourlySeries) -> Result<Vec<bool>> {
    let mut reader = open_reader(path)?;
    check_header(
        &mut reader,
        path,
        &["timestamp".into(), "is_holiday".into()],
    )?;
    let mut flags: Vec<Option<bool>> = vec![None; axis.len()];
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
        let ts = parse_timestamp(&record[0]).map_err(|e| parse_err(path, line, e.to_string()))?;
        let flag = match &record[1] {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    path,
                    line,
                    format!("is_holiday must be 0 or 1, got '{other}'"),
                ))
            }
        };
        let secs = (ts - axis.start()).num_seconds();
        if secs < 0 || secs % 3600 != 0 || (secs / 3600) as usize >= axis.len() {
            return Err(Error::Schema(format!(
                "{}: line {line}: timestamp {ts} is off the feeder axis",
                path.display()
            )));
        }
        let idx = (secs / 3600) as usize;
        if flags[idx].replace(flag).is_some() {
            return Err(Error::Schema(format!(
                "{}: line {line}: duplicate timestamp {ts}",
                path.display()
            )));
        }
    }
    flags
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            f.ok_or_else(|| {
                Error::Schema(format!(
                    "{}: no calendar entry for {}",
                    path.display(),
                    axis.timestamp(i)
                ))
            })
        })
        .collect()
}

/// Load and validate a campus dataset. Without a calendar file every hour
/// is treated as a regular (non-holiday) hour.
pub fn load_campus_csv(
    feeder_path: &Path,
    inventory_path: &Path,
    calendar_path: Option<&Path>,
) -> Result<CampusDataset> {
    let feeder = read_feeder_csv(feeder_path)?;
    let buildings = read_inventory_csv(inventory_path)?;
    let calendar = match calendar_path {
        Some(p) => read_calendar_csv(p, &feeder)?,
        None => vec![false; feeder.len()],
    };
    CampusDataset::new(feeder, buildings, calendar)
}

pub(crate) fn create_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Gap hours are omitted, mirroring the one-row-per-reading input format.
pub fn write_feeder_csv(path: &Path, feeder: &HourlySeries) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(["timestamp", "kwh"])?;
    for (i, v) in feeder.values().iter().enumerate() {
        if let Some(v) = v {
            w.write_record([format_timestamp(feeder.timestamp(i)), format_kwh(*v)])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_inventory_csv(path: &Path, buildings: &[ApplianceInventory]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(inventory_header())?;
    for b in buildings {
        for a in &b.appliances {
            let mut row = vec![
                b.building_id.clone(),
                a.name.clone(),
                format_kwh(a.rated_power),
                a.count.to_string(),
            ];
            row.extend(
                a.schedule
                    .iter()
                    .map(|&on| if on { "1" } else { "0" }.to_string()),
            );
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_calendar_csv(path: &Path, axis: &HourlySeries, calendar: &[bool]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(["timestamp", "is_holiday"])?;
    for (i, &flag) in calendar.iter().enumerate() {
        w.write_record([
            format_timestamp(axis.timestamp(i)),
            if flag { "1" } else { "0" }.into(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct CampusPaths {
    pub feeder: PathBuf,
    pub inventory: PathBuf,
    pub calendar: PathBuf,
}

impl CampusPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            feeder: dir.join("feeder.csv"),
            inventory: dir.join("inventory.csv"),
            calendar: dir.join("calendar.csv"),
        }
    }
}

/// Writes `feeder.csv`, `inventory.csv` and `calendar.csv` into `dir`.
pub fn write_campus_csv(dataset: &CampusDataset, dir: &Path) -> Result<CampusPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = CampusPaths::in_dir(dir);
    write_feeder_csv(&paths.feeder, dataset.feeder())?;
    write_inventory_csv(&paths.inventory, dataset.buildings())?;
    write_calendar_csv(&paths.calendar, dataset.feeder(), dataset.calendar())?;
    Ok(paths)
}
