//! Domain types shared by every stage, CSV ingestion and the synthetic
//! campus generator.

mod csv_io;
mod synthetic;

pub(crate) use csv_io::{check_header, create_writer, open_reader, parse_err, record_line};
pub use csv_io::{
    format_kwh, format_timestamp, load_campus_csv, parse_timestamp, read_calendar_csv,
    read_feeder_csv, read_inventory_csv, write_calendar_csv, write_campus_csv, write_feeder_csv,
    write_inventory_csv, CampusPaths,
};
pub use synthetic::{
    generate_cluster_series, generate_synthetic_campus, generate_synthetic_campus_with,
    ClusterSeriesOptions, SyntheticCampus, SyntheticOptions, DEFAULT_START,
};

use chrono::{Duration, NaiveDateTime, Timelike};

use crate::{Error, Result};

/// Hour-resolution energy readings in kWh. `None` marks a missing reading.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    start: NaiveDateTime,
    values: Vec<Option<f64>>,
}

impl HourlySeries {
    pub fn new(start: NaiveDateTime, values: Vec<Option<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("hourly series must have at least one entry"));
        }
        if start.minute() != 0 || start.second() != 0 || start.nanosecond() != 0 {
            return Err(Error::Schema(format!(
                "series start {start} is not on an hour boundary"
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if let Some(x) = v {
                if !x.is_finite() {
                    return Err(Error::invalid(format!("non-finite reading at hour {i}")));
                }
                if *x < 0.0 {
                    return Err(Error::invalid(format!(
                        "negative reading {x} kWh at hour {i}"
                    )));
                }
            }
        }
        Ok(Self { start, values })
    }

    /// Gap-free series.
    pub fn from_values(start: NaiveDateTime, values: Vec<f64>) -> Result<Self> {
        Self::new(start, values.into_iter().map(Some).collect())
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    pub fn is_gap(&self, i: usize) -> bool {
        self.values[i].is_none()
    }

    pub fn gap_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + Duration::hours(i as i64)
    }

    pub fn hour_of_day(&self, i: usize) -> usize {
        (self.start.hour() as usize + i) % 24
    }

    /// Hours since the Monday 00:00 preceding `start`, for weekly phase.
    pub fn hour_of_week(&self, i: usize) -> usize {
        use chrono::Datelike;
        let offset =
            self.start.weekday().num_days_from_monday() as usize * 24 + self.start.hour() as usize;
        (offset + i) % 168
    }

    /// Sub-series over `range`, keeping the time axis.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::arg(format!(
                "slice {:?} out of bounds for series of length {}",
                range,
                self.len()
            )));
        }
        Ok(Self {
            start: self.timestamp(range.start),
            values: self.values[range].to_vec(),
        })
    }

    /// Linear interpolation across interior gaps; leading and trailing gaps
    /// take the nearest observed value. Errors when nothing is observed.
    pub fn interpolated(&self) -> Result<Vec<f64>> {
        let observed: Vec<usize> = (0..self.len()).filter(|&i| !self.is_gap(i)).collect();
        let (&first, &last) = match (observed.first(), observed.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::invalid("series has no observed values")),
        };
        let mut out = vec![0.0; self.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = match self.values[i] {
                Some(v) => v,
                None if i < first => self.values[first].unwrap(),
                None if i > last => self.values[last].unwrap(),
                None => {
                    let lo = (0..i).rev().find(|&j| !self.is_gap(j)).unwrap();
                    let hi = (i + 1..self.len()).find(|&j| !self.is_gap(j)).unwrap();
                    let (a, b) = (self.values[lo].unwrap(), self.values[hi].unwrap());
                    a + (b - a) * (i - lo) as f64 / (hi - lo) as f64
                }
            };
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Appliance {
    pub name: String,
    /// kW
    pub rated_power: f64,
    pub count: u32,
    /// Operational state for each hour of the day.
    pub schedule: [bool; 24],
}

impl Appliance {
    pub fn new(
        name: impl Into<String>,
        rated_power: f64,
        count: u32,
        schedule: [bool; 24],
    ) -> Result<Self> {
        let name = name.into();
        if !(rated_power > 0.0) || !rated_power.is_finite() {
            return Err(Error::invalid(format!(
                "appliance {name}: rated power must be > 0, got {rated_power}"
            )));
        }
        if count < 1 {
            return Err(Error::invalid(format!(
                "appliance {name}: count must be >= 1"
            )));
        }
        Ok(Self {
            name,
            rated_power,
            count,
            schedule,
        })
    }

    /// kWh drawn during an hour of the day.
    pub fn hourly_kwh(&self, hour_of_day: usize) -> f64 {
        if self.schedule[hour_of_day % 24] {
            self.rated_power * f64::from(self.count)
        } else {
            0.0
        }
    }
}

/// Builds a schedule that is on for every hour in the given inclusive ranges.
pub fn schedule_from_ranges(ranges: &[(usize, usize)]) -> [bool; 24] {
    let mut s = [false; 24];
    for &(a, b) in ranges {
        for h in a..=b.min(23) {
            s[h] = true;
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceInventory {
    pub building_id: String,
    pub appliances: Vec<Appliance>,
}

impl ApplianceInventory {
    pub fn new(building_id: impl Into<String>, appliances: Vec<Appliance>) -> Result<Self> {
        let building_id = building_id.into();
        if appliances.is_empty() {
            return Err(Error::invalid(format!(
                "building {building_id} has no appliances"
            )));
        }
        Ok(Self {
            building_id,
            appliances,
        })
    }
}

/// Feeder readings, building inventories and the holiday calendar on one
/// shared hourly axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CampusDataset {
    feeder: HourlySeries,
    buildings: Vec<ApplianceInventory>,
    calendar: Vec<bool>,
}

impl CampusDataset {
    pub fn new(
        feeder: HourlySeries,
        buildings: Vec<ApplianceInventory>,
        calendar: Vec<bool>,
    ) -> Result<Self> {
        if calendar.len() != feeder.len() {
            return Err(Error::invalid(format!(
                "calendar length {} differs from feeder length {}",
                calendar.len(),
                feeder.len()
            )));
        }
        if buildings.is_empty() {
            return Err(Error::invalid("dataset has no buildings"));
        }
        let mut seen = std::collections::HashSet::new();
        for b in &buildings {
            if !seen.insert(b.building_id.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate building id {}",
                    b.building_id
                )));
            }
        }
        Ok(Self {
            feeder,
            buildings,
            calendar,
        })
    }

    pub fn feeder(&self) -> &HourlySeries {
        &self.feeder
    }

    pub fn buildings(&self) -> &[ApplianceInventory] {
        &self.buildings
    }

    pub fn calendar(&self) -> &[bool] {
        &self.calendar
    }

    pub fn n_hours(&self) -> usize {
        self.feeder.len()
    }

    pub fn building_ids(&self) -> Vec<String> {
        self.buildings
            .iter()
            .map(|b| b.building_id.clone())
            .collect()
    }
}
