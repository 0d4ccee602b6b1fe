//! Synthetic campus with planted demand groups.
//!
//! Group 0 buildings are office-hour heavy (chillers, split units, PCs),
//! group 1 are hostel-like with morning and evening peaks, group 2 are small
//! flat loads with irregular spikes. True building loads follow the
//! inventory pattern modulated by weekday/holiday factors, a slow upward
//! drift and multiplicative noise. The feeder is their sum with bounded
//! metering noise.

use chrono::{Datelike, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{
    parse_timestamp, schedule_from_ranges, Appliance, ApplianceInventory, CampusDataset,
    HourlySeries,
};
use crate::rng;
use crate::{Error, Result};

/// Monday 1 January 2024, 00:00.
pub const DEFAULT_START: &str = "2024-01-01T00:00:00";

/// Holiday / academic-break day offsets from the start date: New Year,
/// a mid-semester break, Easter, Workers' Day.
const HOLIDAY_DAYS: [usize; 11] = [0, 60, 61, 62, 63, 64, 88, 89, 90, 91, 121];

const METER_NOISE: f64 = 0.015;

#[derive(Debug, Clone)]
pub struct SyntheticOptions {
    /// Fraction of feeder hours replaced by gaps.
    pub gap_rate: f64,
    pub start: NaiveDateTime,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            gap_rate: 0.0,
            start: parse_timestamp(DEFAULT_START).expect("valid constant"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCampus {
    pub dataset: CampusDataset,
    /// Ground-truth hourly kWh per building, same order as the inventories.
    pub building_loads: Vec<Vec<f64>>,
    /// Planted group per building (0 = high, 1 = medium, 2 = low/irregular).
    pub planted: Vec<usize>,
}

pub fn generate_synthetic_campus(
    seed: u64,
    n_buildings: usize,
    n_hours: usize,
    cluster_sizes: &[usize],
) -> Result<SyntheticCampus> {
    generate_synthetic_campus_with(
        seed,
        n_buildings,
        n_hours,
        cluster_sizes,
        &SyntheticOptions::default(),
    )
}

pub fn generate_synthetic_campus_with(
    seed: u64,
    n_buildings: usize,
    n_hours: usize,
    cluster_sizes: &[usize],
    options: &SyntheticOptions,
) -> Result<SyntheticCampus> {
    if cluster_sizes.iter().sum::<usize>() != n_buildings {
        return Err(Error::arg(format!(
            "cluster sizes {cluster_sizes:?} do not sum to {n_buildings} buildings"
        )));
    }
    if cluster_sizes.is_empty() || cluster_sizes.len() > 3 {
        return Err(Error::arg(
            "between one and three planted groups are supported",
        ));
    }
    if n_hours < 48 {
        return Err(Error::arg(format!("need at least 48 hours, got {n_hours}")));
    }
    if !(0.0..1.0).contains(&options.gap_rate) {
        return Err(Error::arg(format!(
            "gap rate {} outside [0, 1)",
            options.gap_rate
        )));
    }

    let mut planted: Vec<usize> = cluster_sizes
        .iter()
        .enumerate()
        .flat_map(|(g, &n)| std::iter::repeat_n(g, n))
        .collect();
    planted.shuffle(&mut rng::stream(seed, "synthetic/order"));

    let mut inv_rng = rng::stream(seed, "synthetic/inventory");
    let buildings: Vec<ApplianceInventory> = planted
        .iter()
        .enumerate()
        .map(|(b, &g)| make_inventory(&format!("B{:03}", b + 1), g, &mut inv_rng))
        .collect::<Result<_>>()?;

    let start = options.start;
    let axis = HourlySeries::from_values(start, vec![0.0; n_hours])?;
    let calendar: Vec<bool> = (0..n_hours)
        .map(|t| HOLIDAY_DAYS.contains(&(t / 24)))
        .collect();

    let mut load_rng = rng::stream(seed, "synthetic/loads");
    let noise = Normal::new(0.0, 0.05).expect("valid sd");
    let mut building_loads = Vec::with_capacity(n_buildings);
    for (inv, &g) in buildings.iter().zip(&planted) {
        let pattern: Vec<f64> = (0..24)
            .map(|h| inv.appliances.iter().map(|a| a.hourly_kwh(h)).sum())
            .collect();
        let mean_pattern = pattern.iter().sum::<f64>() / 24.0;
        let mut series = Vec::with_capacity(n_hours);
        for t in 0..n_hours {
            let hod = axis.hour_of_day(t);
            let weekend = matches!(
                axis.timestamp(t).weekday(),
                chrono::Weekday::Sat | chrono::Weekday::Sun
            );
            let factor = day_factor(g, weekend, calendar[t]);
            let drift = 1.0 + 0.06 * t as f64 / n_hours as f64;
            let eps: f64 = noise.sample(&mut load_rng);
            let mut v = pattern[hod] * factor * drift * (1.0 + eps);
            if g == 2 && load_rng.random::<f64>() < 0.03 {
                v += mean_pattern * load_rng.random_range(0.5..2.0);
            }
            series.push(v.max(0.0));
        }
        building_loads.push(series);
    }

    let mut meter_rng = rng::stream(seed, "synthetic/meter");
    let mut feeder: Vec<Option<f64>> = (0..n_hours)
        .map(|t| {
            let total: f64 = building_loads.iter().map(|s| s[t]).sum();
            Some(total * (1.0 + meter_rng.random_range(-METER_NOISE..=METER_NOISE)))
        })
        .collect();

    let n_gaps = (options.gap_rate * n_hours as f64).round() as usize;
    if n_gaps > 0 {
        let mut hours: Vec<usize> = (0..n_hours).collect();
        hours.shuffle(&mut rng::stream(seed, "synthetic/gaps"));
        for &t in &hours[..n_gaps] {
            feeder[t] = None;
        }
    }

    let dataset = CampusDataset::new(HourlySeries::new(start, feeder)?, buildings, calendar)?;
    Ok(SyntheticCampus {
        dataset,
        building_loads,
        planted,
    })
}

fn day_factor(group: usize, weekend: bool, holiday: bool) -> f64 {
    let (we, hol) = match group {
        0 => (0.35, 0.3),
        1 => (1.05, 0.8),
        _ => (0.9, 0.7),
    };
    match (weekend, holiday) {
        (_, true) => hol,
        (true, false) => we,
        _ => 1.0,
    }
}

fn make_inventory<R: Rng>(id: &str, group: usize, rng: &mut R) -> Result<ApplianceInventory> {
    let mut apps = Vec::new();
    match group {
        0 => {
            apps.push(Appliance::new(
                "chiller",
                rng.random_range(60.0..120.0),
                1,
                schedule_from_ranges(&[(9, 17)]),
            )?);
            apps.push(Appliance::new(
                "split_ac",
                1.5,
                rng.random_range(20..50),
                schedule_from_ranges(&[(8, 17)]),
            )?);
            apps.push(Appliance::new(
                "computer",
                0.25,
                rng.random_range(60..160),
                schedule_from_ranges(&[(8, 17)]),
            )?);
            apps.push(Appliance::new(
                "lighting",
                0.04,
                rng.random_range(150..400),
                schedule_from_ranges(&[(7, 18)]),
            )?);
            apps.push(Appliance::new(
                "server",
                2.0,
                rng.random_range(2..6),
                [true; 24],
            )?);
        }
        1 => {
            apps.push(Appliance::new(
                "lighting",
                0.04,
                rng.random_range(100..300),
                schedule_from_ranges(&[(5, 7), (18, 23)]),
            )?);
            apps.push(Appliance::new(
                "sockets",
                0.1,
                rng.random_range(40..120),
                schedule_from_ranges(&[(6, 8), (18, 22)]),
            )?);
            apps.push(Appliance::new(
                "water_pump",
                3.0,
                rng.random_range(1..4),
                schedule_from_ranges(&[(5, 7), (17, 19)]),
            )?);
            apps.push(Appliance::new(
                "fan",
                0.075,
                rng.random_range(40..150),
                schedule_from_ranges(&[(0, 5), (21, 23)]),
            )?);
            apps.push(Appliance::new(
                "fridge",
                0.15,
                rng.random_range(5..15),
                [true; 24],
            )?);
        }
        _ => {
            apps.push(Appliance::new(
                "fridge",
                0.15,
                rng.random_range(2..7),
                [true; 24],
            )?);
            let mut lit = [false; 24];
            for _ in 0..rng.random_range(4..9) {
                lit[rng.random_range(0..24)] = true;
            }
            apps.push(Appliance::new(
                "lighting",
                0.04,
                rng.random_range(10..40),
                lit,
            )?);
            let mut misc = [false; 24];
            for _ in 0..rng.random_range(2..6) {
                misc[rng.random_range(0..24)] = true;
            }
            apps.push(Appliance::new(
                "equipment",
                1.0,
                rng.random_range(1..5),
                misc,
            )?);
        }
    }
    ApplianceInventory::new(id, apps)
}

/// Shape of a synthetic cluster-level series.
#[derive(Debug, Clone)]
pub struct ClusterSeriesOptions {
    pub level: f64,
    /// Relative growth of the level across the whole span.
    pub trend: f64,
    /// Multiplicative noise standard deviation.
    pub noise: f64,
}

impl Default for ClusterSeriesOptions {
    fn default() -> Self {
        Self {
            level: 100.0,
            trend: 0.2,
            noise: 0.05,
        }
    }
}

/// Cluster-level demand with daily and weekly seasonality, a linear trend
/// and multiplicative Gaussian noise. Phases and amplitudes vary by seed.
pub fn generate_cluster_series(
    seed: u64,
    n_hours: usize,
    options: &ClusterSeriesOptions,
) -> Result<HourlySeries> {
    if n_hours < 48 {
        return Err(Error::arg(format!("need at least 48 hours, got {n_hours}")));
    }
    let mut r = rng::stream(seed, "synthetic/cluster-series");
    let tau = std::f64::consts::TAU;
    let daily: Vec<(f64, f64)> = (1..=3)
        .map(|k| {
            (
                r.random_range(0.08..0.3) / k as f64,
                r.random_range(0.0..tau),
            )
        })
        .collect();
    let weekly: Vec<(f64, f64)> = (1..=2)
        .map(|k| {
            (
                r.random_range(0.05..0.15) / k as f64,
                r.random_range(0.0..tau),
            )
        })
        .collect();
    let noise = Normal::new(0.0, options.noise).map_err(|e| Error::arg(e.to_string()))?;
    let values = (0..n_hours)
        .map(|t| {
            let tf = t as f64;
            let mut shape = 1.0 + options.trend * tf / n_hours as f64;
            for (k, (a, p)) in daily.iter().enumerate() {
                shape += a * (tau * (k + 1) as f64 * tf / 24.0 + p).sin();
            }
            for (k, (a, p)) in weekly.iter().enumerate() {
                shape += a * (tau * (k + 1) as f64 * tf / 168.0 + p).sin();
            }
            let eps: f64 = noise.sample(&mut r);
            (options.level * shape * (1.0 + eps)).max(0.0)
        })
        .collect();
    HourlySeries::from_values(parse_timestamp(DEFAULT_START)?, values)
}
