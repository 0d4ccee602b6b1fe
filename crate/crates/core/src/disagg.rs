//! Building-level load estimation from appliance inventories and
//! reconciliation against feeder totals.
//!
//! For each hour the reconciled vector is the point closest (in Euclidean
//! distance) to the inventory estimate among all non-negative vectors that
//! sum to the feeder reading: a projection onto a scaled simplex.

use chrono::NaiveDateTime;

use crate::data::{CampusDataset, HourlySeries};
use crate::{Error, Result};

/// Hours x buildings matrix of kWh. `None` marks an hour with no value.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingEstimates {
    start: NaiveDateTime,
    building_ids: Vec<String>,
    n_hours: usize,
    data: Vec<Option<f64>>,
}

impl BuildingEstimates {
    pub fn new(
        start: NaiveDateTime,
        building_ids: Vec<String>,
        n_hours: usize,
        data: Vec<Option<f64>>,
    ) -> Result<Self> {
        if data.len() != n_hours * building_ids.len() {
            return Err(Error::arg(format!(
                "estimate matrix has {} entries, expected {} hours x {} buildings",
                data.len(),
                n_hours,
                building_ids.len()
            )));
        }
        if building_ids.is_empty() || n_hours == 0 {
            return Err(Error::invalid(
                "estimates need at least one hour and one building",
            ));
        }
        if let Some(bad) = data
            .iter()
            .flatten()
            .find(|v| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(Error::invalid(format!(
                "estimate {bad} is not a finite non-negative kWh"
            )));
        }
        Ok(Self {
            start,
            building_ids,
            n_hours,
            data,
        })
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn building_ids(&self) -> &[String] {
        &self.building_ids
    }

    pub fn n_hours(&self) -> usize {
        self.n_hours
    }

    pub fn n_buildings(&self) -> usize {
        self.building_ids.len()
    }

    pub fn get(&self, hour: usize, building: usize) -> Option<f64> {
        self.data[hour * self.n_buildings() + building]
    }

    pub fn row(&self, hour: usize) -> &[Option<f64>] {
        let n = self.n_buildings();
        &self.data[hour * n..(hour + 1) * n]
    }

    /// One building's estimates as a series on the shared axis.
    pub fn building_series(&self, building: usize) -> Result<HourlySeries> {
        let values = (0..self.n_hours).map(|t| self.get(t, building)).collect();
        HourlySeries::new(self.start, values)
    }

    pub fn axis(&self) -> HourlySeries {
        HourlySeries::from_values(self.start, vec![0.0; self.n_hours]).expect("non-empty axis")
    }
}

/// Inventory estimate: hour t of building b is the sum over its appliances
/// of `on(hour_of_day(t)) * rated_kw * count`.
pub fn aim_estimate(dataset: &CampusDataset) -> BuildingEstimates {
    let axis = dataset.feeder();
    let profiles: Vec<[f64; 24]> = dataset
        .buildings()
        .iter()
        .map(|b| {
            let mut p = [0.0; 24];
            for (h, slot) in p.iter_mut().enumerate() {
                *slot = b.appliances.iter().map(|a| a.hourly_kwh(h)).sum();
            }
            p
        })
        .collect();
    let mut data = Vec::with_capacity(axis.len() * profiles.len());
    for t in 0..axis.len() {
        let h = axis.hour_of_day(t);
        data.extend(profiles.iter().map(|p| Some(p[h])));
    }
    BuildingEstimates::new(axis.start(), dataset.building_ids(), axis.len(), data)
        .expect("inventory invariants guarantee valid estimates")
}

/// Euclidean projection of `x` onto `{v >= 0, sum(v) = mass}` by the
/// sort-and-threshold method.
pub fn project_to_simplex(x: &[f64], mass: f64) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    if mass == 0.0 {
        return vec![0.0; x.len()];
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - mass) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    x.iter().map(|&v| (v - tau).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HourFlag {
    Reconciled,
    /// Feeder reading missing: inventory estimate passed through.
    Gap,
    /// Inventory estimate was all zero: feeder split uniformly.
    UniformSplit,
}

impl HourFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            HourFlag::Reconciled => "ok",
            HourFlag::Gap => "gap",
            HourFlag::UniformSplit => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourReconciliation {
    pub values: Vec<f64>,
    pub flag: HourFlag,
}

pub fn reconcile_hour(aim_row: &[f64], feeder_value: f64) -> Result<HourReconciliation> {
    if aim_row.is_empty() {
        return Err(Error::arg("reconciliation needs at least one building"));
    }
    if !(feeder_value >= 0.0) || !feeder_value.is_finite() {
        return Err(Error::arg(format!(
            "feeder value must be finite and >= 0, got {feeder_value}"
        )));
    }
    if aim_row.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite inventory estimate"));
    }
    let flag = if feeder_value > 0.0 && aim_row.iter().all(|&v| v == 0.0) {
        HourFlag::UniformSplit
    } else {
        HourFlag::Reconciled
    };
    Ok(HourReconciliation {
        values: project_to_simplex(aim_row, feeder_value),
        flag,
    })
}

#[derive(Debug, Clone)]
pub struct ReconciliationResult {
    /// Per-building ratio of reconciled to estimated energy over the
    /// reconciled hours (0 when the estimate total is 0).
    pub weights: Vec<f64>,
    pub reconciled: BuildingEstimates,
    /// `||reconciled - estimate||^2` per hour; 0 on gap hours.
    pub residual_norm: Vec<f64>,
    pub flags: Vec<HourFlag>,
}

/// Reconcile every hour independently. Feeder gaps keep the inventory
/// estimate and are flagged.
pub fn reconcile_all(
    estimates: &BuildingEstimates,
    feeder: &HourlySeries,
) -> Result<ReconciliationResult> {
    if estimates.n_hours() != feeder.len() || estimates.start() != feeder.start() {
        return Err(Error::arg(format!(
            "estimate axis ({} hours from {}) does not match feeder axis ({} hours from {})",
            estimates.n_hours(),
            estimates.start(),
            feeder.len(),
            feeder.start()
        )));
    }
    let nb = estimates.n_buildings();
    let mut data = Vec::with_capacity(estimates.n_hours() * nb);
    let mut residual_norm = Vec::with_capacity(estimates.n_hours());
    let mut flags = Vec::with_capacity(estimates.n_hours());
    let mut aim_total = vec![0.0; nb];
    let mut rec_total = vec![0.0; nb];

    for t in 0..estimates.n_hours() {
        let row: Vec<f64> = estimates
            .row(t)
            .iter()
            .enumerate()
            .map(|(b, v)| {
                v.ok_or_else(|| {
                    Error::invalid(format!(
                        "missing estimate for building {} at hour {t}",
                        estimates.building_ids()[b]
                    ))
                })
            })
            .collect::<Result<_>>()?;
        match feeder.get(t) {
            None => {
                data.extend(row.iter().map(|&v| Some(v)));
                residual_norm.push(0.0);
                flags.push(HourFlag::Gap);
            }
            Some(e) => {
                let hr = reconcile_hour(&row, e)?;
                residual_norm.push(
                    row.iter()
                        .zip(&hr.values)
                        .map(|(a, r)| (r - a) * (r - a))
                        .sum(),
                );
                for b in 0..nb {
                    aim_total[b] += row[b];
                    rec_total[b] += hr.values[b];
                }
                data.extend(hr.values.iter().map(|&v| Some(v)));
                flags.push(hr.flag);
            }
        }
    }

    let weights = aim_total
        .iter()
        .zip(&rec_total)
        .map(|(&a, &r)| if a > 0.0 { r / a } else { 0.0 })
        .collect();
    let reconciled = BuildingEstimates::new(
        estimates.start(),
        estimates.building_ids().to_vec(),
        estimates.n_hours(),
        data,
    )?;
    Ok(ReconciliationResult {
        weights,
        reconciled,
        residual_norm,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_timestamp, schedule_from_ranges, Appliance, ApplianceInventory};

    fn t0() -> NaiveDateTime {
        parse_timestamp("2024-01-01T00:00:00").unwrap()
    }

    fn dataset(appliances: Vec<Appliance>, hours: usize) -> CampusDataset {
        let feeder = HourlySeries::from_values(t0(), vec![1.0; hours]).unwrap();
        CampusDataset::new(
            feeder,
            vec![ApplianceInventory::new("B1", appliances).unwrap()],
            vec![false; hours],
        )
        .unwrap()
    }

    #[test]
    fn constant_schedule() {
        let ds = dataset(vec![Appliance::new("a", 2.0, 3, [true; 24]).unwrap()], 48);
        let est = aim_estimate(&ds);
        assert!((0..48).all(|t| est.get(t, 0) == Some(6.0)));
    }

    #[test]
    fn all_off_schedule() {
        let ds = dataset(vec![Appliance::new("a", 2.0, 3, [false; 24]).unwrap()], 30);
        let est = aim_estimate(&ds);
        assert!((0..30).all(|t| est.get(t, 0) == Some(0.0)));
    }

    #[test]
    fn split_schedule_sums() {
        let ds = dataset(
            vec![
                Appliance::new("a", 1.0, 2, schedule_from_ranges(&[(0, 11)])).unwrap(),
                Appliance::new("b", 0.5, 4, schedule_from_ranges(&[(12, 23)])).unwrap(),
            ],
            24,
        );
        let est = aim_estimate(&ds);
        assert!((0..24).all(|t| est.get(t, 0) == Some(2.0)));
    }

    #[test]
    fn feasible_row_is_fixed_point() {
        let r = reconcile_hour(&[10.0, 20.0, 30.0], 60.0).unwrap();
        assert_eq!(r.values, vec![10.0, 20.0, 30.0]);
        assert_eq!(r.flag, HourFlag::Reconciled);
    }

    #[test]
    fn shrink_to_smaller_total() {
        // Threshold tau = (20 + 30 - 30) / 2 = 10 on support {20, 30}.
        let r = reconcile_hour(&[10.0, 20.0, 30.0], 30.0).unwrap();
        assert_eq!(r.values, vec![0.0, 10.0, 20.0]);
    }

    #[test]
    fn single_building_takes_feeder() {
        assert_eq!(reconcile_hour(&[5.0], 42.0).unwrap().values, vec![42.0]);
    }

    #[test]
    fn zero_estimates_split_uniformly() {
        let r = reconcile_hour(&[0.0, 0.0, 0.0, 0.0], 8.0).unwrap();
        assert_eq!(r.values, vec![2.0; 4]);
        assert_eq!(r.flag, HourFlag::UniformSplit);
    }

    #[test]
    fn negative_feeder_rejected() {
        assert!(matches!(
            reconcile_hour(&[1.0], -1.0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn zero_feeder_zeroes_everything() {
        assert_eq!(
            reconcile_hour(&[3.0, 4.0], 0.0).unwrap().values,
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn reconcile_all_passes_gaps_through() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let est = BuildingEstimates::new(
            t0(),
            ids,
            3,
            vec![
                Some(1.0),
                Some(2.0),
                Some(1.0),
                Some(2.0),
                Some(1.0),
                Some(2.0),
            ],
        )
        .unwrap();
        let feeder = HourlySeries::new(t0(), vec![Some(3.0), None, Some(6.0)]).unwrap();
        let r = reconcile_all(&est, &feeder).unwrap();
        assert_eq!(
            r.flags,
            vec![HourFlag::Reconciled, HourFlag::Gap, HourFlag::Reconciled]
        );
        assert_eq!(r.residual_norm[0], 0.0);
        assert_eq!(r.reconciled.row(1), &[Some(1.0), Some(2.0)]);
        assert_eq!(r.reconciled.row(2), &[Some(2.5), Some(3.5)]);
    }

    #[test]
    fn reconcile_all_axis_mismatch() {
        let est =
            BuildingEstimates::new(t0(), vec!["a".into()], 2, vec![Some(1.0), Some(1.0)]).unwrap();
        let feeder = HourlySeries::from_values(t0(), vec![1.0; 3]).unwrap();
        assert!(matches!(
            reconcile_all(&est, &feeder),
            Err(Error::Argument(_))
        ));
    }
}
