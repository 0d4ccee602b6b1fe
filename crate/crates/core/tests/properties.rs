//! Invariants checked over generated inputs.

use gridshed::allocate::{solve_shedding, SheddingProblem};
use gridshed::cluster::{compute_validity, fit_kmeans};
use gridshed::data::{parse_timestamp, read_feeder_csv, write_feeder_csv, HourlySeries};
use gridshed::disagg::project_to_simplex;
use gridshed::forecast::compute_metrics;
use gridshed::reduce::FeatureMatrix;
use proptest::prelude::*;

fn norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Same partition, whatever the label numbering.
fn same_partition(a: &[i32], b: &[i32]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

proptest! {
    #[test]
    fn projection_lands_on_simplex(x in prop::collection::vec(-50.0..50.0f64, 1..12), mass in 0.0..200.0f64) {
        let v = project_to_simplex(&x, mass);
        prop_assert!(v.iter().all(|&a| a >= 0.0));
        prop_assert!(close(v.iter().sum(), mass, 1e-9));
    }

    #[test]
    fn projection_is_idempotent(x in prop::collection::vec(-50.0..50.0f64, 1..12), mass in 0.0..200.0f64) {
        let once = project_to_simplex(&x, mass);
        let twice = project_to_simplex(&once, mass);
        prop_assert!(norm(&once, &twice) <= 1e-9 * mass.max(1.0));
    }

    #[test]
    fn projection_is_non_expansive(
        pair in (1usize..10).prop_flat_map(|n| (
            prop::collection::vec(-50.0..50.0f64, n),
            prop::collection::vec(-50.0..50.0f64, n),
        )),
        mass in 0.0..200.0f64,
    ) {
        let (x, y) = pair;
        let px = project_to_simplex(&x, mass);
        let py = project_to_simplex(&y, mass);
        prop_assert!(norm(&px, &py) <= norm(&x, &y) + 1e-9);
    }

    #[test]
    fn metrics_scale_as_expected(
        data in prop::collection::vec((1.0..100.0f64, 1.0..100.0f64, 0.1..5.0f64), 2..40),
        c in 0.01..100.0f64,
    ) {
        let actual: Vec<f64> = data.iter().map(|d| d.0).collect();
        let pred: Vec<f64> = data.iter().map(|d| d.1).collect();
        let lo: Vec<f64> = data.iter().map(|d| d.1 - d.2).collect();
        let hi: Vec<f64> = data.iter().map(|d| d.1 + d.2).collect();
        let s = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
        let base = compute_metrics(&actual, &pred, Some((&lo, &hi))).unwrap();
        let scaled = compute_metrics(&s(&actual), &s(&pred), Some((&s(&lo), &s(&hi)))).unwrap();
        prop_assert!(close(scaled.rmse, c * base.rmse, 1e-9));
        prop_assert!(close(scaled.crps.unwrap(), c * base.crps.unwrap(), 1e-9));
        prop_assert!(close(scaled.mape.unwrap(), base.mape.unwrap(), 1e-9));
        if base.r_squared.is_finite() {
            prop_assert!(close(scaled.r_squared, base.r_squared, 1e-9));
        }
    }

    #[test]
    fn rmse_ignores_common_shift(
        data in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64), 1..40),
        shift in -50.0..50.0f64,
    ) {
        let actual: Vec<f64> = data.iter().map(|d| d.0).collect();
        let pred: Vec<f64> = data.iter().map(|d| d.1).collect();
        let s = |v: &[f64]| v.iter().map(|x| x + shift).collect::<Vec<_>>();
        let base = compute_metrics(&actual, &pred, None).unwrap();
        let shifted = compute_metrics(&s(&actual), &s(&pred), None).unwrap();
        prop_assert!(close(shifted.rmse, base.rmse, 1e-9));
    }

    #[test]
    fn validity_ignores_label_names(
        rows in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 2), 6..40),
        seed in any::<u64>(),
    ) {
        let n = rows.len();
        let labels: Vec<i32> = (0..n).map(|i| ((seed >> (i % 60)) as i32 & 1) + if i % 3 == 0 { 2 } else { 0 }).collect();
        let fm = FeatureMatrix::from_rows(&rows).unwrap();
        let base = compute_validity(&fm, &labels);
        // Swap names 0 <-> 2 and shift everything up by 5.
        let renamed: Vec<i32> = labels.iter().map(|&l| match l { 0 => 7, 2 => 5, other => other + 5 }).collect();
        let other = compute_validity(&fm, &renamed);
        match (base, other) {
            (Ok(a), Ok(b)) => {
                prop_assert!(close(a.silhouette, b.silhouette, 1e-12));
                prop_assert!(close(a.davies_bouldin, b.davies_bouldin, 1e-12));
                prop_assert!(a.calinski_harabasz == b.calinski_harabasz || close(a.calinski_harabasz, b.calinski_harabasz, 1e-12));
                prop_assert!(close(a.wcss, b.wcss, 1e-12));
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "renaming changed definedness"),
        }
    }

    #[test]
    fn kmeans_ignores_uniform_scale(
        rows in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 3), 8..30),
        exp in -3i32..4,
        seed in 0u64..1000,
    ) {
        // Powers of two scale without rounding, so the runs are comparable.
        let c = 2f64.powi(exp);
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
        let a = fit_kmeans(&FeatureMatrix::from_rows(&rows).unwrap(), 3, seed).unwrap();
        let b = fit_kmeans(&FeatureMatrix::from_rows(&scaled).unwrap(), 3, seed).unwrap();
        prop_assert!(same_partition(&a.labels, &b.labels));
    }

    #[test]
    fn shedding_stays_in_the_box(
        items in prop::collection::vec((0.0..100.0f64, 0.1..10.0f64), 1..8),
        fraction in 0.0..1.2f64,
    ) {
        let demands: Vec<f64> = items.iter().map(|i| i.0).collect();
        let weights: Vec<f64> = items.iter().map(|i| i.1).collect();
        let total: f64 = demands.iter().sum();
        let deficit = fraction * total;
        let plan = solve_shedding(&SheddingProblem::new(deficit, demands.clone(), weights).unwrap());
        for (l, d) in plan.curtailment.iter().zip(&demands) {
            prop_assert!(*l >= 0.0 && *l <= *d);
        }
        if deficit <= total {
            prop_assert!(plan.feasible);
            // Nothing beyond the deficit is shed.
            prop_assert!(close(plan.total_shed, deficit, 1e-9));
        } else {
            prop_assert!(!plan.feasible);
        }
    }

    #[test]
    fn shedding_grows_with_the_deficit(
        items in prop::collection::vec((0.0..100.0f64, 0.1..10.0f64), 1..8),
        a in 0.0..1.0f64,
        b in 0.0..1.0f64,
    ) {
        let demands: Vec<f64> = items.iter().map(|i| i.0).collect();
        let weights: Vec<f64> = items.iter().map(|i| i.1).collect();
        let total: f64 = demands.iter().sum();
        let (lo, hi) = (a.min(b) * total, a.max(b) * total);
        let small = solve_shedding(&SheddingProblem::new(lo, demands.clone(), weights.clone()).unwrap());
        let large = solve_shedding(&SheddingProblem::new(hi, demands, weights).unwrap());
        for (s, l) in small.curtailment.iter().zip(&large.curtailment) {
            prop_assert!(*s <= *l + 1e-9);
        }
        prop_assert!(small.objective <= large.objective + 1e-9);
    }

    #[test]
    fn shedding_ignores_weight_scale(
        items in prop::collection::vec((0.0..100.0f64, 0.1..10.0f64), 1..8),
        fraction in 0.0..1.0f64,
        c in 0.01..100.0f64,
    ) {
        let demands: Vec<f64> = items.iter().map(|i| i.0).collect();
        let weights: Vec<f64> = items.iter().map(|i| i.1).collect();
        let deficit = fraction * demands.iter().sum::<f64>();
        let base = solve_shedding(&SheddingProblem::new(deficit, demands.clone(), weights.clone()).unwrap());
        let scaled = solve_shedding(
            &SheddingProblem::new(deficit, demands, weights.iter().map(|w| w * c).collect()).unwrap(),
        );
        prop_assert!(close(scaled.objective, c * base.objective, 1e-9));
        for (x, y) in base.curtailment.iter().zip(&scaled.curtailment) {
            prop_assert!(close(*x, *y, 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feeder_csv_round_trips(values in prop::collection::vec(prop::option::weighted(0.9, 0.0..1e6f64), 1..100)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("feeder.csv");
        // Leading and trailing gaps cannot be expressed as missing rows.
        let mut values = values;
        values[0] = Some(1.0);
        let last = values.len() - 1;
        values[last] = Some(2.0);
        let series = HourlySeries::new(parse_timestamp("2024-03-01T00:00:00").unwrap(), values).unwrap();
        write_feeder_csv(&path, &series).unwrap();
        let back = read_feeder_csv(&path).unwrap();
        prop_assert_eq!(back.start(), series.start());
        prop_assert_eq!(back.len(), series.len());
        for (a, b) in back.values().iter().zip(series.values()) {
            match (a, b) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 5e-9 * y.abs()),
                (None, None) => {}
                _ => prop_assert!(false, "gap pattern changed"),
            }
        }
        // A second pass is exact: values are already at written precision.
        let again = dir.path().join("again.csv");
        write_feeder_csv(&again, &back).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }
}
