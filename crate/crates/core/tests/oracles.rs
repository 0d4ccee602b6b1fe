//! Library results against independent reference computations.

mod common;

use common::close;
use gridshed::allocate::{solve_shedding, SheddingProblem};
use gridshed::cluster::{fit_kmeans, ward_linkage};
use gridshed::forecast::crps_gaussian;
use gridshed::linalg::Matrix;
use gridshed::reduce::{pca_fit, FeatureMatrix};
use gridshed::rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn shedding_matches_every_fill_order() {
    let mut r = rng::seeded(11);
    for i in 0..1000 {
        let n = r.random_range(1..=6);
        let demands: Vec<f64> = (0..n).map(|_| r.random_range(0.0..80.0)).collect();
        // Repeated weights exercise tie handling.
        let weights: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(1..=4u8))).collect();
        let total: f64 = demands.iter().sum();
        let deficit = match i % 4 {
            0 => 0.0,
            1 => total,
            2 => total + 5.0,
            _ => r.random_range(0.0..total.max(1e-9)),
        };
        let plan = solve_shedding(
            &SheddingProblem::new(deficit, demands.clone(), weights.clone()).unwrap(),
        );
        match common::shedding_oracle(deficit, &demands, &weights) {
            Some(best) => {
                assert!(plan.feasible);
                assert!(
                    close(plan.objective, best, 1e-9),
                    "{} vs {best}",
                    plan.objective
                );
                assert!(close(plan.total_shed, deficit, 1e-9));
            }
            None => {
                assert!(!plan.feasible);
                assert_eq!(plan.curtailment, demands);
            }
        }
    }
}

#[test]
fn simplex_projection_matches_support_enumeration() {
    let mut r = rng::seeded(12);
    for _ in 0..500 {
        let n = r.random_range(1..=6);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(0.0..10.0)).collect();
        let mass = r.random_range(0.0..30.0);
        let got = gridshed::disagg::project_to_simplex(&a, mass);
        let want = common::simplex_oracle(&a, mass);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9, "{got:?} vs {want:?}");
        }
    }
}

fn wcss(points: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<&[f64; 2]> = points
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(p, _)| p)
            .collect();
        if members.is_empty() {
            return f64::INFINITY;
        }
        let m = members.len() as f64;
        let cx = members.iter().map(|p| p[0]).sum::<f64>() / m;
        let cy = members.iter().map(|p| p[1]).sum::<f64>() / m;
        total += members
            .iter()
            .map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2))
            .sum::<f64>();
    }
    total
}

#[test]
fn kmeans_reaches_brute_force_optimum() {
    let mut r = rng::seeded(13);
    let centres = [[0.0, 0.0], [4.0, 1.0], [1.5, 5.0]];
    let points: Vec<[f64; 2]> = (0..12)
        .map(|i| {
            let c = centres[i % 3];
            [
                c[0] + r.random_range(-1.2..1.2),
                c[1] + r.random_range(-1.2..1.2),
            ]
        })
        .collect();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; 12];
    for code in 0..3usize.pow(12) {
        let mut x = code;
        for l in labels.iter_mut() {
            *l = x % 3;
            x /= 3;
        }
        best = best.min(wcss(&points, &labels, 3));
    }
    let rows: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
    let model = fit_kmeans(&FeatureMatrix::from_rows(&rows).unwrap(), 3, 5).unwrap();
    let got: Vec<usize> = model.labels.iter().map(|&l| l as usize).collect();
    assert!(
        close(wcss(&points, &got, 3), best, 1e-9),
        "{} vs {best}",
        wcss(&points, &got, 3)
    );
}

#[test]
fn pca_eigenpairs_satisfy_covariance() {
    let mut r = rng::seeded(14);
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|_| {
            let a: f64 = r.random_range(-3.0..3.0);
            let b: f64 = r.random_range(-1.0..1.0);
            vec![a, 0.5 * a + b, r.random_range(-0.5..0.5), b - a]
        })
        .collect();
    let model = pca_fit(&FeatureMatrix::from_rows(&rows).unwrap(), 1.0).unwrap();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..4)
        .map(|j| rows.iter().map(|x| x[j]).sum::<f64>() / n)
        .collect();
    let mut cov = Matrix::zeros(4, 4);
    for x in &rows {
        for a in 0..4 {
            for b in 0..4 {
                cov[(a, b)] += (x[a] - mean[a]) * (x[b] - mean[b]) / (n - 1.0);
            }
        }
    }
    let trace: f64 = (0..4).map(|j| cov[(j, j)]).sum();
    assert!(close(model.eigenvalues.iter().sum::<f64>(), trace, 1e-9));
    assert!(model.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    for c in 0..model.n_components() {
        let v = model.components.row(c);
        let cv = cov.mat_vec(v);
        for j in 0..4 {
            assert!(
                (cv[j] - model.eigenvalues[c] * v[j]).abs() <= 1e-9,
                "component {c}"
            );
        }
        for d in 0..model.n_components() {
            let dot: f64 = v
                .iter()
                .zip(model.components.row(d))
                .map(|(a, b)| a * b)
                .sum();
            assert!((dot - if c == d { 1.0 } else { 0.0 }).abs() <= 1e-9);
        }
    }
}

#[test]
fn crps_matches_monte_carlo() {
    let mut r = rng::seeded(15);
    for (y, mu, sigma) in [
        (0.0, 0.0, 1.0),
        (1.0, -1.0, 0.5),
        (30.0, 25.0, 4.0),
        (-2.0, 0.0, 10.0),
    ] {
        let dist = Normal::new(mu, sigma).unwrap();
        let m = 100_000;
        let mut draws: Vec<f64> = (0..m).map(|_| dist.sample(&mut r)).collect();
        let e1 = draws.iter().map(|a| (a - y).abs()).sum::<f64>() / m as f64;
        draws.sort_by(f64::total_cmp);
        let pairs: f64 = draws
            .iter()
            .enumerate()
            .map(|(i, x)| (2.0 * i as f64 + 1.0 - m as f64) * x)
            .sum();
        let mc = e1 - pairs / (m as f64 * (m as f64 - 1.0));
        let exact = crps_gaussian(y, mu, sigma);
        assert!((exact - mc).abs() <= 0.01 * mc, "{exact} vs {mc}");
    }
}

#[test]
fn gru_gradient_every_group() {
    for seed in [3, 17, 29] {
        for (group, err) in common::gru_gradient_errors(seed, 4, 6, 3) {
            assert!(err < 1e-4, "seed {seed}, group {group}: {err:.2e}");
        }
    }
}

#[test]
fn ward_heights_match_merge_cost() {
    // Each height is the increase in WCSS caused by that merge.
    let pts = [0.0, 1.0, 10.0, 11.0, 30.0];
    let rows: Vec<Vec<f64>> = pts.iter().map(|&x| vec![x]).collect();
    let merges = ward_linkage(&FeatureMatrix::from_rows(&rows).unwrap());
    assert_eq!(merges.len(), 4);
    assert!(close(merges[0].height, 0.5, 1e-12));
    assert!(close(merges[1].height, 0.5, 1e-12));
    let increase = |a: &[f64], b: &[f64]| {
        let ma = a.iter().sum::<f64>() / a.len() as f64;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64 * (ma - mb).powi(2)
    };
    assert!(close(
        merges[2].height,
        increase(&[0.0, 1.0], &[10.0, 11.0]),
        1e-12
    ));
    assert!(close(
        merges[3].height,
        increase(&[0.0, 1.0, 10.0, 11.0], &[30.0]),
        1e-12
    ));
}
