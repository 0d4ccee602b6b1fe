//! Lloyd's algorithm with k-means++ seeding and best-of-n restarts.

use rand::Rng;

use super::{check_k, Algorithm, ClusterModel};
use crate::linalg::{squared_distance, Matrix};
use crate::reduce::FeatureMatrix;
use crate::rng;
use crate::Result;

#[derive(Debug, Clone)]
pub struct KMeansOptions {
    pub n_init: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            n_init: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

pub fn fit_kmeans(features: &FeatureMatrix, k: usize, seed: u64) -> Result<ClusterModel> {
    fit_kmeans_with(features, k, seed, &KMeansOptions::default())
}

pub fn fit_kmeans_with(
    features: &FeatureMatrix,
    k: usize,
    seed: u64,
    options: &KMeansOptions,
) -> Result<ClusterModel> {
    check_k(features, k)?;
    let mut rng = rng::seeded(seed);
    let mut best: Option<(f64, Vec<i32>, Matrix, Vec<f64>)> = None;
    for _ in 0..options.n_init.max(1) {
        let init = kmeans_plus_plus(features, k, &mut rng);
        let (labels, centroids, trace) = lloyd(features, init, options);
        let wcss = *trace.last().expect("at least one assignment");
        if best.as_ref().is_none_or(|(b, ..)| wcss < *b) {
            best = Some((wcss, labels, centroids, trace));
        }
    }
    let (_, labels, centroids, trace) = best.expect("n_init >= 1");
    Ok(ClusterModel {
        algorithm: Algorithm::KMeans,
        labels,
        k,
        centroids: Some(centroids),
        memberships: None,
        params: vec![
            ("n_init", options.n_init as f64),
            ("max_iter", options.max_iter as f64),
            ("tol", options.tol),
        ],
        seed: Some(seed),
        trace,
    })
}

/// D^2-weighted seeding. Falls back to a uniform draw when every remaining
/// point coincides with a chosen centre.
pub fn kmeans_plus_plus<R: Rng>(features: &FeatureMatrix, k: usize, rng: &mut R) -> Matrix {
    let n = features.n_rows();
    let d = features.n_features();
    let mut centroids = Matrix::zeros(k, d);
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(features.row(first));
    let mut closest: Vec<f64> = (0..n)
        .map(|i| squared_distance(features.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(features.row(pick));
        for (i, slot) in closest.iter_mut().enumerate() {
            *slot = slot.min(squared_distance(features.row(i), centroids.row(c)));
        }
    }
    centroids
}

/// Nearest centroid per row, ties to the lowest index. Returns labels and
/// the summed squared distance.
pub fn assign_nearest(features: &FeatureMatrix, centroids: &Matrix) -> (Vec<i32>, f64) {
    let mut total = 0.0;
    let labels = (0..features.n_rows())
        .map(|i| {
            let (label, dist) = nearest(features.row(i), centroids);
            total += dist;
            label as i32
        })
        .collect();
    (labels, total)
}

pub(crate) fn nearest(x: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let dist = squared_distance(x, centroids.row(c));
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

fn lloyd(
    features: &FeatureMatrix,
    mut centroids: Matrix,
    options: &KMeansOptions,
) -> (Vec<i32>, Matrix, Vec<f64>) {
    let k = centroids.rows();
    let d = features.n_features();
    let mut trace = Vec::new();
    let (mut labels, wcss) = assign_nearest(features, &centroids);
    trace.push(wcss);
    for _ in 0..options.max_iter {
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l as usize] += 1;
            for (s, &x) in sums.row_mut(l as usize).iter_mut().zip(features.row(i)) {
                *s += x;
            }
        }
        let mut updated = Matrix::zeros(k, d);
        for c in 0..k {
            if counts[c] > 0 {
                for (u, s) in updated.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *u = s / counts[c] as f64;
                }
            } else {
                // Re-seed an empty cluster at the worst-served point.
                let far = (0..features.n_rows())
                    .map(|i| {
                        (
                            i,
                            squared_distance(features.row(i), centroids.row(labels[i] as usize)),
                        )
                    })
                    .fold(
                        (0, -1.0),
                        |acc, (i, dd)| if dd > acc.1 { (i, dd) } else { acc },
                    )
                    .0;
                updated.row_mut(c).copy_from_slice(features.row(far));
            }
        }
        let shift = (0..k)
            .map(|c| squared_distance(updated.row(c), centroids.row(c)).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        let (new_labels, wcss) = assign_nearest(features, &centroids);
        labels = new_labels;
        trace.push(wcss);
        if shift < options.tol {
            break;
        }
    }
    (labels, centroids, trace)
}
