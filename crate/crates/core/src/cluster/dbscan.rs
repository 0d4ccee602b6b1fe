//! Density-based clustering with Euclidean neighbourhoods.

use std::collections::VecDeque;

use super::{label_means, Algorithm, ClusterModel, NOISE};
use crate::linalg::distance;
use crate::reduce::FeatureMatrix;
use crate::{Error, Result};

pub const DEFAULT_MIN_PTS: usize = 5;
/// Percentile of the k-distance curve used as the default radius.
const EPS_PERCENTILE: f64 = 0.90;

/// Distance from each row to its `k`-th nearest neighbour, counting the
/// row itself as the first neighbour.
pub fn k_distances(features: &FeatureMatrix, k: usize) -> Vec<f64> {
    let n = features.n_rows();
    (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .map(|j| distance(features.row(i), features.row(j)))
                .collect();
            d.sort_by(f64::total_cmp);
            d[(k.max(1) - 1).min(n - 1)]
        })
        .collect()
}

/// 90th percentile (linear interpolation) of the `min_pts`-distances.
pub fn default_eps(features: &FeatureMatrix, min_pts: usize) -> f64 {
    let mut kd = k_distances(features, min_pts);
    kd.sort_by(f64::total_cmp);
    let pos = EPS_PERCENTILE * (kd.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    kd[lo] + (kd[hi] - kd[lo]) * (pos - lo as f64)
}

pub fn fit_dbscan_default(features: &FeatureMatrix) -> Result<ClusterModel> {
    let eps = default_eps(features, DEFAULT_MIN_PTS);
    if eps > 0.0 {
        fit_dbscan(features, eps, DEFAULT_MIN_PTS)
    } else {
        fit_dbscan(features, f64::MIN_POSITIVE, DEFAULT_MIN_PTS)
    }
}

/// Core points have at least `min_pts` rows (themselves included) within
/// `eps`. Clusters are numbered in the order their first core point is met.
pub fn fit_dbscan(features: &FeatureMatrix, eps: f64, min_pts: usize) -> Result<ClusterModel> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::arg(format!(
            "eps must be a positive finite distance, got {eps}"
        )));
    }
    if min_pts == 0 {
        return Err(Error::arg("min_pts must be >= 1"));
    }
    let n = features.n_rows();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| distance(features.row(i), features.row(j)) <= eps)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels = vec![NOISE; n];
    let mut visited = vec![false; n];
    let mut next = 0i32;
    for i in 0..n {
        if visited[i] || !core[i] {
            continue;
        }
        let id = next;
        next += 1;
        let mut queue = VecDeque::from([i]);
        visited[i] = true;
        labels[i] = id;
        while let Some(p) = queue.pop_front() {
            if !core[p] {
                continue;
            }
            for &q in &neighbours[p] {
                if labels[q] == NOISE {
                    labels[q] = id;
                }
                if !visited[q] {
                    visited[q] = true;
                    if core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    let k = next as usize;
    Ok(ClusterModel {
        algorithm: Algorithm::Dbscan,
        centroids: (k > 0).then(|| label_means(features, &labels, k)),
        labels,
        k,
        memberships: None,
        params: vec![("eps", eps), ("min_pts", min_pts as f64)],
        seed: None,
        trace: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_with_outlier() -> FeatureMatrix {
        let mut rows: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i % 4) as f64 * 0.1, (i / 4) as f64 * 0.1])
            .collect();
        rows.push(vec![50.0, 50.0]);
        FeatureMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn huge_eps_single_cluster() {
        let m = fit_dbscan(&blob_with_outlier(), 1e6, 1).unwrap();
        assert_eq!(m.k, 1);
        assert_eq!(m.noise_count(), 0);
    }

    #[test]
    fn isolated_point_is_noise() {
        let m = fit_dbscan(&blob_with_outlier(), 0.5, 3).unwrap();
        assert_eq!(m.k, 1);
        assert_eq!(m.labels[12], NOISE);
        assert!(m.labels[..12].iter().all(|&l| l == 0));
    }

    #[test]
    fn border_point_joins_cluster() {
        // 0..3 are core with min_pts 3; 3.9 is a border point of the chain.
        let f = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![3.9]])
            .unwrap();
        let m = fit_dbscan(&f, 1.0, 3).unwrap();
        assert_eq!(m.labels, vec![0, 0, 0, 0, 0]);
        let m = fit_dbscan(&f, 1.0, 4).unwrap();
        assert_eq!(m.k, 0);
    }

    #[test]
    fn k_distance_counts_self() {
        let f = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(k_distances(&f, 1), vec![0.0, 0.0, 0.0]);
        assert_eq!(k_distances(&f, 2), vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(fit_dbscan(&blob_with_outlier(), 0.0, 3).is_err());
    }
}
