//! Partitioning buildings by demand profile.
//!
//! Six algorithms share one result type, [`ClusterModel`]. Validity
//! indices (silhouette, Davies-Bouldin, Calinski-Harabasz, WCSS) live in
//! [`validity`] and drive k selection in [`select`].

mod dbscan;
mod gmm;
mod hierarchical;
mod kmeans;
mod minibatch;
pub mod select;
mod spectral;
pub mod validity;

pub use dbscan::{default_eps, fit_dbscan, fit_dbscan_default, k_distances, DEFAULT_MIN_PTS};
pub use gmm::{fit_gmm, fit_gmm_with, GmmOptions};
pub use hierarchical::{fit_hierarchical, ward_linkage, Merge};
pub use kmeans::{assign_nearest, fit_kmeans, fit_kmeans_with, kmeans_plus_plus, KMeansOptions};
pub use minibatch::{fit_minibatch_kmeans, fit_minibatch_kmeans_with, MiniBatchOptions};
pub use select::{select_k, ValidityReport, ValidityRow};
pub use spectral::{fit_spectral, normalized_laplacian, rbf_affinity, spectral_from_affinity};
pub use validity::{compute_validity, ValidityScores};

use std::fmt;
use std::str::FromStr;

use crate::linalg::Matrix;
use crate::reduce::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    KMeans,
    MiniBatch,
    Hierarchical,
    Dbscan,
    Gmm,
    Spectral,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::KMeans,
        Algorithm::Hierarchical,
        Algorithm::Gmm,
        Algorithm::Spectral,
        Algorithm::MiniBatch,
        Algorithm::Dbscan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::MiniBatch => "minibatch",
            Algorithm::Hierarchical => "hierarchical",
            Algorithm::Dbscan => "dbscan",
            Algorithm::Gmm => "gmm",
            Algorithm::Spectral => "spectral",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown clustering algorithm '{s}'")))
    }
}

pub const NOISE: i32 = -1;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub algorithm: Algorithm,
    /// Per-row cluster id in `0..k`; `NOISE` only for DBSCAN.
    pub labels: Vec<i32>,
    pub k: usize,
    pub centroids: Option<Matrix>,
    /// Rows x k, row-stochastic (GMM only).
    pub memberships: Option<Matrix>,
    pub params: Vec<(&'static str, f64)>,
    pub seed: Option<u64>,
    /// Objective per iteration: WCSS for the k-means family, log-likelihood
    /// for GMM, merge heights for hierarchical.
    pub trace: Vec<f64>,
}

impl ClusterModel {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn members(&self, cluster: i32) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Fit `algorithm` with its default parameters. DBSCAN ignores `k`.
pub fn fit(
    features: &FeatureMatrix,
    algorithm: Algorithm,
    k: usize,
    seed: u64,
) -> Result<ClusterModel> {
    match algorithm {
        Algorithm::KMeans => fit_kmeans(features, k, seed),
        Algorithm::MiniBatch => {
            fit_minibatch_kmeans(features, k, MiniBatchOptions::default().batch_size, seed)
        }
        Algorithm::Hierarchical => fit_hierarchical(features, k),
        Algorithm::Dbscan => fit_dbscan_default(features),
        Algorithm::Gmm => fit_gmm(features, k, seed),
        Algorithm::Spectral => fit_spectral(features, k, seed),
    }
}

/// Best-permutation accuracy of `labels` against `truth`: the largest
/// fraction of rows matched under a one-to-one map from predicted clusters
/// to true groups. Noise rows never match.
pub fn label_agreement(labels: &[i32], truth: &[usize]) -> Result<f64> {
    if labels.len() != truth.len() || labels.is_empty() {
        return Err(Error::arg(format!(
            "{} labels against {} true groups",
            labels.len(),
            truth.len()
        )));
    }
    let kp = labels.iter().map(|&l| l + 1).max().unwrap_or(0).max(0) as usize;
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    if kp > 10 || kt > 10 {
        return Err(Error::arg("label agreement supports at most 10 clusters"));
    }
    let mut table = vec![vec![0usize; kt]; kp];
    for (&l, &t) in labels.iter().zip(truth) {
        if l >= 0 {
            table[l as usize][t] += 1;
        }
    }
    fn best(table: &[Vec<usize>], row: usize, used: &mut Vec<bool>) -> usize {
        if row == table.len() {
            return 0;
        }
        let mut top = best(table, row + 1, used);
        for t in 0..used.len() {
            if !used[t] {
                used[t] = true;
                top = top.max(table[row][t] + best(table, row + 1, used));
                used[t] = false;
            }
        }
        top
    }
    Ok(best(&table, 0, &mut vec![false; kt]) as f64 / labels.len() as f64)
}

pub(crate) fn check_k(features: &FeatureMatrix, k: usize) -> Result<()> {
    if k == 0 || k > features.n_rows() {
        return Err(Error::arg(format!(
            "k = {k} must lie in 1..={} (number of rows)",
            features.n_rows()
        )));
    }
    Ok(())
}

/// Means of the rows carrying each label `0..k`; empty clusters get zeros.
pub(crate) fn label_means(features: &FeatureMatrix, labels: &[i32], k: usize) -> Matrix {
    let d = features.n_features();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        if l < 0 {
            continue;
        }
        let l = l as usize;
        counts[l] += 1;
        for (s, &x) in sums.row_mut(l).iter_mut().zip(features.row(i)) {
            *s += x;
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 {
            sums.row_mut(c).iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("optics".parse::<Algorithm>().is_err());
    }

    #[test]
    fn agreement_under_relabeling() {
        assert_eq!(label_agreement(&[2, 2, 0, 1], &[0, 0, 1, 2]).unwrap(), 1.0);
        assert_eq!(label_agreement(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert_eq!(
            label_agreement(&[-1, 0, 1, 1], &[0, 0, 1, 1]).unwrap(),
            0.75
        );
        assert!(label_agreement(&[0], &[0, 1]).is_err());
    }
}
