//! Choosing k by tabulating validity indices over a range of k.

use super::{fit, validity::compute_validity, Algorithm, ValidityScores};
use crate::reduce::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityRow {
    pub algorithm: Algorithm,
    /// Requested k.
    pub k: usize,
    /// Clusters actually found (differs from `k` only for DBSCAN).
    pub found: usize,
    pub scores: ValidityScores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub rows: Vec<ValidityRow>,
    pub best_silhouette_k: usize,
    pub best_davies_bouldin_k: usize,
    pub best_calinski_harabasz_k: usize,
}

fn arg_best(rows: &[ValidityRow], key: impl Fn(&ValidityScores) -> f64, maximize: bool) -> usize {
    let mut best = &rows[0];
    for r in &rows[1..] {
        let (a, b) = (key(&r.scores), key(&best.scores));
        if (maximize && a > b) || (!maximize && a < b) {
            best = r;
        }
    }
    best.k
}

/// Fit `algorithm` at each k and report the silhouette-argmax, DBI-argmin
/// and CH-argmax k (ties to the smaller k).
pub fn select_k(
    features: &FeatureMatrix,
    algorithm: Algorithm,
    k_range: &[usize],
    seed: u64,
) -> Result<ValidityReport> {
    if k_range.is_empty() {
        return Err(Error::arg("empty k range"));
    }
    let n = features.n_rows();
    if let Some(&bad) = k_range.iter().find(|&&k| k < 2 || k + 1 > n) {
        return Err(Error::arg(format!(
            "k = {bad} outside [2, {}]",
            n.saturating_sub(1)
        )));
    }
    let rows = k_range
        .iter()
        .map(|&k| {
            let model = fit(features, algorithm, k, seed)?;
            let scores = compute_validity(features, &model.labels)?;
            Ok(ValidityRow {
                algorithm,
                k,
                found: model.k,
                scores,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValidityReport {
        best_silhouette_k: arg_best(&rows, |s| s.silhouette, true),
        best_davies_bouldin_k: arg_best(&rows, |s| s.davies_bouldin, false),
        best_calinski_harabasz_k: arg_best(&rows, |s| s.calinski_harabasz, true),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_k_gives_single_row() {
        let rows: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![(i / 3) as f64 * 10.0 + (i % 3) as f64])
            .collect();
        let f = FeatureMatrix::from_rows(&rows).unwrap();
        let r = select_k(&f, Algorithm::KMeans, &[2], 1).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.best_silhouette_k, 2);
    }

    #[test]
    fn k_range_bounds() {
        let f = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(select_k(&f, Algorithm::KMeans, &[3], 1).is_err());
        assert!(select_k(&f, Algorithm::KMeans, &[1], 1).is_err());
    }
}
