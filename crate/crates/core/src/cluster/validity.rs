//! Internal clustering validity indices.
//!
//! Noise rows (label -1) are dropped before anything is computed. Labels
//! are renumbered by first appearance, so every index is exactly invariant
//! to how the caller numbered the clusters.

use super::NOISE;
use crate::linalg::{distance, squared_distance};
use crate::reduce::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityScores {
    pub silhouette: f64,
    pub davies_bouldin: f64,
    /// `+inf` when the within-group dispersion is zero.
    pub calinski_harabasz: f64,
    pub wcss: f64,
    pub n_clusters: usize,
    pub n_noise: usize,
}

pub fn compute_validity(features: &FeatureMatrix, labels: &[i32]) -> Result<ValidityScores> {
    if labels.len() != features.n_rows() {
        return Err(Error::arg(format!(
            "{} labels for {} rows",
            labels.len(),
            features.n_rows()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l < NOISE) {
        return Err(Error::arg(format!("invalid label {bad}")));
    }
    let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != NOISE).collect();
    let mut map = std::collections::HashMap::new();
    let canon: Vec<usize> = rows
        .iter()
        .map(|&i| {
            let next = map.len();
            *map.entry(labels[i]).or_insert(next)
        })
        .collect();
    let k = map.len();
    if k < 2 {
        return Err(Error::Undefined(format!(
            "validity indices need at least two clusters, found {k}"
        )));
    }
    let n = rows.len();
    let d = features.n_features();

    let mut sizes = vec![0usize; k];
    let mut centroids = vec![vec![0.0; d]; k];
    for (&i, &c) in rows.iter().zip(&canon) {
        sizes[c] += 1;
        for (m, &x) in centroids[c].iter_mut().zip(features.row(i)) {
            *m += x;
        }
    }
    for (c, cen) in centroids.iter_mut().enumerate() {
        cen.iter_mut().for_each(|m| *m /= sizes[c] as f64);
    }

    // Silhouette from per-point sums of distances to every cluster.
    let mut sil_total = 0.0;
    let mut dist_to = vec![0.0; k];
    for (a, &i) in rows.iter().enumerate() {
        dist_to.iter_mut().for_each(|v| *v = 0.0);
        for (&j, &cj) in rows.iter().zip(&canon) {
            if i != j {
                dist_to[cj] += distance(features.row(i), features.row(j));
            }
        }
        let own = canon[a];
        if sizes[own] == 1 {
            continue;
        }
        let intra = dist_to[own] / (sizes[own] - 1) as f64;
        let nearest = (0..k)
            .filter(|&c| c != own)
            .map(|c| dist_to[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = intra.max(nearest);
        if denom > 0.0 {
            sil_total += (nearest - intra) / denom;
        }
    }
    let silhouette = sil_total / n as f64;

    let mut scatter = vec![0.0; k];
    let mut wcss = 0.0;
    for (&i, &c) in rows.iter().zip(&canon) {
        scatter[c] += distance(features.row(i), &centroids[c]);
        wcss += squared_distance(features.row(i), &centroids[c]);
    }
    for (s, &m) in scatter.iter_mut().zip(&sizes) {
        *s /= m as f64;
    }
    let mut db_total = 0.0;
    for a in 0..k {
        let mut worst: f64 = 0.0;
        for b in 0..k {
            if a == b {
                continue;
            }
            let sep = distance(&centroids[a], &centroids[b]);
            let spread = scatter[a] + scatter[b];
            let r = if sep > 0.0 {
                spread / sep
            } else if spread > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(r);
        }
        db_total += worst;
    }
    let davies_bouldin = db_total / k as f64;

    let mut grand = vec![0.0; d];
    for &i in &rows {
        for (g, &x) in grand.iter_mut().zip(features.row(i)) {
            *g += x;
        }
    }
    grand.iter_mut().for_each(|g| *g /= n as f64);
    let between: f64 = (0..k)
        .map(|c| sizes[c] as f64 * squared_distance(&centroids[c], &grand))
        .sum();
    let calinski_harabasz = if wcss > 0.0 {
        (between / (k - 1) as f64) / (wcss / (n - k) as f64)
    } else {
        f64::INFINITY
    };

    Ok(ValidityScores {
        silhouette,
        davies_bouldin,
        calinski_harabasz,
        wcss,
        n_clusters: k,
        n_noise: labels.len() - n,
    })
}
