//! Agglomerative clustering with Ward linkage.
//!
//! Merge cost is the increase in within-cluster sum of squares,
//! `n_a n_b / (n_a + n_b) * |c_a - c_b|^2`, updated after each merge with
//! the Lance-Williams recurrence.

use super::{check_k, label_means, Algorithm, ClusterModel};
use crate::linalg::squared_distance;
use crate::reduce::FeatureMatrix;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Surviving cluster slot (lower row index of the pair).
    pub into: usize,
    pub absorbed: usize,
    /// Ward cost of the merge.
    pub height: f64,
    pub size: usize,
}

/// Full merge sequence (n - 1 merges). Ties pick the lexicographically
/// smallest pair.
pub fn ward_linkage(features: &FeatureMatrix) -> Vec<Merge> {
    let n = features.n_rows();
    let mut cost = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = 0.5 * squared_distance(features.row(i), features.row(j));
            cost[i][j] = c;
            cost[j][i] = c;
        }
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && cost[i][j] < best.2 {
                    best = (i, j, cost[i][j]);
                }
            }
        }
        let (a, b, height) = best;
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for m in 0..n {
            if !active[m] || m == a || m == b {
                continue;
            }
            let nm = size[m] as f64;
            let updated =
                ((na + nm) * cost[a][m] + (nb + nm) * cost[b][m] - nm * height) / (na + nb + nm);
            cost[a][m] = updated;
            cost[m][a] = updated;
        }
        active[b] = false;
        size[a] += size[b];
        merges.push(Merge {
            into: a,
            absorbed: b,
            height,
            size: size[a],
        });
    }
    merges
}

/// Cut the Ward dendrogram at `k` clusters. Labels are numbered by first
/// appearance in row order.
pub fn fit_hierarchical(features: &FeatureMatrix, k: usize) -> Result<ClusterModel> {
    check_k(features, k)?;
    let n = features.n_rows();
    let merges = ward_linkage(features);
    let mut owner: Vec<usize> = (0..n).collect();
    for m in &merges[..n - k] {
        for o in owner.iter_mut() {
            if *o == m.absorbed {
                *o = m.into;
            }
        }
    }
    let mut map = std::collections::HashMap::new();
    let labels: Vec<i32> = owner
        .iter()
        .map(|o| {
            let next = map.len() as i32;
            *map.entry(*o).or_insert(next)
        })
        .collect();
    let centroids = label_means(features, &labels, k);
    Ok(ClusterModel {
        algorithm: Algorithm::Hierarchical,
        labels,
        k,
        centroids: Some(centroids),
        memberships: None,
        params: vec![],
        seed: None,
        trace: merges.iter().map(|m| m.height).collect(),
    })
}
