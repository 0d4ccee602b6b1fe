//! Normalised spectral clustering (Ng-Jordan-Weiss).
//!
//! Affinity is a Gaussian kernel whose bandwidth is the median pairwise
//! distance. Rows of the k bottom eigenvectors of the symmetric normalised
//! Laplacian are unit-normalised and clustered with k-means.

use super::kmeans::fit_kmeans;
use super::{check_k, label_means, Algorithm, ClusterModel};
use crate::linalg::{distance, symmetric_eigen, Matrix};
use crate::reduce::FeatureMatrix;
use crate::{Error, Result};

/// RBF affinity with zero diagonal, plus the bandwidth used.
pub fn rbf_affinity(features: &FeatureMatrix) -> Result<(Matrix, f64)> {
    let n = features.n_rows();
    if n < 2 {
        return Err(Error::arg("spectral clustering needs at least two rows"));
    }
    let mut dist = Matrix::zeros(n, n);
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let dd = distance(features.row(i), features.row(j));
            dist[(i, j)] = dd;
            dist[(j, i)] = dd;
            pairs.push(dd);
        }
    }
    pairs.sort_by(f64::total_cmp);
    let m = pairs.len();
    let sigma = if m % 2 == 1 {
        pairs[m / 2]
    } else {
        0.5 * (pairs[m / 2 - 1] + pairs[m / 2])
    };
    if !(sigma > 0.0) {
        return Err(Error::invalid(
            "median pairwise distance is zero; affinity bandwidth undefined",
        ));
    }
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let dd = dist[(i, j)];
                w[(i, j)] = (-dd * dd / (2.0 * sigma * sigma)).exp();
            }
        }
    }
    Ok((w, sigma))
}

/// `I - D^{-1/2} W D^{-1/2}` and the degree vector.
pub fn normalized_laplacian(w: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let n = w.rows();
    let degree: Vec<f64> = (0..n).map(|i| w.row(i).iter().sum()).collect();
    if let Some(i) = degree.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Numeric(format!("row {i} has zero affinity degree")));
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            l[(i, j)] = id - inv_sqrt[i] * w[(i, j)] * inv_sqrt[j];
        }
    }
    Ok((l, degree))
}

/// Spectral embedding and k-means labels from a precomputed affinity.
pub fn spectral_from_affinity(w: &Matrix, k: usize, seed: u64) -> Result<(Vec<i32>, Matrix)> {
    let n = w.rows();
    if k == 0 || k > n {
        return Err(Error::arg(format!("k = {k} must lie in 1..={n}")));
    }
    let (l, _) = normalized_laplacian(w)?;
    let eig = symmetric_eigen(&l)?;
    // Eigenvalues come sorted descending: the k smallest are at the end.
    let mut embedding = Matrix::zeros(n, k);
    for c in 0..k {
        let v = eig.vector(n - 1 - c);
        for i in 0..n {
            embedding[(i, c)] = v[i];
        }
    }
    for i in 0..n {
        let norm = embedding.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            embedding.row_mut(i).iter_mut().for_each(|x| *x /= norm);
        }
    }
    let emb = FeatureMatrix::new(
        (0..n).map(|i| format!("r{i}")).collect(),
        embedding.clone(),
        (0..k).map(|c| format!("e{c}")).collect(),
    )?;
    let km = fit_kmeans(&emb, k, seed)?;
    Ok((km.labels, embedding))
}

pub fn fit_spectral(features: &FeatureMatrix, k: usize, seed: u64) -> Result<ClusterModel> {
    check_k(features, k)?;
    let (w, sigma) = rbf_affinity(features)?;
    let (labels, _) = spectral_from_affinity(&w, k, seed)?;
    let centroids = label_means(features, &labels, k);
    Ok(ClusterModel {
        algorithm: Algorithm::Spectral,
        labels,
        k,
        centroids: Some(centroids),
        memberships: None,
        params: vec![("bandwidth", sigma)],
        seed: Some(seed),
        trace: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_nullspace() {
        let f = FeatureMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.5],
            vec![2.0, 2.0],
            vec![0.3, 1.7],
            vec![3.0, 0.1],
        ])
        .unwrap();
        let (w, _) = rbf_affinity(&f).unwrap();
        let (l, degree) = normalized_laplacian(&w).unwrap();
        let eig = symmetric_eigen(&l).unwrap();
        let n = degree.len();
        assert!(eig.values[n - 1].abs() < 1e-12);
        let v = eig.vector(n - 1);
        let target: Vec<f64> = degree.iter().map(|d| d.sqrt()).collect();
        let norm = target.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos = v.iter().zip(&target).map(|(a, b)| a * b).sum::<f64>() / norm;
        assert!((cos.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn disconnected_components_recovered() {
        // Two 3-node cliques with no edges between them.
        let mut w = Matrix::zeros(6, 6);
        for block in [[0, 2, 4], [1, 3, 5]] {
            for &i in &block {
                for &j in &block {
                    if i != j {
                        w[(i, j)] = 1.0;
                    }
                }
            }
        }
        let (labels, _) = spectral_from_affinity(&w, 2, 3).unwrap();
        assert_eq!(labels[0], labels[2]);
        assert_eq!(labels[0], labels[4]);
        assert_eq!(labels[1], labels[3]);
        assert_eq!(labels[1], labels[5]);
        assert_ne!(labels[0], labels[1]);
    }

    #[test]
    fn identical_points_rejected() {
        let f = FeatureMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(fit_spectral(&f, 2, 0), Err(Error::Validation(_))));
    }
}
