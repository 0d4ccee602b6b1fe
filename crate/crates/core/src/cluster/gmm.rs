//! Gaussian mixture with full covariances fitted by EM.
//!
//! Covariances carry a fixed diagonal ridge. Initial means come from a
//! k-means fit with the same seed.

use super::kmeans::fit_kmeans;
use super::{check_k, Algorithm, ClusterModel};
use crate::linalg::{cholesky, forward_substitute, Matrix};
use crate::reduce::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct GmmOptions {
    pub max_iter: usize,
    /// Stop when the log-likelihood gains less than this.
    pub tol: f64,
    pub ridge: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
            ridge: 1e-6,
        }
    }
}

struct Component {
    weight: f64,
    mean: Vec<f64>,
    cov: Matrix,
}

pub fn fit_gmm(features: &FeatureMatrix, k: usize, seed: u64) -> Result<ClusterModel> {
    fit_gmm_with(features, k, seed, &GmmOptions::default())
}

pub fn fit_gmm_with(
    features: &FeatureMatrix,
    k: usize,
    seed: u64,
    options: &GmmOptions,
) -> Result<ClusterModel> {
    check_k(features, k)?;
    let n = features.n_rows();
    let d = features.n_features();
    if d == 0 {
        return Err(Error::arg("GMM needs at least one feature"));
    }
    let init = fit_kmeans(features, k, seed)?;
    let global = weighted_covariance(features, &vec![1.0; n], options.ridge);
    let mut comps: Vec<Component> = (0..k)
        .map(|c| {
            let resp: Vec<f64> = init
                .labels
                .iter()
                .map(|&l| if l == c as i32 { 1.0 } else { 0.0 })
                .collect();
            let count: f64 = resp.iter().sum();
            if count >= 2.0 {
                let (mean, cov) = weighted_covariance(features, &resp, options.ridge);
                Component {
                    weight: count / n as f64,
                    mean,
                    cov,
                }
            } else {
                Component {
                    weight: count.max(1.0) / n as f64,
                    mean: init
                        .centroids
                        .as_ref()
                        .expect("k-means centroids")
                        .row(c)
                        .to_vec(),
                    cov: global.1.clone(),
                }
            }
        })
        .collect();

    let mut trace = Vec::new();
    let mut resp = Matrix::zeros(n, k);
    for iter in 0..options.max_iter {
        let ll = e_step(features, &comps, &mut resp)?;
        let improved = trace
            .last()
            .is_none_or(|&prev: &f64| ll - prev >= options.tol);
        trace.push(ll);
        if iter > 0 && !improved {
            break;
        }
        for (c, comp) in comps.iter_mut().enumerate() {
            let r = resp.column(c);
            let nk: f64 = r.iter().sum();
            if nk <= 1e-12 {
                comp.weight = 0.0;
                continue;
            }
            let (mean, cov) = weighted_covariance(features, &r, options.ridge);
            *comp = Component {
                weight: nk / n as f64,
                mean,
                cov,
            };
        }
    }
    // Memberships consistent with the final parameters.
    e_step(features, &comps, &mut resp)?;

    let labels = (0..n)
        .map(|i| {
            let row = resp.row(i);
            row.iter()
                .enumerate()
                .fold(0, |b, (c, &p)| if p > row[b] { c } else { b }) as i32
        })
        .collect();
    let mut centroids = Matrix::zeros(k, d);
    for (c, comp) in comps.iter().enumerate() {
        centroids.row_mut(c).copy_from_slice(&comp.mean);
    }
    Ok(ClusterModel {
        algorithm: Algorithm::Gmm,
        labels,
        k,
        centroids: Some(centroids),
        memberships: Some(resp),
        params: vec![
            ("ridge", options.ridge),
            ("max_iter", options.max_iter as f64),
            ("tol", options.tol),
        ],
        seed: Some(seed),
        trace,
    })
}

/// Weighted mean and (biased, weight-normalised) covariance plus ridge.
fn weighted_covariance(features: &FeatureMatrix, w: &[f64], ridge: f64) -> (Vec<f64>, Matrix) {
    let d = features.n_features();
    let total: f64 = w.iter().sum();
    let mut mean = vec![0.0; d];
    for (i, &wi) in w.iter().enumerate() {
        for (m, &x) in mean.iter_mut().zip(features.row(i)) {
            *m += wi * x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut cov = Matrix::zeros(d, d);
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let x = features.row(i);
        for a in 0..d {
            let da = x[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += wi * da * (x[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            cov[(a, b)] /= total;
            cov[(b, a)] = cov[(a, b)];
        }
        cov[(a, a)] += ridge;
    }
    (mean, cov)
}

/// Fills `resp` with posterior memberships; returns the log-likelihood.
fn e_step(features: &FeatureMatrix, comps: &[Component], resp: &mut Matrix) -> Result<f64> {
    let d = features.n_features() as f64;
    let log_norm = d * (2.0 * std::f64::consts::PI).ln();
    let factors: Vec<(Matrix, f64)> = comps
        .iter()
        .map(|c| {
            let l = cholesky(&c.cov)?;
            let log_det = 2.0 * (0..l.rows()).map(|i| l[(i, i)].ln()).sum::<f64>();
            Ok((l, log_det))
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut logp = vec![0.0; comps.len()];
    for i in 0..features.n_rows() {
        let x = features.row(i);
        for (c, (comp, (l, log_det))) in comps.iter().zip(&factors).enumerate() {
            let diff: Vec<f64> = x.iter().zip(&comp.mean).map(|(a, b)| a - b).collect();
            let z = forward_substitute(l, &diff);
            let maha: f64 = z.iter().map(|v| v * v).sum();
            logp[c] = comp.weight.ln() - 0.5 * (log_norm + log_det + maha);
        }
        let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logp.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        total += lse;
        let row = resp.row_mut(i);
        for (r, &lp) in row.iter_mut().zip(&logp) {
            *r = (lp - lse).exp();
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|r| *r /= s);
    }
    if !total.is_finite() {
        return Err(Error::Numeric("GMM log-likelihood is not finite".into()));
    }
    Ok(total)
}
