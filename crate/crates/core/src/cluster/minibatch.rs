//! Mini-batch k-means: centroids move toward sampled points with a
//! per-centroid step of 1 / (points assigned so far).

use rand::seq::SliceRandom;

use super::kmeans::{assign_nearest, kmeans_plus_plus, nearest};
use super::{check_k, Algorithm, ClusterModel};
use crate::reduce::FeatureMatrix;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct MiniBatchOptions {
    pub batch_size: usize,
    /// Passes over the data.
    pub epochs: usize,
    /// Independent seedings; the lowest full-data WCSS wins.
    pub n_init: usize,
}

impl Default for MiniBatchOptions {
    fn default() -> Self {
        Self {
            batch_size: 16,
            epochs: 100,
            n_init: 3,
        }
    }
}

pub fn fit_minibatch_kmeans(
    features: &FeatureMatrix,
    k: usize,
    batch_size: usize,
    seed: u64,
) -> Result<ClusterModel> {
    fit_minibatch_kmeans_with(
        features,
        k,
        seed,
        &MiniBatchOptions {
            batch_size,
            ..Default::default()
        },
    )
}

pub fn fit_minibatch_kmeans_with(
    features: &FeatureMatrix,
    k: usize,
    seed: u64,
    options: &MiniBatchOptions,
) -> Result<ClusterModel> {
    check_k(features, k)?;
    if options.batch_size == 0 {
        return Err(Error::arg("batch size must be >= 1"));
    }
    let n = features.n_rows();
    let mut rng = rng::seeded(seed);
    let mut best = None;
    for _ in 0..options.n_init.max(1) {
        let mut centroids = kmeans_plus_plus(features, k, &mut rng);
        let mut counts = vec![0usize; k];
        let mut order: Vec<usize> = (0..n).collect();
        let mut trace = Vec::with_capacity(options.epochs);
        for _ in 0..options.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(options.batch_size) {
                let assigned: Vec<usize> = batch
                    .iter()
                    .map(|&i| nearest(features.row(i), &centroids).0)
                    .collect();
                for (&i, &c) in batch.iter().zip(&assigned) {
                    counts[c] += 1;
                    let eta = 1.0 / counts[c] as f64;
                    for (m, &x) in centroids.row_mut(c).iter_mut().zip(features.row(i)) {
                        *m += eta * (x - *m);
                    }
                }
            }
            trace.push(assign_nearest(features, &centroids).1);
        }
        let (labels, wcss) = assign_nearest(features, &centroids);
        if best
            .as_ref()
            .is_none_or(|(b, ..): &(f64, _, _, _)| wcss < *b)
        {
            best = Some((wcss, labels, centroids, trace));
        }
    }
    let (_, labels, centroids, trace) = best.expect("n_init >= 1");
    Ok(ClusterModel {
        algorithm: Algorithm::MiniBatch,
        labels,
        k,
        centroids: Some(centroids),
        memberships: None,
        params: vec![
            ("batch_size", options.batch_size as f64),
            ("epochs", options.epochs as f64),
            ("n_init", options.n_init as f64),
        ],
        seed: Some(seed),
        trace,
    })
}
