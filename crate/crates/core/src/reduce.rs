//! Per-building feature vectors and principal component analysis.

use crate::disagg::BuildingEstimates;
use crate::linalg::{symmetric_eigen, Matrix};
use crate::{Error, Result};

pub const DEFAULT_VARIANCE_TARGET: f64 = 0.95;

/// Buildings x features table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub building_ids: Vec<String>,
    pub features: Matrix,
    pub feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        building_ids: Vec<String>,
        features: Matrix,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.rows() != building_ids.len() {
            return Err(Error::arg(format!(
                "{} feature rows for {} buildings",
                features.rows(),
                building_ids.len()
            )));
        }
        if features.cols() != feature_names.len() {
            return Err(Error::arg(format!(
                "{} feature columns but {} names",
                features.cols(),
                feature_names.len()
            )));
        }
        if !features.is_finite() {
            return Err(Error::invalid("feature matrix contains non-finite entries"));
        }
        Ok(Self {
            building_ids,
            features,
            feature_names,
        })
    }

    /// Anonymous rows, for tests and ad-hoc use. Names are `x0..`, ids `r0..`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let features = Matrix::from_rows(rows)?;
        let ids = (0..features.rows()).map(|i| format!("r{i}")).collect();
        let names = (0..features.cols()).map(|j| format!("x{j}")).collect();
        Self::new(ids, features, names)
    }

    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }
}

pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = (0..24).map(|h| format!("h{h:02}")).collect();
    names.extend(["mean", "std", "peak", "peak_hour", "load_factor"].map(String::from));
    names
}

/// 24 hour-of-day means, then mean, population std, peak, peak hour and
/// load factor (mean / peak, 0 when the peak is 0). Gap hours are skipped.
/// An hour of day with no observations takes the building's overall mean.
pub fn extract_features(estimates: &BuildingEstimates) -> Result<FeatureMatrix> {
    if estimates.n_hours() < 48 {
        return Err(Error::arg(format!(
            "feature extraction needs at least 48 hours, got {}",
            estimates.n_hours()
        )));
    }
    let axis = estimates.axis();
    let mut rows = Vec::with_capacity(estimates.n_buildings());
    for (b, id) in estimates.building_ids().iter().enumerate() {
        let mut sums = [0.0; 24];
        let mut counts = [0usize; 24];
        let mut observed = Vec::with_capacity(estimates.n_hours());
        let mut peak = f64::NEG_INFINITY;
        let mut peak_hour = 0usize;
        for t in 0..estimates.n_hours() {
            if let Some(v) = estimates.get(t, b) {
                let h = axis.hour_of_day(t);
                sums[h] += v;
                counts[h] += 1;
                observed.push(v);
                if v > peak {
                    peak = v;
                    peak_hour = h;
                }
            }
        }
        if observed.is_empty() {
            return Err(Error::invalid(format!(
                "building {id} has no observed hours"
            )));
        }
        let n = observed.len() as f64;
        let mean = observed.iter().sum::<f64>() / n;
        let std = (observed
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n)
            .sqrt();
        let mut row: Vec<f64> = (0..24)
            .map(|h| {
                if counts[h] > 0 {
                    sums[h] / counts[h] as f64
                } else {
                    mean
                }
            })
            .collect();
        let load_factor = if peak > 0.0 { mean / peak } else { 0.0 };
        row.extend([mean, std, peak, peak_hour as f64, load_factor]);
        rows.push(row);
    }
    FeatureMatrix::new(
        estimates.building_ids().to_vec(),
        Matrix::from_rows(&rows)?,
        feature_names(),
    )
}

#[derive(Debug, Clone)]
pub struct Normalized {
    pub matrix: FeatureMatrix,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns with zero spread, mapped to all zeros.
    pub constant_columns: Vec<usize>,
}

/// Column-wise z-score with the population standard deviation.
pub fn zscore_normalize(features: &FeatureMatrix) -> Result<Normalized> {
    let n = features.n_rows();
    if n < 2 {
        return Err(Error::arg("z-scoring needs at least two rows"));
    }
    let d = features.n_features();
    let mut out = features.features.clone();
    let mut means = vec![0.0; d];
    let mut stds = vec![0.0; d];
    let mut constant_columns = Vec::new();
    for j in 0..d {
        let col = features.features.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let std = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        means[j] = mean;
        stds[j] = std;
        if std <= 1e-12 * mean.abs().max(1.0) {
            constant_columns.push(j);
            for i in 0..n {
                out[(i, j)] = 0.0;
            }
        } else {
            for i in 0..n {
                out[(i, j)] = (col[i] - mean) / std;
            }
        }
    }
    Ok(Normalized {
        matrix: FeatureMatrix::new(
            features.building_ids.clone(),
            out,
            features.feature_names.clone(),
        )?,
        means,
        stds,
        constant_columns,
    })
}

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// k x d, orthonormal rows.
    pub components: Matrix,
    /// Leading k eigenvalues of the sample covariance.
    pub explained_variance: Vec<f64>,
    /// All d eigenvalues, descending, clamped at 0.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn explained_fraction(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        self.explained_variance.iter().sum::<f64>() / total
    }

    /// Map k-dimensional scores back to feature space.
    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (c, &s) in scores.iter().enumerate() {
            for (xj, &v) in x.iter_mut().zip(self.components.row(c)) {
                *xj += s * v;
            }
        }
        x
    }
}

/// Eigenvectors of the sample covariance, keeping the fewest components
/// whose cumulative variance fraction reaches `variance_target`.
pub fn pca_fit(features: &FeatureMatrix, variance_target: f64) -> Result<PcaModel> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::arg(format!(
            "variance target {variance_target} outside (0, 1]"
        )));
    }
    let n = features.n_rows();
    if n < 2 {
        return Err(Error::arg("PCA needs at least two rows"));
    }
    if !features.features.is_finite() {
        return Err(Error::invalid("non-finite PCA input"));
    }
    let d = features.n_features();
    let mean: Vec<f64> = (0..d)
        .map(|j| features.features.column(j).iter().sum::<f64>() / n as f64)
        .collect();
    let mut cov = Matrix::zeros(d, d);
    for i in 0..n {
        let row = features.row(i);
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            cov[(a, b)] /= (n - 1) as f64;
            cov[(b, a)] = cov[(a, b)];
        }
    }
    let eig = symmetric_eigen(&cov)?;
    let eigenvalues: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("features have zero total variance"));
    }
    let mut k = d;
    let mut cumulative = 0.0;
    for (i, v) in eigenvalues.iter().enumerate() {
        cumulative += v;
        if cumulative / total >= variance_target - 1e-12 {
            k = i + 1;
            break;
        }
    }
    let mut components = Matrix::zeros(k, d);
    for c in 0..k {
        let mut v = eig.vector(c);
        let pivot = v.iter().enumerate().fold(
            0,
            |best, (i, x)| if x.abs() > v[best].abs() { i } else { best },
        );
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.row_mut(c).copy_from_slice(&v);
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance: eigenvalues[..k].to_vec(),
        eigenvalues,
    })
}

/// Centered projection onto the model's components.
pub fn pca_transform(model: &PcaModel, features: &FeatureMatrix) -> Result<FeatureMatrix> {
    if features.n_features() != model.mean.len() {
        return Err(Error::arg(format!(
            "feature dimension {} does not match PCA model dimension {}",
            features.n_features(),
            model.mean.len()
        )));
    }
    let k = model.n_components();
    let mut scores = Matrix::zeros(features.n_rows(), k);
    for i in 0..features.n_rows() {
        let centered: Vec<f64> = features
            .row(i)
            .iter()
            .zip(&model.mean)
            .map(|(x, m)| x - m)
            .collect();
        for c in 0..k {
            scores[(i, c)] = crate::linalg::dot(model.components.row(c), &centered);
        }
    }
    FeatureMatrix::new(
        features.building_ids.clone(),
        scores,
        (1..=k).map(|c| format!("pc{c}")).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_timestamp;

    fn estimates(columns: &[Vec<f64>]) -> BuildingEstimates {
        let hours = columns[0].len();
        let mut data = Vec::new();
        for t in 0..hours {
            data.extend(columns.iter().map(|c| Some(c[t])));
        }
        let ids = (0..columns.len()).map(|i| format!("B{i}")).collect();
        BuildingEstimates::new(
            parse_timestamp("2024-01-01T00:00:00").unwrap(),
            ids,
            hours,
            data,
        )
        .unwrap()
    }

    #[test]
    fn constant_building_features() {
        let f = extract_features(&estimates(&[vec![5.0; 48]])).unwrap();
        let row = f.row(0);
        assert!(row[..24].iter().all(|&v| v == 5.0));
        assert_eq!(row[24], 5.0);
        assert_eq!(row[25], 0.0);
        assert_eq!(row[26], 5.0);
        assert_eq!(row[28], 1.0);
    }

    #[test]
    fn single_hour_building() {
        let series: Vec<f64> = (0..48)
            .map(|t| if t % 24 == 8 { 10.0 } else { 0.0 })
            .collect();
        let f = extract_features(&estimates(&[series])).unwrap();
        let row = f.row(0);
        let mean = 20.0 / 48.0;
        assert_eq!(row[26], 10.0);
        assert_eq!(row[27], 8.0);
        assert!((row[24] - mean).abs() < 1e-15);
        assert!((row[28] - mean / 10.0).abs() < 1e-15);
        assert_eq!(row[8], 10.0);
    }

    #[test]
    fn identical_buildings_identical_rows() {
        let s: Vec<f64> = (0..72).map(|t| (t % 7) as f64).collect();
        let f = extract_features(&estimates(&[s.clone(), s])).unwrap();
        assert_eq!(f.row(0), f.row(1));
    }

    #[test]
    fn all_gap_building_is_error() {
        let t0 = parse_timestamp("2024-01-01T00:00:00").unwrap();
        let mut data = Vec::new();
        for _ in 0..48 {
            data.push(Some(1.0));
            data.push(None);
        }
        let est = BuildingEstimates::new(t0, vec!["ok".into(), "dead".into()], 48, data).unwrap();
        match extract_features(&est) {
            Err(Error::Validation(m)) => assert!(m.contains("dead")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zscore_two_values() {
        let f = FeatureMatrix::from_rows(&[vec![1.0, 7.0], vec![3.0, 7.0]]).unwrap();
        let z = zscore_normalize(&f).unwrap();
        assert_eq!(z.matrix.features.column(0), vec![-1.0, 1.0]);
        assert_eq!(z.matrix.features.column(1), vec![0.0, 0.0]);
        assert_eq!(z.constant_columns, vec![1]);
    }

    #[test]
    fn zscore_idempotent() {
        let f = FeatureMatrix::from_rows(&[vec![1.0], vec![4.0], vec![2.5], vec![9.0]]).unwrap();
        let z1 = zscore_normalize(&f).unwrap().matrix;
        let z2 = zscore_normalize(&z1).unwrap().matrix;
        for (a, b) in z1.features.as_slice().iter().zip(z2.features.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zscore_single_row_rejected() {
        let f = FeatureMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(zscore_normalize(&f), Err(Error::Argument(_))));
    }

    #[test]
    fn rank_one_data() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64, 2.0 * i as f64 + 1.0])
            .collect();
        let f = FeatureMatrix::from_rows(&rows).unwrap();
        let m = pca_fit(&f, 0.95).unwrap();
        assert_eq!(m.n_components(), 1);
        assert!((m.explained_fraction() - 1.0).abs() < 1e-12);
        let scores = pca_transform(&m, &f).unwrap();
        for i in 0..10 {
            let back = m.reconstruct(scores.row(i));
            for (a, b) in back.iter().zip(&rows[i]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mean_row_maps_to_origin() {
        let f =
            FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![3.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let m = pca_fit(&f, 1.0).unwrap();
        let mean_row = FeatureMatrix::from_rows(std::slice::from_ref(&m.mean)).unwrap();
        let s = pca_transform(&m, &mean_row).unwrap();
        assert!(s.row(0).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn one_dimensional_identity_up_to_centering() {
        let f = FeatureMatrix::from_rows(&[vec![-1.0], vec![0.5], vec![0.5]]).unwrap();
        let m = pca_fit(&f, 1.0).unwrap();
        assert_eq!(m.components.row(0), &[1.0]);
        let s = pca_transform(&m, &f).unwrap();
        assert_eq!(s.features.column(0), vec![-1.0, 0.5, 0.5]);
    }

    #[test]
    fn dimension_mismatch() {
        let f = FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![3.0, 2.0]]).unwrap();
        let m = pca_fit(&f, 1.0).unwrap();
        let g = FeatureMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(pca_transform(&m, &g), Err(Error::Argument(_))));
    }

    #[test]
    fn bad_variance_target() {
        let f = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(pca_fit(&f, 0.0).is_err());
        assert!(pca_fit(&f, 1.5).is_err());
    }
}
