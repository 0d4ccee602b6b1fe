use crate::cluster::{ClusterModel, NOISE};
use crate::data::HourlySeries;
use crate::disagg::BuildingEstimates;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSeries {
    /// Cluster label; `-1` collects noise buildings.
    pub cluster_id: i32,
    pub series: HourlySeries,
}

/// Per-hour sums of member-building loads, one series per non-empty
/// cluster in id order with the noise group last. An hour is a gap only
/// when every member is a gap there.
pub fn build_cluster_series(
    estimates: &BuildingEstimates,
    model: &ClusterModel,
) -> Result<Vec<ClusterSeries>> {
    cluster_series_from_labels(estimates, &model.labels, model.k)
}

/// As [`build_cluster_series`] for bare labels in `0..k` or `-1`.
pub fn cluster_series_from_labels(
    estimates: &BuildingEstimates,
    labels: &[i32],
    k: usize,
) -> Result<Vec<ClusterSeries>> {
    if labels.len() != estimates.n_buildings() {
        return Err(Error::arg(format!(
            "{} labels for {} buildings",
            labels.len(),
            estimates.n_buildings()
        )));
    }
    if let Some(bad) = labels
        .iter()
        .find(|&&l| l != NOISE && (l < 0 || l as usize >= k))
    {
        return Err(Error::arg(format!("label {bad} outside 0..{k}")));
    }
    let mut ids: Vec<i32> = (0..k as i32).collect();
    ids.push(NOISE);
    let mut out = Vec::new();
    for id in ids {
        let members: Vec<usize> = (0..labels.len()).filter(|&b| labels[b] == id).collect();
        if members.is_empty() {
            if id != NOISE {
                log::warn!("cluster {id} has no members; no series built");
            }
            continue;
        }
        let values = (0..estimates.n_hours())
            .map(|t| {
                let observed: Vec<f64> = members
                    .iter()
                    .filter_map(|&b| estimates.get(t, b))
                    .collect();
                (!observed.is_empty()).then(|| observed.iter().sum())
            })
            .collect();
        out.push(ClusterSeries {
            cluster_id: id,
            series: HourlySeries::new(estimates.start(), values)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::Algorithm;
    use crate::data::parse_timestamp;

    fn model(labels: Vec<i32>, k: usize) -> ClusterModel {
        ClusterModel {
            algorithm: Algorithm::KMeans,
            labels,
            k,
            centroids: None,
            memberships: None,
            params: vec![],
            seed: None,
            trace: vec![],
        }
    }

    fn estimates() -> BuildingEstimates {
        let start = parse_timestamp("2024-01-01T00:00:00").unwrap();
        let ids = vec!["a".into(), "b".into(), "c".into()];
        let data = vec![
            Some(1.0),
            Some(2.0),
            Some(4.0),
            Some(3.0),
            None,
            Some(5.0),
            None,
            None,
            Some(6.0),
        ];
        BuildingEstimates::new(start, ids, 3, data).unwrap()
    }

    #[test]
    fn two_clusters_sum_members() {
        let s = build_cluster_series(&estimates(), &model(vec![0, 0, 1], 2)).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].series.values(), &[Some(3.0), Some(3.0), None]);
        assert_eq!(s[1].series.values(), &[Some(4.0), Some(5.0), Some(6.0)]);
    }

    #[test]
    fn singleton_equals_building() {
        let s = build_cluster_series(&estimates(), &model(vec![1, 1, 0], 2)).unwrap();
        assert_eq!(s[0].series, estimates().building_series(2).unwrap());
    }

    #[test]
    fn noise_group_last_and_empty_skipped() {
        let s = build_cluster_series(&estimates(), &model(vec![0, -1, 0], 3)).unwrap();
        let ids: Vec<i32> = s.iter().map(|c| c.cluster_id).collect();
        assert_eq!(ids, vec![0, -1]);
    }

    #[test]
    fn label_count_mismatch() {
        assert!(build_cluster_series(&estimates(), &model(vec![0, 0], 1)).is_err());
    }
}
