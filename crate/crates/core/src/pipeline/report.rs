//! Plain-text run summary.

use std::fmt::Write;

use crate::cluster::{ValidityReport, ValidityRow};
use crate::forecast::MeanMetrics;

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seeds: Vec<(String, u64)>,
    /// Input label and its description or SHA-256.
    pub inputs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSummary {
    pub n_buildings: usize,
    pub n_hours: usize,
    pub gap_hours: usize,
    pub uniform_split_hours: usize,
    /// Largest relative mismatch between reconciled totals and the feeder.
    pub max_balance_error: f64,
    pub feature_space: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringSummary {
    pub algorithm: String,
    pub k: usize,
    /// Cluster id and member count, noise last.
    pub sizes: Vec<(i32, usize)>,
    /// Every algorithm at the configured k.
    pub validity: Vec<ValidityRow>,
    /// Algorithm, clusters found and why the indices are undefined.
    pub undefined: Vec<(String, usize, String)>,
    /// Configured algorithm over the k range.
    pub selection: ValidityReport,
    /// Best-permutation accuracy against planted groups, when known.
    pub planted_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub model: String,
    pub family: String,
    pub folds: usize,
    pub per_cluster: Vec<(i32, MeanMetrics)>,
    pub failures: Vec<(i32, String)>,
    /// Uniform mean over the clusters that were scored.
    pub mean: Option<MeanMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SheddingSummary {
    pub model: String,
    pub hours: usize,
    pub deficit_hours: usize,
    pub infeasible_hours: usize,
    pub total_demand: f64,
    pub total_supply: f64,
    pub total_shed: f64,
    pub objective: f64,
    /// Cluster id, weight and total curtailment.
    pub per_cluster: Vec<(i32, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimCheck {
    pub claim: String,
    /// `None` when the run could not evaluate the claim.
    pub holds: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub provenance: Provenance,
    pub data: DataSummary,
    pub clustering: ClusteringSummary,
    pub forecasting: Vec<ModelSummary>,
    pub shedding: SheddingSummary,
    pub claims: Vec<ClaimCheck>,
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), num)
}

fn label(id: i32) -> String {
    if id < 0 {
        "noise".into()
    } else {
        id.to_string()
    }
}

impl RunReport {
    /// Family with the lowest mean RMSE among scored models.
    pub fn best_family(&self) -> Option<&str> {
        self.forecasting
            .iter()
            .filter_map(|m| m.mean.map(|mm| (m.family.as_str(), mm.rmse)))
            .fold(None, |best: Option<(&str, f64)>, (f, r)| match best {
                Some((_, b)) if b <= r => best,
                _ => Some((f, r)),
            })
            .map(|(f, _)| f)
    }

    pub fn model(&self, family: &str) -> Option<&ModelSummary> {
        self.forecasting.iter().find(|m| m.family == family)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s)
            .expect("writing to a String cannot fail");
        s
    }

    fn render_into(&self, s: &mut String) -> std::fmt::Result {
        let p = &self.provenance;
        writeln!(s, "gridshed run report")?;
        writeln!(s)?;
        writeln!(s, "[provenance]")?;
        writeln!(s, "version      {}", p.version)?;
        writeln!(s, "config hash  {}", p.config_hash)?;
        for (name, seed) in &p.seeds {
            writeln!(s, "seed {name:<8}{seed}")?;
        }
        for (name, what) in &p.inputs {
            writeln!(s, "input {name:<10}{what}")?;
        }
        writeln!(s)?;

        let d = &self.data;
        writeln!(s, "[data]")?;
        writeln!(
            s,
            "buildings {}, hours {}, feeder gaps {}, uniform splits {}",
            d.n_buildings, d.n_hours, d.gap_hours, d.uniform_split_hours
        )?;
        writeln!(s, "max feeder balance error {:.3e}", d.max_balance_error)?;
        writeln!(s, "feature space {}", d.feature_space)?;
        writeln!(s)?;

        let c = &self.clustering;
        writeln!(s, "[clustering evaluation, k = {}]", c.k)?;
        writeln!(
            s,
            "{:<14}{:>6}{:>12}{:>16}{:>20}{:>14}",
            "algorithm", "found", "silhouette", "davies_bouldin", "calinski_harabasz", "wcss"
        )?;
        for r in &c.validity {
            writeln!(
                s,
                "{:<14}{:>6}{:>12}{:>16}{:>20}{:>14}",
                r.algorithm.as_str(),
                r.found,
                num(r.scores.silhouette),
                num(r.scores.davies_bouldin),
                num(r.scores.calinski_harabasz),
                num(r.scores.wcss)
            )?;
        }
        for (a, found, why) in &c.undefined {
            writeln!(s, "{a:<14}{found:>6}  undefined: {why}")?;
        }
        writeln!(s)?;
        writeln!(s, "[k selection, {}]", c.algorithm)?;
        writeln!(
            s,
            "{:<4}{:>12}{:>16}{:>20}{:>14}",
            "k", "silhouette", "davies_bouldin", "calinski_harabasz", "wcss"
        )?;
        for r in &c.selection.rows {
            writeln!(
                s,
                "{:<4}{:>12}{:>16}{:>20}{:>14}",
                r.k,
                num(r.scores.silhouette),
                num(r.scores.davies_bouldin),
                num(r.scores.calinski_harabasz),
                num(r.scores.wcss)
            )?;
        }
        writeln!(
            s,
            "best k: silhouette {}, davies_bouldin {}, calinski_harabasz {}",
            c.selection.best_silhouette_k,
            c.selection.best_davies_bouldin_k,
            c.selection.best_calinski_harabasz_k
        )?;
        let sizes: Vec<String> = c
            .sizes
            .iter()
            .map(|(id, n)| format!("{}:{n}", label(*id)))
            .collect();
        writeln!(
            s,
            "assignment {} k={} sizes {}",
            c.algorithm,
            c.k,
            sizes.join(" ")
        )?;
        if let Some(a) = c.planted_accuracy {
            writeln!(s, "planted-group agreement {:.1}%", 100.0 * a)?;
        }
        writeln!(s)?;

        writeln!(s, "[forecasting summary]")?;
        writeln!(
            s,
            "{:<66}{:>6}{:>12}{:>10}{:>10}{:>10}",
            "model", "folds", "rmse", "mape%", "r2", "crps"
        )?;
        for m in &self.forecasting {
            match &m.mean {
                Some(mm) => writeln!(
                    s,
                    "{:<66}{:>6}{:>12}{:>10}{:>10}{:>10}",
                    m.model,
                    m.folds,
                    num(mm.rmse),
                    opt(mm.mape),
                    num(mm.r_squared),
                    opt(mm.crps)
                )?,
                None => writeln!(s, "{:<66}{:>6}{:>12}", m.model, m.folds, "failed")?,
            }
            for (id, e) in &m.failures {
                writeln!(s, "  cluster {} failed: {e}", label(*id))?;
            }
        }
        writeln!(s)?;

        let sh = &self.shedding;
        writeln!(
            s,
            "[shedding, {} forecast over {} hours]",
            sh.model, sh.hours
        )?;
        writeln!(
            s,
            "demand {} kWh, supply {} kWh, shed {} kWh, objective {}",
            num(sh.total_demand),
            num(sh.total_supply),
            num(sh.total_shed),
            num(sh.objective)
        )?;
        writeln!(
            s,
            "deficit hours {}, infeasible hours {}",
            sh.deficit_hours, sh.infeasible_hours
        )?;
        for (id, w, shed) in &sh.per_cluster {
            writeln!(
                s,
                "cluster {:<6} weight {:<8} shed {} kWh",
                label(*id),
                num(*w),
                num(*shed)
            )?;
        }

        if !self.claims.is_empty() {
            writeln!(s)?;
            writeln!(s, "[claim checks]")?;
            for c in &self.claims {
                let verdict = match c.holds {
                    Some(true) => "HOLDS",
                    Some(false) => "DOES NOT HOLD",
                    None => "NOT EVALUATED",
                };
                writeln!(s, "{verdict}: {} ({})", c.claim, c.detail)?;
            }
        }
        Ok(())
    }
}
