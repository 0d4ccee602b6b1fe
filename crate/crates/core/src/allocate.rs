//! Curtailment allocation under a supply deficit.
//!
//! Minimising `sum(w_c * L_c)` subject to `sum(L_c) >= deficit` and
//! `0 <= L_c <= D_c` is a continuous knapsack: filling clusters in
//! ascending weight order is optimal. [`lp_oracle`] enumerates the LP's
//! candidate vertices for cross-checking on small instances.

use crate::{Error, Result};

pub const ORACLE_MAX_CLUSTERS: usize = 12;

/// Default priority weights by demand rank: highest-demand cluster 3.0,
/// middle 2.0, lowest 1.0 (lower weight is shed first).
pub const DEFAULT_RANK_WEIGHTS: [f64; 3] = [3.0, 2.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SheddingProblem {
    pub deficit: f64,
    pub demands: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SheddingProblem {
    pub fn new(deficit: f64, demands: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if demands.len() != weights.len() {
            return Err(Error::arg(format!(
                "{} demands but {} weights",
                demands.len(),
                weights.len()
            )));
        }
        if !(deficit >= 0.0) || !deficit.is_finite() {
            return Err(Error::invalid(format!(
                "deficit must be finite and >= 0, got {deficit}"
            )));
        }
        if let Some(d) = demands.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return Err(Error::invalid(format!(
                "demand {d} must be finite and >= 0"
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid(format!("weight {w} must be finite and > 0")));
        }
        Ok(Self {
            deficit,
            demands,
            weights,
        })
    }

    pub fn total_demand(&self) -> f64 {
        self.demands.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SheddingPlan {
    pub curtailment: Vec<f64>,
    pub total_shed: f64,
    pub objective: f64,
    pub feasible: bool,
    /// Deficit left uncovered when demand cannot cover it.
    pub infeasibility_gap: f64,
}

impl SheddingPlan {
    fn from_curtailment(problem: &SheddingProblem, curtailment: Vec<f64>, feasible: bool) -> Self {
        let total_shed = curtailment.iter().sum();
        let objective = curtailment
            .iter()
            .zip(&problem.weights)
            .map(|(l, w)| l * w)
            .sum();
        let infeasibility_gap = if feasible {
            0.0
        } else {
            problem.deficit - problem.total_demand()
        };
        Self {
            curtailment,
            total_shed,
            objective,
            feasible,
            infeasibility_gap,
        }
    }
}

/// `max(0, forecast - supply)`.
pub fn compute_deficit(forecast_total: f64, supply: f64) -> Result<f64> {
    if !forecast_total.is_finite() || !supply.is_finite() {
        return Err(Error::arg("forecast and supply must be finite"));
    }
    if supply < 0.0 {
        return Err(Error::arg(format!("supply must be >= 0, got {supply}")));
    }
    Ok((forecast_total - supply).max(0.0))
}

/// Greedy continuous-knapsack optimum. Clusters are filled by ascending
/// weight; equal weights go to the larger demand first, then lower index.
pub fn solve_shedding(problem: &SheddingProblem) -> SheddingPlan {
    let n = problem.demands.len();
    if problem.deficit > problem.total_demand() {
        return SheddingPlan::from_curtailment(problem, problem.demands.clone(), false);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        problem.weights[a]
            .total_cmp(&problem.weights[b])
            .then(problem.demands[b].total_cmp(&problem.demands[a]))
            .then(a.cmp(&b))
    });
    let mut curtailment = vec![0.0; n];
    let mut covered = 0.0;
    for &c in &order {
        let remaining = problem.deficit - covered;
        if remaining <= 0.0 {
            break;
        }
        if problem.demands[c] >= remaining {
            curtailment[c] = remaining;
            break;
        }
        curtailment[c] = problem.demands[c];
        covered += problem.demands[c];
    }
    SheddingPlan::from_curtailment(problem, curtailment, true)
}

/// Enumerates every vector with all coordinates at a bound except at most
/// one, which absorbs the deficit exactly; returns the cheapest feasible one.
pub fn lp_oracle(problem: &SheddingProblem) -> Result<SheddingPlan> {
    let n = problem.demands.len();
    if n > ORACLE_MAX_CLUSTERS {
        return Err(Error::arg(format!(
            "oracle enumerates at most {ORACLE_MAX_CLUSTERS} clusters, got {n}"
        )));
    }
    if problem.deficit > problem.total_demand() {
        return Ok(SheddingPlan::from_curtailment(
            problem,
            problem.demands.clone(),
            false,
        ));
    }
    let objective = |l: &[f64]| -> f64 { l.iter().zip(&problem.weights).map(|(a, w)| a * w).sum() };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |l: Vec<f64>| {
        let obj = objective(&l);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, l));
        }
    };
    for mask in 0u32..(1 << n) {
        let at_upper = |c: usize| mask & (1 << c) != 0;
        let full: Vec<f64> = (0..n)
            .map(|c| if at_upper(c) { problem.demands[c] } else { 0.0 })
            .collect();
        let sum: f64 = full.iter().sum();
        if sum >= problem.deficit {
            consider(full.clone());
        }
        for f in 0..n {
            if at_upper(f) {
                continue;
            }
            let rest = sum;
            let needed = problem.deficit - rest;
            if needed > 0.0 && needed <= problem.demands[f] {
                let mut l = full.clone();
                l[f] = needed;
                consider(l);
            }
        }
    }
    let (_, l) = best.expect("total demand covers the deficit");
    Ok(SheddingPlan::from_curtailment(problem, l, true))
}

/// Per-hour supply and forecast demand by cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct DeficitSchedule {
    pub supply: Vec<f64>,
    /// Hours x clusters.
    pub demands: Vec<Vec<f64>>,
}

impl DeficitSchedule {
    pub fn new(supply: Vec<f64>, demands: Vec<Vec<f64>>) -> Result<Self> {
        if supply.len() != demands.len() {
            return Err(Error::arg(format!(
                "{} supply hours but {} demand hours",
                supply.len(),
                demands.len()
            )));
        }
        if let Some(w) = demands.first().map(Vec::len) {
            if demands.iter().any(|r| r.len() != w) {
                return Err(Error::arg("demand rows have differing cluster counts"));
            }
        }
        Ok(Self { supply, demands })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    pub plans: Vec<SheddingPlan>,
    /// Total curtailment per cluster over all hours.
    pub totals: Vec<f64>,
}

pub fn schedule_shedding(schedule: &DeficitSchedule, weights: &[f64]) -> Result<ScheduleResult> {
    let mut totals = vec![0.0; weights.len()];
    let mut plans = Vec::with_capacity(schedule.supply.len());
    for (supply, demands) in schedule.supply.iter().zip(&schedule.demands) {
        if demands.len() != weights.len() {
            return Err(Error::arg(format!(
                "{} clusters in schedule but {} weights",
                demands.len(),
                weights.len()
            )));
        }
        let deficit = compute_deficit(demands.iter().sum(), *supply)?;
        let plan = solve_shedding(&SheddingProblem::new(
            deficit,
            demands.clone(),
            weights.to_vec(),
        )?);
        for (t, l) in totals.iter_mut().zip(&plan.curtailment) {
            *t += l;
        }
        plans.push(plan);
    }
    Ok(ScheduleResult { plans, totals })
}

/// Rank-based default weights: clusters ordered by mean demand, highest
/// first, take 3.0, 2.0, 1.0; ranks past the third stay at 1.0.
pub fn default_weights(mean_demands: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..mean_demands.len()).collect();
    order.sort_by(|&a, &b| mean_demands[b].total_cmp(&mean_demands[a]).then(a.cmp(&b)));
    let mut weights = vec![1.0; mean_demands.len()];
    for (rank, &c) in order.iter().enumerate() {
        weights[c] = DEFAULT_RANK_WEIGHTS.get(rank).copied().unwrap_or(1.0);
    }
    weights
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deficit_examples() {
        assert_eq!(compute_deficit(100.0, 120.0).unwrap(), 0.0);
        assert_eq!(compute_deficit(100.0, 70.0).unwrap(), 30.0);
        assert_eq!(compute_deficit(0.0, 0.0).unwrap(), 0.0);
        assert!(compute_deficit(10.0, -1.0).is_err());
    }

    #[test]
    fn zero_deficit() {
        let p = SheddingProblem::new(0.0, vec![10.0, 5.0], vec![1.0, 2.0]).unwrap();
        let plan = solve_shedding(&p);
        assert_eq!(plan.curtailment, vec![0.0, 0.0]);
        assert_eq!(plan.objective, 0.0);
        assert!(plan.feasible);
    }

    #[test]
    fn cheapest_cluster_first() {
        let p = SheddingProblem::new(50.0, vec![40.0; 3], vec![3.0, 1.0, 2.0]).unwrap();
        let plan = solve_shedding(&p);
        assert_eq!(plan.curtailment, vec![0.0, 40.0, 10.0]);
        assert_eq!(plan.objective, 60.0);
        assert_eq!(plan.total_shed, 50.0);
        assert_eq!(lp_oracle(&p).unwrap().objective, 60.0);
    }

    #[test]
    fn total_blackout() {
        let p = SheddingProblem::new(200.0, vec![40.0; 3], vec![1.0, 2.0, 3.0]).unwrap();
        let plan = solve_shedding(&p);
        assert!(!plan.feasible);
        assert_eq!(plan.curtailment, vec![40.0; 3]);
        assert_eq!(plan.infeasibility_gap, 80.0);
    }

    #[test]
    fn deficit_equals_total_demand() {
        let p = SheddingProblem::new(30.0, vec![10.0, 20.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(lp_oracle(&p).unwrap().curtailment, vec![10.0, 20.0]);
        assert_eq!(solve_shedding(&p).curtailment, vec![10.0, 20.0]);
    }

    #[test]
    fn equal_weights_objective() {
        let p = SheddingProblem::new(25.0, vec![10.0, 20.0, 30.0], vec![2.0; 3]).unwrap();
        assert_eq!(lp_oracle(&p).unwrap().objective, 50.0);
        // Tie rule: larger demand first.
        assert_eq!(solve_shedding(&p).curtailment, vec![0.0, 0.0, 25.0]);
    }

    #[test]
    fn oracle_bound() {
        let p = SheddingProblem::new(1.0, vec![1.0; 13], vec![1.0; 13]).unwrap();
        assert!(lp_oracle(&p).is_err());
    }

    #[test]
    fn invalid_weights() {
        assert!(SheddingProblem::new(1.0, vec![1.0], vec![0.0]).is_err());
        assert!(SheddingProblem::new(1.0, vec![-1.0], vec![1.0]).is_err());
    }

    #[test]
    fn schedule_examples() {
        let s = DeficitSchedule::new(vec![100.0, 100.0, 10.0], vec![vec![20.0, 30.0]; 3]).unwrap();
        let r = schedule_shedding(&s, &[1.0, 2.0]).unwrap();
        assert_eq!(r.plans[0].total_shed, 0.0);
        assert_eq!(r.plans[1].total_shed, 0.0);
        assert_eq!(r.plans[2].curtailment, vec![20.0, 20.0]);
        assert_eq!(r.totals, vec![20.0, 20.0]);
    }

    #[test]
    fn schedule_axis_mismatch() {
        assert!(DeficitSchedule::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn rank_weights() {
        assert_eq!(default_weights(&[5.0, 50.0, 20.0]), vec![1.0, 3.0, 2.0]);
    }
}
