//! Pareto-front records and re-ranking of exported archives.

use serde::{Deserialize, Serialize};

use crate::metrics::{FitnessPair, PENALTY_IAE, PENALTY_THD};
use crate::nsga2::{crowding_distance, fast_non_dominated_sort, Individual};
use crate::error::Result;

use super::config::ControlScheme;

/// One non-dominated position-PID solution. `solution_index` is 1-based in
/// order of increasing IAE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoRecord {
    pub solution_index: usize,
    pub scheme: ControlScheme,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub f1_iae: f64,
    pub f2_thd: f64,
}

impl ParetoRecord {
    /// Records for a front already ordered by IAE.
    pub fn from_front(front: &[Individual], scheme: ControlScheme) -> Vec<Self> {
        front
            .iter()
            .enumerate()
            .map(|(i, ind)| {
                let [f1, f2] = ind.objectives();
                ParetoRecord {
                    solution_index: i + 1,
                    scheme,
                    kp: ind.genes[0],
                    ki: ind.genes[1],
                    kd: ind.genes[2],
                    f1_iae: f1,
                    f2_thd: f2,
                }
            })
            .collect()
    }

    pub fn genes(&self) -> [f64; 3] {
        [self.kp, self.ki, self.kd]
    }

    pub fn fitness(&self) -> FitnessPair {
        FitnessPair::new(self.f1_iae, self.f2_thd)
    }

    pub fn is_penalty(&self) -> bool {
        self.f1_iae >= PENALTY_IAE || self.f2_thd >= PENALTY_THD
    }
}

/// A record with its rank and crowding distance inside a re-ranked set.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedRecord {
    pub record: ParetoRecord,
    pub rank: usize,
    pub crowding_distance: f64,
}

/// Non-dominated sort plus crowding distance over arbitrary records, ordered
/// by rank, then crowding (descending), then IAE.
pub fn rerank(records: &[ParetoRecord]) -> Result<Vec<RankedRecord>> {
    let mut pop: Vec<Individual> = records
        .iter()
        .map(|r| Individual::evaluated(r.genes().to_vec(), r.fitness()))
        .collect();
    let fronts = fast_non_dominated_sort(&mut pop)?;
    let mut out: Vec<RankedRecord> = Vec::with_capacity(records.len());
    for front in &fronts {
        let fit: Vec<FitnessPair> = front.iter().map(|&i| records[i].fitness()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&fit)) {
            out.push(RankedRecord {
                record: records[i].clone(),
                rank: pop[i].rank,
                crowding_distance: d,
            });
        }
    }
    out.sort_by(|a, b| {
        a.rank
            .cmp(&b.rank)
            .then(b.crowding_distance.total_cmp(&a.crowding_distance))
            .then(a.record.f1_iae.total_cmp(&b.record.f1_iae))
    });
    Ok(out)
}

/// Objective ranges `[max f1 − min f1, max f2 − min f2]` over the
/// non-penalty records; zero for fewer than two such records.
pub fn objective_ranges(records: &[ParetoRecord]) -> [f64; 2] {
    let live: Vec<&ParetoRecord> = records.iter().filter(|r| !r.is_penalty()).collect();
    if live.len() < 2 {
        return [0.0, 0.0];
    }
    let range = |f: fn(&ParetoRecord) -> f64| {
        let (lo, hi) = live
            .iter()
            .map(|r| f(r))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    };
    [range(|r| r.f1_iae), range(|r| r.f2_thd)]
}

/// Front spread with each objective range divided by `scale`: the length of
/// the normalized range vector. Zero-scale objectives contribute nothing.
pub fn normalized_spread(records: &[ParetoRecord], scale: [f64; 2]) -> f64 {
    let r = objective_ranges(records);
    r.iter()
        .zip(scale)
        .map(|(d, s)| if s > 0.0 { (d / s).powi(2) } else { 0.0 })
        .sum::<f64>()
        .sqrt()
}

/// Lowest THD among non-penalty records.
pub fn min_thd(records: &[ParetoRecord]) -> Option<f64> {
    records
        .iter()
        .filter(|r| !r.is_penalty())
        .map(|r| r.f2_thd)
        .min_by(f64::total_cmp)
}
