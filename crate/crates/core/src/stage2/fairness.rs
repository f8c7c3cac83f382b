use serde::{Deserialize, Serialize};

use super::FlexibilityResult;
use crate::stage1::ActorTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalFairness {
    pub t: usize,
    /// `(actor index, curtailment / fixed load)` for actors with load at `t`.
    pub prorated: Vec<(usize, f64)>,
    pub max: f64,
    pub min: f64,
    pub spread: f64,
    pub mean_abs_pairwise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub intervals: Vec<IntervalFairness>,
    /// Largest spread over the affected intervals.
    pub spread: f64,
}

pub fn fairness_metrics(result: &FlexibilityResult, actors: &ActorTable) -> FairnessReport {
    let mut intervals = Vec::new();
    for &t in &result.intervals {
        let prorated: Vec<(usize, f64)> = actors
            .actors
            .iter()
            .enumerate()
            .filter(|(_, a)| a.baseline[t] > 0.0)
            .map(|(i, a)| (i, result.plan.actor[i][t] / a.baseline[t]))
            .collect();
        let vals: Vec<f64> = prorated.iter().map(|p| p.1).collect();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let (max, min) = if vals.is_empty() { (0.0, 0.0) } else { (max, min) };
        let n = vals.len();
        let mut pair_sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                pair_sum += (vals[i] - vals[j]).abs();
            }
        }
        let pairs = n * n.saturating_sub(1) / 2;
        intervals.push(IntervalFairness {
            t,
            prorated,
            max,
            min,
            spread: max - min,
            mean_abs_pairwise: if pairs > 0 { pair_sum / pairs as f64 } else { 0.0 },
        });
    }
    let spread = intervals.iter().map(|i| i.spread).fold(0.0, f64::max);
    FairnessReport { intervals, spread }
}
