//! Search over group-constant allocations `(a, b, c, d)` with
//! `4a + 6b + 4c + d = T`.
//!
//! Phase 1 scores a simplex grid over the share of `T` given to each group
//! (the four pure schemes are its vertices). Phase 2 runs a compass search
//! from the best grid point, re-projecting onto the budget after every move
//! and halving the step when no move is accepted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelKind, RowSelection};
use crate::entropy::{EntropyOptions, Estimate};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::schemes::{allocation_for, conjecture_budget, evaluate_metric_with, Metric, Scheme};

/// Rows per group: singlets, pairs, triplets, quadruplet.
const GROUP_SIZES: [f64; 4] = [4.0, 6.0, 4.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub metric: Metric,
    pub channel: ChannelKind,
    #[serde(rename = "T")]
    pub total: f64,
    /// Points per axis of the share simplex, including both ends.
    pub grid_resolution: usize,
    pub refine_iters: usize,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub gaussian_rows: RowSelection,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution < 2 {
            return Err(Error::InvalidSearch("grid_resolution must be at least 2".into()));
        }
        if !(self.total.is_finite() && self.total > 0.0) {
            return Err(Error::InvalidSearch(format!("T = {} must be positive", self.total)));
        }
        if self.n_samples == 0 {
            return Err(Error::ZeroSamples);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub abcd: [f64; 4],
    pub estimate: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_abcd: [f64; 4],
    pub best_estimate: Estimate,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
}

/// Rescales `(a, b, c, d)` onto `4a + 6b + 4c + d = total`.
pub fn project_to_budget(abcd: [f64; 4], total: f64) -> Result<[f64; 4]> {
    if abcd.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidAllocation(format!("abcd = {abcd:?} must be nonnegative")));
    }
    let budget = conjecture_budget(abcd);
    if budget <= 0.0 {
        return Err(Error::ZeroDirection);
    }
    let scale = total / budget;
    Ok(abcd.map(|v| v * scale))
}

fn from_shares(shares: [f64; 4], total: f64) -> [f64; 4] {
    std::array::from_fn(|j| shares[j] * total / GROUP_SIZES[j])
}

fn to_shares(abcd: [f64; 4], total: f64) -> [f64; 4] {
    std::array::from_fn(|j| abcd[j] * GROUP_SIZES[j] / total)
}

/// Feasible grid points in lexicographic `(a, b, c, d)` order.
pub fn simplex_grid(grid_resolution: usize, total: f64) -> Vec<[f64; 4]> {
    let m = grid_resolution.saturating_sub(1).max(1);
    let mut pts = Vec::new();
    for i in 0..=m {
        for j in 0..=m - i {
            for k in 0..=m - i - j {
                let l = m - i - j - k;
                let shares = [i, j, k, l].map(|v| v as f64 / m as f64);
                pts.push(from_shares(shares, total));
            }
        }
    }
    pts.sort_by(|x, y| {
        x.iter().zip(y).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    pts
}

/// Runs the search with the configured channel metric. Every evaluation uses
/// the configured seed, so all points see the same random streams.
pub fn search(config: &SearchConfig, params: &ModelParams) -> Result<SearchResult> {
    params.validate()?;
    let opts = EntropyOptions { gaussian_rows: config.gaussian_rows };
    let objective = |abcd: [f64; 4]| {
        let alloc = allocation_for(&Scheme::Conjecture { abcd }, config.total)?;
        evaluate_metric_with(config.channel, &alloc, params, config.metric, config.n_samples, config.seed, &opts)
    };
    search_with(config, objective)
}

/// Search driver over an arbitrary objective.
pub fn search_with<F>(config: &SearchConfig, objective: F) -> Result<SearchResult>
where
    F: Fn([f64; 4]) -> Result<Estimate> + Sync,
{
    config.validate()?;
    let total = config.total;
    let evaluate = |abcd: [f64; 4]| match objective(abcd) {
        Ok(e) => TraceEntry { abcd, estimate: Some(e), error: None },
        Err(e) => TraceEntry { abcd, estimate: None, error: Some(e.to_string()) },
    };

    let mut trace: Vec<TraceEntry> =
        simplex_grid(config.grid_resolution, total).into_par_iter().map(evaluate).collect();

    let best_of = |trace: &[TraceEntry]| -> Option<(usize, Estimate)> {
        let mut best: Option<(usize, Estimate)> = None;
        for (i, t) in trace.iter().enumerate() {
            if let Some(e) = t.estimate {
                if best.is_none_or(|(_, b)| e.value > b.value) {
                    best = Some((i, e));
                }
            }
        }
        best
    };

    let (start, start_est) =
        best_of(&trace).ok_or_else(|| Error::InvalidSearch("every grid evaluation failed".into()))?;
    let mut incumbent = (trace[start].abcd, start_est);
    let mut step = 1.0 / (config.grid_resolution - 1) as f64;

    for _ in 0..config.refine_iters {
        let shares = to_shares(incumbent.0, total);
        let mut moved = false;
        'poll: for j in 0..4 {
            for sign in [1.0, -1.0] {
                let mut cand = shares;
                cand[j] = (cand[j] + sign * step).max(0.0);
                let Ok(abcd) = project_to_budget(from_shares(cand, total), total) else {
                    continue;
                };
                if abcd == incumbent.0 {
                    continue;
                }
                let entry = evaluate(abcd);
                let accepted = entry.estimate.filter(|e| e.value > incumbent.1.value + e.combined_stderr(&incumbent.1));
                trace.push(entry);
                if let Some(e) = accepted {
                    incumbent = (abcd, e);
                    moved = true;
                    break 'poll;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }

    let (best, best_estimate) = best_of(&trace).expect("grid produced an estimate");
    Ok(SearchResult { best_abcd: trace[best].abcd, best_estimate, evaluations: trace.len(), trace })
}
