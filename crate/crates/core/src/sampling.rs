//! Stratified sample plans and the chunked, order-independent parallel
//! driver shared by the entropy and detection estimators.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::SeededRng;
use crate::error::{Error, Result};
use crate::model::{priors, Hypothesis, ModelParams, N_HYPOTHESES};

/// Samples per work unit. Fixed so results do not depend on the worker count.
pub const CHUNK_SIZE: u64 = 2048;

/// Per-hypothesis sample counts proportional to the priors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratifiedPlan {
    pub counts: [u64; N_HYPOTHESES],
}

impl StratifiedPlan {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, h: Hypothesis) -> u64 {
        self.counts[h.index()]
    }
}

/// Largest-remainder apportionment of `n_samples` over the 16 priors.
/// Remainder ties go to the lower hypothesis index.
pub fn make_plan(params: &ModelParams, n_samples: u64) -> Result<StratifiedPlan> {
    if n_samples == 0 {
        return Err(Error::ZeroSamples);
    }
    let pi = priors(params);
    let quotas: [f64; N_HYPOTHESES] = std::array::from_fn(|h| pi[h] * n_samples as f64);
    let mut counts: [u64; N_HYPOTHESES] = quotas.map(|q| q.floor() as u64);
    let assigned: u64 = counts.iter().sum();
    let mut left = n_samples.saturating_sub(assigned);

    let mut order: Vec<usize> = (0..N_HYPOTHESES).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &h in order.iter().cycle() {
        if left == 0 {
            break;
        }
        // rounding can leave a deficit of more than 16 only if priors are broken
        if pi[h] > 0.0 {
            counts[h] += 1;
            left -= 1;
        }
    }
    Ok(StratifiedPlan { counts })
}

/// One unit of work: `len` draws from hypothesis `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk {
    pub h: Hypothesis,
    pub index: u64,
    pub len: u64,
}

impl Chunk {
    /// Stream id of this chunk's generator.
    pub fn stream_id(&self) -> u64 {
        ((self.h.index() as u64) << 40) | self.index
    }
}

/// Splits each stratum into fixed-size chunks, hypothesis-major.
pub fn plan_chunks(plan: &StratifiedPlan) -> Vec<Chunk> {
    let mut out = Vec::new();
    for (i, &n) in plan.counts.iter().enumerate() {
        let h = Hypothesis::new(i).expect("index < 16");
        let mut start = 0;
        let mut index = 0;
        while start < n {
            let len = CHUNK_SIZE.min(n - start);
            out.push(Chunk { h, index, len });
            start += len;
            index += 1;
        }
    }
    out
}

/// Runs `f` on every chunk with its own stream under `seed`, in parallel on
/// the current rayon pool. Output order follows [`plan_chunks`].
pub fn map_chunks<T, F>(plan: &StratifiedPlan, seed: u64, f: F) -> Vec<(Chunk, T)>
where
    T: Send,
    F: Fn(&Chunk, &mut SeededRng) -> T + Sync,
{
    plan_chunks(plan)
        .into_par_iter()
        .map(|c| {
            let mut rng = SeededRng::stream(seed, c.stream_id());
            let out = f(&c, &mut rng);
            (c, out)
        })
        .collect()
}

/// Count, mean and centered sum of squares; merged pairwise.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64) -> ModelParams {
        ModelParams::new(p, 2.0, 20.0).unwrap()
    }

    #[test]
    fn uniform_plan() {
        let plan = make_plan(&params(0.5), 160).unwrap();
        assert_eq!(plan.counts, [10; 16]);
    }

    #[test]
    fn degenerate_plan() {
        let plan = make_plan(&params(0.0), 100).unwrap();
        assert_eq!(plan.counts[0], 100);
        assert_eq!(plan.total(), 100);
        let plan = make_plan(&params(1.0), 7).unwrap();
        assert_eq!(plan.counts[15], 7);
    }

    #[test]
    fn skewed_plan_matches_independent_apportionment() {
        // computed independently with a Python largest-remainder routine
        let expected = [40960, 10240, 10240, 2560, 10240, 2560, 2560, 640, 10240, 2560, 2560, 640, 2560, 640, 640, 160];
        assert_eq!(make_plan(&params(0.2), 100_000).unwrap().counts, expected);
    }

    #[test]
    fn plan_rounding_within_one() {
        for &p in &[0.1, 0.23, 0.5, 0.77, 0.999] {
            for &n in &[1u64, 17, 999, 12_345] {
                let plan = make_plan(&params(p), n).unwrap();
                assert_eq!(plan.total(), n);
                let pi = priors(&params(p));
                for (count, prior) in plan.counts.iter().zip(pi) {
                    assert!((*count as f64 - prior * n as f64).abs() < 1.0);
                }
            }
        }
    }

    #[test]
    fn zero_budget_rejected() {
        assert_eq!(make_plan(&params(0.5), 0), Err(Error::ZeroSamples));
    }

    #[test]
    fn chunks_cover_plan_exactly() {
        let plan = make_plan(&params(0.3), 54_321).unwrap();
        let mut realized = [0u64; 16];
        for c in plan_chunks(&plan) {
            assert!(c.len > 0 && c.len <= CHUNK_SIZE);
            realized[c.h.index()] += c.len;
        }
        assert_eq!(realized, plan.counts);
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert_eq!(m.n, all.n);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.m2 - all.m2).abs() < 1e-8);
    }
}
