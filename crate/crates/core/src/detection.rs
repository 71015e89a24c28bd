//! MAP detection under 0–1 cost and Monte Carlo estimation of the Bayes
//! probability of correct detection.

use serde::{Deserialize, Serialize};

use crate::channel::{log_likelihood, ChannelKernel, ChannelKind, Observation, RowSelection, SeededRng};
use crate::entropy::Estimate;
use crate::error::{Error, Result};
use crate::model::{enumerate_hypotheses, priors, Hypothesis, ModelParams, TimeAllocation, N_HYPOTHESES};
use crate::sampling::{make_plan, map_chunks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub decided: Hypothesis,
    pub truth: Hypothesis,
    pub correct: bool,
}

impl DecisionOutcome {
    pub fn new(decided: Hypothesis, truth: Hypothesis) -> Self {
        Self { decided, truth, correct: decided == truth }
    }
}

/// MAP decision for a full observation. Ties go to the lowest index.
pub fn map_decide(
    channel: ChannelKind,
    y: &Observation,
    alloc: &TimeAllocation,
    params: &ModelParams,
) -> Result<Hypothesis> {
    // validates the observation through the same likelihood path
    log_likelihood(channel, y, alloc, enumerate_hypotheses()[0], params)?;
    let kernel = ChannelKernel::new(channel, alloc, params, RowSelection::All);
    Ok(kernel.decide(&y.y))
}

/// Stratified estimate of `P_d`. Strata are weighted by the exact priors;
/// the standard error propagates a binomial variance per stratum.
pub fn estimate_pd(
    channel: ChannelKind,
    alloc: &TimeAllocation,
    params: &ModelParams,
    n_samples: u64,
    rng: &SeededRng,
) -> Result<Estimate> {
    params.validate()?;
    let plan = make_plan(params, n_samples)?;
    let pi = priors(params);
    if let Some(h) = (0..N_HYPOTHESES).find(|&h| pi[h] > 0.0 && plan.counts[h] == 0) {
        return Err(Error::EmptyStratum { hypothesis: h, prior: pi[h] });
    }
    // inactive rows carry no information about X
    let kernel = ChannelKernel::new(channel, alloc, params, RowSelection::Active);
    let d = kernel.dim();
    let parts = map_chunks(&plan, rng.seed(), |chunk, rng| {
        let mut y = vec![0.0; d];
        let mut correct = 0u64;
        for _ in 0..chunk.len {
            kernel.sample_into(chunk.h, rng, &mut y);
            correct += u64::from(kernel.decide(&y) == chunk.h);
        }
        correct
    });
    let mut correct = [0u64; N_HYPOTHESES];
    for (chunk, c) in parts {
        correct[chunk.h.index()] += c;
    }
    let mut value = 0.0;
    let mut var = 0.0;
    for h in 0..N_HYPOTHESES {
        let n = plan.counts[h];
        if n == 0 {
            continue;
        }
        let q = correct[h] as f64 / n as f64;
        value += pi[h] * q;
        var += pi[h] * pi[h] * q * (1.0 - q) / n as f64;
    }
    Ok(Estimate { value: value.clamp(0.0, 1.0), stderr: var.sqrt(), n_samples: plan.total() })
}

/// Average 0–1 cost of the MAP detector, `1 - P_d`.
pub fn bayes_risk(
    channel: ChannelKind,
    alloc: &TimeAllocation,
    params: &ModelParams,
    n_samples: u64,
    rng: &SeededRng,
) -> Result<Estimate> {
    let pd = estimate_pd(channel, alloc, params, n_samples, rng)?;
    Ok(Estimate { value: 1.0 - pd.value, ..pd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample;
    use crate::model::{gaussian_mean_vector, N_ROWS};

    fn params(p: f64, l0: f64, l1: f64) -> ModelParams {
        ModelParams::new(p, l0, l1).unwrap()
    }

    #[test]
    fn zero_allocation_decides_by_prior() {
        let y = Observation::new([0.3; N_ROWS]);
        let d = map_decide(ChannelKind::Gaussian, &y, &TimeAllocation::zero(), &params(0.2, 5.0, 10.0)).unwrap();
        assert_eq!(d.index(), 0);
        let d = map_decide(ChannelKind::Gaussian, &y, &TimeAllocation::zero(), &params(0.5, 5.0, 10.0)).unwrap();
        assert_eq!(d.index(), 0);
        let d = map_decide(ChannelKind::Gaussian, &y, &TimeAllocation::zero(), &params(0.8, 5.0, 10.0)).unwrap();
        assert_eq!(d.index(), 15);
    }

    #[test]
    fn separable_means_decide_truth() {
        let mut t = [0.0; N_ROWS];
        t[..4].fill(1e4);
        let alloc = TimeAllocation::new(t).unwrap();
        let pr = params(0.5, 5.0, 10.0);
        let h9 = Hypothesis::new(9).unwrap();
        let y = Observation::new(gaussian_mean_vector(&alloc, h9, &pr));
        assert_eq!(map_decide(ChannelKind::Gaussian, &y, &alloc, &pr).unwrap(), h9);
    }

    #[test]
    fn rejects_non_integer_poisson_observation() {
        let mut y = [0.0; N_ROWS];
        y[0] = 0.5;
        assert!(map_decide(
            ChannelKind::Poisson,
            &Observation::new(y),
            &TimeAllocation::zero(),
            &params(0.5, 2.0, 20.0)
        )
        .is_err());
    }

    #[test]
    fn pd_degenerate_constants() {
        let rng = SeededRng::new(21);
        for ch in [ChannelKind::Poisson, ChannelKind::Gaussian] {
            let pd = estimate_pd(ch, &TimeAllocation::zero(), &params(0.2, 2.0, 20.0), 10_000, &rng).unwrap();
            assert!((pd.value - 0.4096).abs() < 1e-12);
            assert_eq!(pd.stderr, 0.0);
            let pd = estimate_pd(ch, &TimeAllocation::zero(), &params(0.5, 2.0, 20.0), 10_000, &rng).unwrap();
            assert_eq!(pd.value, 0.0625);
            assert_eq!(pd.stderr, 0.0);
            let alloc = TimeAllocation::new([0.1; N_ROWS]).unwrap();
            let pd = estimate_pd(ch, &alloc, &params(1.0, 2.0, 20.0), 1000, &rng).unwrap();
            assert_eq!(pd.value, 1.0);
        }
    }

    #[test]
    fn risk_complements_pd() {
        let rng = SeededRng::new(22);
        let alloc = TimeAllocation::new([0.05; N_ROWS]).unwrap();
        let pr = params(0.3, 2.0, 20.0);
        let pd = estimate_pd(ChannelKind::Poisson, &alloc, &pr, 5000, &rng).unwrap();
        let r = bayes_risk(ChannelKind::Poisson, &alloc, &pr, 5000, &rng).unwrap();
        assert_eq!(r.value + pd.value, 1.0);
        assert_eq!(r.stderr, pd.stderr);
        let r =
            bayes_risk(ChannelKind::Gaussian, &TimeAllocation::zero(), &params(0.2, 5.0, 10.0), 1000, &rng).unwrap();
        assert!((r.value - 0.5904).abs() < 1e-12);
        assert_eq!(bayes_risk(ChannelKind::Gaussian, &alloc, &params(1.0, 5.0, 10.0), 100, &rng).unwrap().value, 0.0);
    }

    #[test]
    fn empty_stratum_is_an_error() {
        let rng = SeededRng::new(23);
        let err = estimate_pd(ChannelKind::Poisson, &TimeAllocation::zero(), &params(0.01, 2.0, 20.0), 1000, &rng);
        assert!(matches!(err, Err(Error::EmptyStratum { .. })));
    }

    #[test]
    fn well_separated_gaussian_detects_reliably() {
        // singlet rows with t = 36: sqrt(t)·(λ1 − λ0) = 6·5 = 30 ≥ 12 in every coordinate
        let mut t = [0.0; N_ROWS];
        t[..4].fill(36.0);
        let alloc = TimeAllocation::new(t).unwrap();
        let pd =
            estimate_pd(ChannelKind::Gaussian, &alloc, &params(0.5, 5.0, 10.0), 10_000, &SeededRng::new(24)).unwrap();
        assert!(pd.value >= 0.99, "{pd:?}");
    }

    #[test]
    fn decision_invariant_to_common_shift() {
        let pr = params(0.35, 2.0, 20.0);
        let alloc = TimeAllocation::new(std::array::from_fn(|i| 0.02 * (i + 1) as f64)).unwrap();
        let kernel = ChannelKernel::new(ChannelKind::Poisson, &alloc, &pr, RowSelection::All);
        let mut rng = SeededRng::new(25);
        for i in 0..50 {
            let obs = sample(ChannelKind::Poisson, &alloc, Hypothesis::new(i % 16).unwrap(), &pr, &mut rng);
            let mut joint = [0.0; N_HYPOTHESES];
            kernel.log_joint(&obs.y, &mut joint);
            let best = |xs: &[f64; N_HYPOTHESES]| (0..N_HYPOTHESES).fold(0, |b, h| if xs[h] > xs[b] { h } else { b });
            let shifted = joint.map(|v| v + 123.456);
            assert_eq!(best(&joint), best(&shifted));
            assert_eq!(kernel.decide(&obs.y).index(), best(&joint));
        }
    }
}
