//! Output entropy, conditional entropy and mutual information, in bits.
//!
//! `H(Y)` is a 16-component mixture entropy estimated by stratified Monte
//! Carlo. `H(Y|X)` is exact for the Gaussian channel and a truncated sum for
//! the Poisson channel, so the only sampling error in `I(X;Y)` comes from
//! `H(Y)`.

use std::f64::consts::{E, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::channel::{poisson_ln_pmf, ChannelKernel, ChannelKind, RowSelection, SeededRng};
use crate::error::{Error, Result};
use crate::model::{
    enumerate_hypotheses, poisson_rate_vector, priors, ModelParams, TimeAllocation, N_HYPOTHESES, N_ROWS, N_TARGETS,
};
use crate::sampling::{make_plan, map_chunks, Moments};

/// Upper-tail mass left out when truncating a Poisson pmf (double-precision
/// unit roundoff).
pub const TRUNCATION_TAIL: f64 = 1.110223024625157e-16;

/// Default Monte Carlo budget per estimate.
pub const DEFAULT_SAMPLES: u64 = 1_000_000;

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

impl Estimate {
    pub fn exact(value: f64, n_samples: u64) -> Self {
        Self { value, stderr: 0.0, n_samples }
    }

    pub(crate) fn from_moments(m: &Moments) -> Self {
        let stderr = if m.n == 0 { 0.0 } else { (m.sample_variance() / m.n as f64).sqrt() };
        Self { value: m.mean, stderr, n_samples: m.n }
    }

    /// `sqrt(se_a² + se_b²)`, for comparing two independent estimates.
    pub fn combined_stderr(&self, other: &Estimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

/// Estimator switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EntropyOptions {
    /// Rows entering the Gaussian entropies. Inactive rows add the same
    /// constant to `H(Y)` and `H(Y|X)`, so MI is unchanged either way.
    pub gaussian_rows: RowSelection,
}

/// Differential entropy of a `k`-dimensional standard normal, in bits.
pub fn gaussian_entropy_bits(k: usize) -> f64 {
    k as f64 * 0.5 * (2.0 * PI * E).log2()
}

/// `H(Y|X)` of the Gaussian channel over all 15 rows.
pub fn conditional_entropy_gaussian() -> f64 {
    gaussian_entropy_bits(N_ROWS)
}

/// Smallest `k` with `P(Y > k) <= TRUNCATION_TAIL` for `Y ~ Pois(rate)`,
/// i.e. the inverse cdf at `1 - TRUNCATION_TAIL`.
pub fn poisson_inverse_cdf_tail(rate: f64) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    // Cornish-Fisher start, well past the quantile; the tail is then
    // accumulated from far out so small terms are summed first.
    let z = 8.3;
    let guess = rate + z * rate.sqrt() + (z * z - 1.0) / 6.0;
    let mut top = guess.ceil().max(1.0) as u64;
    while poisson_ln_pmf(top as f64, rate) > -120.0 {
        top += 1 + top / 8;
    }
    let mut tail = 0.0;
    let mut k = top;
    // invariant: tail = P(Y > k) (up to the neglected mass beyond `top`)
    while k > 0 {
        let with_k = tail + poisson_ln_pmf(k as f64, rate).exp();
        if with_k > TRUNCATION_TAIL {
            return k;
        }
        tail = with_k;
        k -= 1;
    }
    0
}

/// Truncation point of the pmf sum: twice the tail quantile.
pub fn poisson_truncation_point(rate: f64) -> u64 {
    2 * poisson_inverse_cdf_tail(rate)
}

/// Entropy in bits of `Pois(rate)`, summed over `0..=poisson_truncation_point(rate)`.
pub fn poisson_entropy_rate(rate: f64) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    let y_max = poisson_truncation_point(rate);
    let mut h = 0.0;
    for j in 0..=y_max {
        let lp = poisson_ln_pmf(j as f64, rate);
        let p = lp.exp();
        if p > 0.0 {
            h -= p * lp;
        }
    }
    h / LN_2
}

/// `H(Y|X)` of the Poisson channel: `Σ_h π_h Σ_i H(Pois(rate_{h,i}))`.
pub fn conditional_entropy_poisson(alloc: &TimeAllocation, params: &ModelParams) -> f64 {
    let pi = priors(params);
    let mut memo: Vec<(f64, f64)> = Vec::new();
    let mut total = 0.0;
    for h in enumerate_hypotheses() {
        if pi[h.index()] == 0.0 {
            continue;
        }
        let rates = poisson_rate_vector(alloc, h, params);
        let mut hh = 0.0;
        for &r in rates.iter().filter(|&&r| r > 0.0) {
            let v = match memo.iter().find(|(mr, _)| *mr == r) {
                Some(&(_, v)) => v,
                None => {
                    let v = poisson_entropy_rate(r);
                    memo.push((r, v));
                    v
                }
            };
            hh += v;
        }
        total += pi[h.index()] * hh;
    }
    total
}

fn conditional_entropy(
    channel: ChannelKind,
    alloc: &TimeAllocation,
    params: &ModelParams,
    opts: &EntropyOptions,
) -> f64 {
    match channel {
        ChannelKind::Poisson => conditional_entropy_poisson(alloc, params),
        ChannelKind::Gaussian => match opts.gaussian_rows {
            RowSelection::All => conditional_entropy_gaussian(),
            RowSelection::Active => gaussian_entropy_bits(alloc.active_rows().len()),
        },
    }
}

fn kernel_rows(channel: ChannelKind, opts: &EntropyOptions) -> RowSelection {
    match channel {
        // inactive Poisson rows are identically zero
        ChannelKind::Poisson => RowSelection::Active,
        ChannelKind::Gaussian => opts.gaussian_rows,
    }
}

/// Stratified MC estimate of `H(Y)` in bits. Chunk streams are keyed by
/// `rng.seed()`.
pub fn estimate_output_entropy(
    channel: ChannelKind,
    alloc: &TimeAllocation,
    params: &ModelParams,
    n_samples: u64,
    rng: &SeededRng,
) -> Result<Estimate> {
    estimate_output_entropy_with(channel, alloc, params, n_samples, rng, &EntropyOptions::default())
}

pub fn estimate_output_entropy_with(
    channel: ChannelKind,
    alloc: &TimeAllocation,
    params: &ModelParams,
    n_samples: u64,
    rng: &SeededRng,
    opts: &EntropyOptions,
) -> Result<Estimate> {
    params.validate()?;
    let plan = make_plan(params, n_samples)?;
    let kernel = ChannelKernel::new(channel, alloc, params, kernel_rows(channel, opts));
    let d = kernel.dim();
    let parts = map_chunks(&plan, rng.seed(), |chunk, rng| {
        let mut y = vec![0.0; d];
        let mut m = Moments::default();
        for _ in 0..chunk.len {
            kernel.sample_into(chunk.h, rng, &mut y);
            m.push(-kernel.log_mixture(&y) / LN_2);
        }
        m
    });
    let merged = parts.into_iter().fold(Moments::default(), |acc, (_, m)| acc.merge(m));
    let est = Estimate::from_moments(&merged);
    if !(est.value.is_finite() && est.stderr.is_finite()) {
        return Err(Error::NonFinite(format!("H(Y) = {} ± {}", est.value, est.stderr)));
    }
    Ok(est)
}

/// `I(X;Y) = H(Y) - H(Y|X)` in bits, carrying the stderr of `H(Y)`.
pub fn mutual_information(
    channel: ChannelKind,
    alloc: &TimeAllocation,
    params: &ModelParams,
    n_samples: u64,
    rng: &SeededRng,
) -> Result<Estimate> {
    mutual_information_with(channel, alloc, params, n_samples, rng, &EntropyOptions::default())
}

pub fn mutual_information_with(
    channel: ChannelKind,
    alloc: &TimeAllocation,
    params: &ModelParams,
    n_samples: u64,
    rng: &SeededRng,
    opts: &EntropyOptions,
) -> Result<Estimate> {
    if params.p == 0.0 || params.p == 1.0 {
        // X is deterministic
        params.validate()?;
        make_plan(params, n_samples)?;
        return Ok(Estimate::exact(0.0, n_samples));
    }
    let hy = estimate_output_entropy_with(channel, alloc, params, n_samples, rng, opts)?;
    let hyx = conditional_entropy(channel, alloc, params, opts);
    Ok(Estimate { value: hy.value - hyx, ..hy })
}

fn binomial_weights(params: &ModelParams) -> [f64; N_TARGETS + 1] {
    let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
    std::array::from_fn(|k| binom[k] * params.p.powi(k as i32) * (1.0 - params.p).powi((N_TARGETS - k) as i32))
}

/// Entropy in bits of the number of high-level targets, `H(Σ X_i)`; the
/// ceiling on what the quadruplet observation alone can reveal.
pub fn quadruplet_mi_limit(params: &ModelParams) -> f64 {
    binomial_weights(params).iter().filter(|&&w| w > 0.0).map(|&w| -w * w.log2()).sum()
}

/// Exact `I(X; Y15)` when only the quadruplet row is observed for time `t`,
/// by direct summation over `y = 0..=y_max` in the divergence form
/// `Σ_k w_k Σ_y P(y|k) log2(P(y|k) / P(y))`.
pub fn exact_mi_quadruplet_poisson(params: &ModelParams, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let w = binomial_weights(params);
    let rates: [f64; N_TARGETS + 1] =
        std::array::from_fn(|k| t * (k as f64 * params.lambda1 + (N_TARGETS - k) as f64 * params.lambda0));
    let y_max = rates.iter().map(|&r| poisson_truncation_point(r)).max().unwrap_or(0);
    let mut mi = 0.0;
    let mut ln_cond = [0.0; N_TARGETS + 1];
    for y in 0..=y_max {
        let yf = y as f64;
        for (l, &r) in ln_cond.iter_mut().zip(&rates) {
            *l = poisson_ln_pmf(yf, r);
        }
        let ln_marg = {
            let terms: Vec<f64> =
                w.iter().zip(&ln_cond).filter(|(&wk, _)| wk > 0.0).map(|(&wk, &l)| wk.ln() + l).collect();
            crate::channel::log_sum_exp(&terms)
        };
        for (&wk, &l) in w.iter().zip(&ln_cond) {
            if wk > 0.0 && l > f64::NEG_INFINITY {
                mi += wk * l.exp() * (l - ln_marg);
            }
        }
    }
    (mi / LN_2).max(0.0)
}

const _: () = assert!(N_HYPOTHESES == 1 << N_TARGETS);
