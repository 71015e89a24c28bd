//! Conditional observation models for the vector Poisson and Gaussian
//! channels: sampling, log-likelihoods and mixture log-densities.
//!
//! All likelihood values are natural logarithms.

mod poisson;
mod rng;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use poisson::{ln_pmf as poisson_ln_pmf, PoissonSampler};
pub use rng::{derive_seed, SeededRng};

use crate::error::{Error, Result};
use crate::model::{
    enumerate_hypotheses, gaussian_mean_vector, poisson_rate_vector, priors, Hypothesis, ModelParams, TimeAllocation,
    N_HYPOTHESES, N_ROWS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Poisson,
    Gaussian,
}

impl ChannelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Poisson => "poisson",
            ChannelKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(ChannelKind::Poisson),
            "gaussian" => Ok(ChannelKind::Gaussian),
            other => Err(format!("unknown channel `{other}`")),
        }
    }
}

/// A full 15-component observation. Counts are stored as `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub y: [f64; N_ROWS],
}

impl Observation {
    pub fn new(y: [f64; N_ROWS]) -> Self {
        Self { y }
    }

    pub fn from_counts(counts: [u64; N_ROWS]) -> Self {
        Self { y: counts.map(|c| c as f64) }
    }

    fn check_counts(&self) -> Result<()> {
        match self.y.iter().enumerate().find(|(_, &v)| !(v >= 0.0 && v.fract() == 0.0 && v.is_finite())) {
            Some((index, &value)) => Err(Error::NonIntegerObservation { index, value }),
            None => Ok(()),
        }
    }
}

/// Numerically stable `ln Σ exp(x_i)`. Returns `-inf` for an empty slice or
/// when every term is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Which observation rows a [`ChannelKernel`] covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowSelection {
    /// All 15 rows.
    All,
    /// Only rows with positive dwell time.
    #[default]
    Active,
}

/// Per-hypothesis channel parameters for one allocation, laid out for
/// repeated evaluation. Shared by the entropy estimator and the detector so
/// both use the same likelihoods.
#[derive(Debug, Clone)]
pub struct ChannelKernel {
    channel: ChannelKind,
    rows: Vec<usize>,
    log_prior: [f64; N_HYPOTHESES],
    /// Rate (Poisson) or mean (Gaussian), hypothesis-major.
    param: Vec<f64>,
    ln_rate: Vec<f64>,
    samplers: Vec<PoissonSampler>,
    gaussian_norm: f64,
}

impl ChannelKernel {
    pub fn new(channel: ChannelKind, alloc: &TimeAllocation, params: &ModelParams, selection: RowSelection) -> Self {
        let rows: Vec<usize> = match selection {
            RowSelection::All => (0..N_ROWS).collect(),
            RowSelection::Active => alloc.active_rows(),
        };
        let d = rows.len();
        let mut param = Vec::with_capacity(N_HYPOTHESES * d);
        for h in enumerate_hypotheses() {
            let full = match channel {
                ChannelKind::Poisson => poisson_rate_vector(alloc, h, params),
                ChannelKind::Gaussian => gaussian_mean_vector(alloc, h, params),
            };
            param.extend(rows.iter().map(|&i| full[i]));
        }
        let (ln_rate, samplers) = match channel {
            ChannelKind::Poisson => {
                (param.iter().map(|r| r.ln()).collect(), param.iter().map(|&r| PoissonSampler::new(r)).collect())
            }
            ChannelKind::Gaussian => (Vec::new(), Vec::new()),
        };
        Self {
            channel,
            rows,
            log_prior: priors(params).map(f64::ln),
            param,
            ln_rate,
            samplers,
            gaussian_norm: -0.5 * d as f64 * (2.0 * PI).ln(),
        }
    }

    pub fn channel(&self) -> ChannelKind {
        self.channel
    }

    /// Observation rows covered, in row order.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn log_prior(&self, h: Hypothesis) -> f64 {
        self.log_prior[h.index()]
    }

    fn params_of(&self, h: Hypothesis) -> std::ops::Range<usize> {
        let d = self.dim();
        h.index() * d..(h.index() + 1) * d
    }

    /// Draws the covered components of `Y | h` into `out` (length `dim()`).
    pub fn sample_into(&self, h: Hypothesis, rng: &mut SeededRng, out: &mut [f64]) {
        let range = self.params_of(h);
        match self.channel {
            ChannelKind::Poisson => {
                for (o, s) in out.iter_mut().zip(&self.samplers[range]) {
                    *o = s.sample(rng);
                }
            }
            ChannelKind::Gaussian => {
                for (o, &mu) in out.iter_mut().zip(&self.param[range]) {
                    *o = mu + rng.standard_normal();
                }
            }
        }
    }

    /// `ln p(y | h)` over the covered rows; `y` has length `dim()`.
    pub fn log_likelihood(&self, h: Hypothesis, y: &[f64]) -> f64 {
        let range = self.params_of(h);
        match self.channel {
            ChannelKind::Poisson => y
                .iter()
                .zip(&self.param[range.clone()])
                .zip(&self.ln_rate[range])
                .map(|((&k, &rate), &ln_rate)| poisson_term(k, rate, ln_rate, ln_factorial(k)))
                .sum(),
            ChannelKind::Gaussian => {
                let sq: f64 = y.iter().zip(&self.param[range]).map(|(&v, &mu)| (v - mu) * (v - mu)).sum();
                self.gaussian_norm - 0.5 * sq
            }
        }
    }

    /// `ln π_h + ln p(y | h)` for every hypothesis. Zero-prior hypotheses get `-inf`.
    pub fn log_joint(&self, y: &[f64], out: &mut [f64; N_HYPOTHESES]) {
        let d = self.dim();
        match self.channel {
            ChannelKind::Poisson => {
                // ln k! is shared by every hypothesis
                let mut ln_fact = [0.0; N_ROWS];
                for (f, &k) in ln_fact.iter_mut().zip(y) {
                    *f = ln_factorial(k);
                }
                for (h, o) in out.iter_mut().enumerate() {
                    if self.log_prior[h] == f64::NEG_INFINITY {
                        *o = f64::NEG_INFINITY;
                        continue;
                    }
                    let base = h * d;
                    let mut acc = self.log_prior[h];
                    for j in 0..d {
                        acc += poisson_term(y[j], self.param[base + j], self.ln_rate[base + j], ln_fact[j]);
                    }
                    *o = acc;
                }
            }
            ChannelKind::Gaussian => {
                for (h, o) in out.iter_mut().enumerate() {
                    if self.log_prior[h] == f64::NEG_INFINITY {
                        *o = f64::NEG_INFINITY;
                        continue;
                    }
                    let mu = &self.param[h * d..(h + 1) * d];
                    let sq: f64 = y.iter().zip(mu).map(|(&v, &m)| (v - m) * (v - m)).sum();
                    *o = self.log_prior[h] + self.gaussian_norm - 0.5 * sq;
                }
            }
        }
    }

    /// `ln Σ_h π_h p(y | h)` over the covered rows.
    pub fn log_mixture(&self, y: &[f64]) -> f64 {
        let mut joint = [0.0; N_HYPOTHESES];
        self.log_joint(y, &mut joint);
        log_sum_exp(&joint)
    }

    /// MAP decision: argmax of `ln π_h + ln p(y | h)`, lowest index on ties.
    /// Zero-prior hypotheses never win.
    pub fn decide(&self, y: &[f64]) -> Hypothesis {
        let mut joint = [0.0; N_HYPOTHESES];
        self.log_joint(y, &mut joint);
        argmax_first(&joint, &self.log_prior)
    }

    /// Picks the covered components out of a full observation.
    pub fn project(&self, obs: &Observation) -> Vec<f64> {
        self.rows.iter().map(|&i| obs.y[i]).collect()
    }
}

fn argmax_first(joint: &[f64; N_HYPOTHESES], log_prior: &[f64; N_HYPOTHESES]) -> Hypothesis {
    let mut best: Option<usize> = None;
    for h in 0..N_HYPOTHESES {
        if log_prior[h] == f64::NEG_INFINITY {
            continue;
        }
        match best {
            None => best = Some(h),
            Some(b) if joint[h] > joint[b] => best = Some(h),
            _ => {}
        }
    }
    // every prior zero cannot happen for valid params; fall back to 0
    Hypothesis::new(best.unwrap_or(0)).expect("index < 16")
}

#[inline]
fn ln_factorial(k: f64) -> f64 {
    statrs::function::gamma::ln_gamma(k + 1.0)
}

#[inline]
fn poisson_term(k: f64, rate: f64, ln_rate: f64, ln_fact: f64) -> f64 {
    if rate == 0.0 {
        if k == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        k * ln_rate - rate - ln_fact
    }
}

/// Draws a full observation of `Y | h`. Poisson rows with rate 0 are always 0.
pub fn sample(
    channel: ChannelKind,
    alloc: &TimeAllocation,
    h: Hypothesis,
    params: &ModelParams,
    rng: &mut SeededRng,
) -> Observation {
    let kernel = ChannelKernel::new(channel, alloc, params, RowSelection::All);
    let mut y = [0.0; N_ROWS];
    kernel.sample_into(h, rng, &mut y);
    Observation::new(y)
}

/// `ln p(y | h)` over all 15 rows.
pub fn log_likelihood(
    channel: ChannelKind,
    y: &Observation,
    alloc: &TimeAllocation,
    h: Hypothesis,
    params: &ModelParams,
) -> Result<f64> {
    if channel == ChannelKind::Poisson {
        y.check_counts()?;
    }
    let kernel = ChannelKernel::new(channel, alloc, params, RowSelection::All);
    Ok(kernel.log_likelihood(h, &y.y))
}

/// `ln Σ_h π_h p(y | h)` over all 15 rows.
pub fn log_mixture(channel: ChannelKind, y: &Observation, alloc: &TimeAllocation, params: &ModelParams) -> Result<f64> {
    if channel == ChannelKind::Poisson {
        y.check_counts()?;
    }
    let kernel = ChannelKernel::new(channel, alloc, params, RowSelection::All);
    Ok(kernel.log_mixture(&y.y))
}
