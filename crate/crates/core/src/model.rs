//! Input distribution, hypothesis enumeration and the fixed 15×4 incidence
//! pattern shared by both channels.
//!
//! Observation rows are ordered as four singlets, six pairs, four triplets
//! and one quadruplet. Every module indexes observations by this order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of targets.
pub const N_TARGETS: usize = 4;
/// Number of observation processes (all nonempty target subsets).
pub const N_ROWS: usize = 15;
/// Number of input hypotheses, 2^4.
pub const N_HYPOTHESES: usize = 16;

/// Prior `p` of the high level and the two intensity levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub lambda0: f64,
    pub lambda1: f64,
}

impl ModelParams {
    pub fn new(p: f64, lambda0: f64, lambda1: f64) -> Result<Self> {
        let params = Self { p, lambda0, lambda1 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParams(format!("p = {} not in [0, 1]", self.p)));
        }
        if !(self.lambda0.is_finite() && self.lambda1.is_finite()) {
            return Err(Error::InvalidParams("intensities must be finite".into()));
        }
        if !(0.0 <= self.lambda0 && self.lambda0 < self.lambda1) {
            return Err(Error::InvalidParams(format!(
                "need 0 <= lambda0 < lambda1, got lambda0 = {}, lambda1 = {}",
                self.lambda0, self.lambda1
            )));
        }
        Ok(())
    }

    /// Entropy of the input vector X in bits, 4·h(p).
    pub fn input_entropy_bits(&self) -> f64 {
        let h = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
        4.0 * (h(self.p) + h(1.0 - self.p))
    }
}

/// One of the 16 realizations of X. Bit `k` set means target `k` is at
/// the high level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hypothesis(u8);

impl Hypothesis {
    pub fn new(index: usize) -> Option<Self> {
        (index < N_HYPOTHESES).then_some(Self(index as u8))
    }

    pub fn from_bits(bits: [bool; N_TARGETS]) -> Self {
        let index = bits.iter().enumerate().fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
        Self(index)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn bits(self) -> [bool; N_TARGETS] {
        std::array::from_fn(|k| self.0 >> k & 1 == 1)
    }

    /// Number of targets at the high level.
    pub fn ones(self) -> u32 {
        self.0.count_ones()
    }
}

/// All 16 hypotheses in index order.
pub fn enumerate_hypotheses() -> Vec<Hypothesis> {
    (0..N_HYPOTHESES as u8).map(Hypothesis).collect()
}

pub fn hypothesis_prior(h: Hypothesis, params: &ModelParams) -> f64 {
    let k = h.ones() as i32;
    params.p.powi(k) * (1.0 - params.p).powi(N_TARGETS as i32 - k)
}

/// Priors of all hypotheses, indexed by hypothesis index.
pub fn priors(params: &ModelParams) -> [f64; N_HYPOTHESES] {
    std::array::from_fn(|i| hypothesis_prior(Hypothesis(i as u8), params))
}

pub fn input_levels(h: Hypothesis, params: &ModelParams) -> [f64; N_TARGETS] {
    h.bits().map(|b| if b { params.lambda1 } else { params.lambda0 })
}

/// Binary 15×4 matrix whose row `i` marks the targets summed by
/// observation `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IncidenceMatrix {
    rows: [[u8; N_TARGETS]; N_ROWS],
}

/// Singlets, then pairs in lexicographic order, then triplets, then all four.
const SUBSETS: [&[usize]; N_ROWS] = [
    &[0],
    &[1],
    &[2],
    &[3],
    &[0, 1],
    &[0, 2],
    &[0, 3],
    &[1, 2],
    &[1, 3],
    &[2, 3],
    &[0, 1, 2],
    &[0, 1, 3],
    &[0, 2, 3],
    &[1, 2, 3],
    &[0, 1, 2, 3],
];

impl IncidenceMatrix {
    pub fn standard() -> Self {
        let mut rows = [[0u8; N_TARGETS]; N_ROWS];
        for (row, subset) in rows.iter_mut().zip(SUBSETS) {
            for &k in subset {
                row[k] = 1;
            }
        }
        Self { rows }
    }

    pub fn row(&self, i: usize) -> [u8; N_TARGETS] {
        self.rows[i]
    }

    pub fn rows(&self) -> &[[u8; N_TARGETS]; N_ROWS] {
        &self.rows
    }

    /// `row_i · x`, the summed intensity seen by observation `i`.
    pub fn row_dot(&self, i: usize, x: &[f64; N_TARGETS]) -> f64 {
        self.rows[i].iter().zip(x).map(|(&a, &v)| a as f64 * v).sum()
    }
}

impl Default for IncidenceMatrix {
    fn default() -> Self {
        Self::standard()
    }
}

/// Row ranges of each structural group.
pub mod groups {
    use std::ops::Range;
    pub const SINGLETS: Range<usize> = 0..4;
    pub const PAIRS: Range<usize> = 4..10;
    pub const TRIPLETS: Range<usize> = 10..14;
    pub const QUADRUPLET: usize = 14;
}

/// Dwell times T1…T15 in observation-row order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAllocation {
    t: [f64; N_ROWS],
}

impl TimeAllocation {
    pub fn new(t: [f64; N_ROWS]) -> Result<Self> {
        if let Some((i, &v)) = t.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidAllocation(format!("t{} = {v} must be finite and nonnegative", i + 1)));
        }
        Ok(Self { t })
    }

    pub fn zero() -> Self {
        Self { t: [0.0; N_ROWS] }
    }

    pub fn times(&self) -> &[f64; N_ROWS] {
        &self.t
    }

    pub fn total(&self) -> f64 {
        self.t.iter().sum()
    }

    /// Indices of rows with positive dwell time.
    pub fn active_rows(&self) -> Vec<usize> {
        (0..N_ROWS).filter(|&i| self.t[i] > 0.0).collect()
    }
}

impl std::ops::Index<usize> for TimeAllocation {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.t[i]
    }
}

/// Poisson rates `t_i · (row_i · x)`.
pub fn poisson_rate_vector(alloc: &TimeAllocation, h: Hypothesis, params: &ModelParams) -> [f64; N_ROWS] {
    let a = IncidenceMatrix::standard();
    let x = input_levels(h, params);
    std::array::from_fn(|i| alloc[i] * a.row_dot(i, &x))
}

/// Gaussian means `sqrt(t_i) · (row_i · x)`; the noise covariance is the identity.
pub fn gaussian_mean_vector(alloc: &TimeAllocation, h: Hypothesis, params: &ModelParams) -> [f64; N_ROWS] {
    let a = IncidenceMatrix::standard();
    let x = input_levels(h, params);
    std::array::from_fn(|i| alloc[i].sqrt() * a.row_dot(i, &x))
}
