//! Poisson variate generation and log-pmf.
//!
//! Sequential-search inversion below rate 30, Hörmann's PTRS transformed
//! rejection above.

use statrs::function::gamma::ln_gamma;

use super::rng::SeededRng;

const INVERSION_LIMIT: f64 = 30.0;

/// `ln Pois(k; rate)` with the convention `Pois(0; 0) = 1`.
#[inline]
pub fn ln_pmf(k: f64, rate: f64) -> f64 {
    if rate == 0.0 {
        if k == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        k * rate.ln() - rate - ln_gamma(k + 1.0)
    }
}

/// Precomputed sampler for a fixed rate.
#[derive(Debug, Clone, Copy)]
pub enum PoissonSampler {
    Zero,
    Inversion { exp_neg: f64, rate: f64 },
    Ptrs(Ptrs),
}

#[derive(Debug, Clone, Copy)]
pub struct Ptrs {
    rate: f64,
    ln_rate: f64,
    a: f64,
    b: f64,
    inv_alpha: f64,
    v_r: f64,
}

impl PoissonSampler {
    pub fn new(rate: f64) -> Self {
        debug_assert!(rate >= 0.0 && rate.is_finite());
        if rate == 0.0 {
            Self::Zero
        } else if rate < INVERSION_LIMIT {
            Self::Inversion { exp_neg: (-rate).exp(), rate }
        } else {
            let slam = rate.sqrt();
            let b = 0.931 + 2.53 * slam;
            Self::Ptrs(Ptrs {
                rate,
                ln_rate: rate.ln(),
                a: -0.059 + 0.02483 * b,
                b,
                inv_alpha: 1.1239 + 1.1328 / (b - 3.4),
                v_r: 0.9277 - 3.6224 / (b - 2.0),
            })
        }
    }

    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Inversion { exp_neg, rate } => {
                let u = rng.uniform();
                let mut k = 0.0;
                let mut pk = exp_neg;
                let mut cdf = pk;
                while u > cdf {
                    k += 1.0;
                    pk *= rate / k;
                    if pk == 0.0 {
                        // cdf saturated below u through rounding
                        break;
                    }
                    cdf += pk;
                }
                k
            }
            Self::Ptrs(ref s) => s.sample(rng),
        }
    }
}

impl Ptrs {
    fn sample(&self, rng: &mut SeededRng) -> f64 {
        loop {
            let u = rng.uniform() - 0.5;
            let v = rng.uniform();
            let us = 0.5 - u.abs();
            let k = ((2.0 * self.a / us + self.b) * u + self.rate + 0.43).floor();
            if us >= 0.07 && v <= self.v_r {
                return k;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + self.inv_alpha.ln() - (self.a / (us * us) + self.b).ln();
            let rhs = -self.rate + k * self.ln_rate - ln_gamma(k + 1.0);
            if lhs <= rhs {
                return k;
            }
        }
    }
}
