//! Fixtures shared by the benchmarks.

use quadsense::schemes::allocation_for;
use quadsense::{ModelParams, Scheme, TimeAllocation};

/// Poisson parameters of the reference experiments.
pub fn poisson_params() -> ModelParams {
    ModelParams::new(0.5, 2.0, 20.0).expect("valid")
}

/// Gaussian parameters of the reference experiments.
pub fn gaussian_params() -> ModelParams {
    ModelParams::new(0.5, 5.0, 10.0).expect("valid")
}

/// Every observation row active.
pub fn dense_allocation() -> TimeAllocation {
    TimeAllocation::new([1.0 / 15.0; 15]).expect("valid")
}

pub fn scheme_allocation(scheme: Scheme, total: f64) -> TimeAllocation {
    allocation_for(&scheme, total).expect("valid")
}
