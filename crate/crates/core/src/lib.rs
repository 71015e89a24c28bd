//! Mutual information and MAP detection for time-constrained sensing of
//! four binary-level targets over vector Poisson and Gaussian channels.
//!
//! Four targets each emit at one of two intensities. Fifteen observation
//! processes see every nonempty subset of targets; a time allocation splits
//! a budget `T` across them. The crate estimates `I(X;Y)` and the MAP
//! probability of correct detection for any allocation, sweeps the standard
//! sensing schemes, and searches group-constant allocations.

pub mod channel;
pub mod detection;
pub mod entropy;
pub mod error;
pub mod model;
pub mod optimize;
pub mod sampling;
pub mod schemes;

pub use channel::{ChannelKind, Observation, SeededRng};
pub use entropy::Estimate;
pub use error::{Error, Result};
pub use model::{Hypothesis, IncidenceMatrix, ModelParams, TimeAllocation};
pub use optimize::{SearchConfig, SearchResult};
pub use sampling::StratifiedPlan;
pub use schemes::{Metric, Scheme, SchemeTag, SweepOutput, SweepRow};
