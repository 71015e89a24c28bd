//! Named time allocations, hybrid configurations and metric sweeps over the
//! time budget `T` and the quadruplet share `α`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{derive_seed, ChannelKind, SeededRng};
use crate::detection::estimate_pd;
use crate::entropy::{mutual_information_with, EntropyOptions, Estimate};
use crate::error::{Error, Result};
use crate::model::{groups, ModelParams, TimeAllocation, N_ROWS};

/// Tolerance on `4a + 6b + 4c + d = T` and on budget conservation.
pub const BUDGET_TOL: f64 = 1e-9;

/// The scheme families, without their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeTag {
    Singlets,
    Pairs,
    Triplets,
    Quadruplet,
    HybridConfig1,
    HybridConfig2,
    HybridConfig3,
    ConjectureCustom,
}

impl SchemeTag {
    pub const PURE: [SchemeTag; 4] =
        [SchemeTag::Singlets, SchemeTag::Pairs, SchemeTag::Triplets, SchemeTag::Quadruplet];
    pub const HYBRID: [SchemeTag; 3] = [SchemeTag::HybridConfig1, SchemeTag::HybridConfig2, SchemeTag::HybridConfig3];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeTag::Singlets => "singlets",
            SchemeTag::Pairs => "pairs",
            SchemeTag::Triplets => "triplets",
            SchemeTag::Quadruplet => "quadruplet",
            SchemeTag::HybridConfig1 => "config1",
            SchemeTag::HybridConfig2 => "config2",
            SchemeTag::HybridConfig3 => "config3",
            SchemeTag::ConjectureCustom => "conjecture",
        }
    }

    pub fn is_hybrid(self) -> bool {
        Self::HYBRID.contains(&self)
    }

    /// Pure scheme sharing the non-quadruplet rows of a hybrid.
    pub fn hybrid_base(self) -> Option<SchemeTag> {
        match self {
            SchemeTag::HybridConfig1 => Some(SchemeTag::Singlets),
            SchemeTag::HybridConfig2 => Some(SchemeTag::Pairs),
            SchemeTag::HybridConfig3 => Some(SchemeTag::Triplets),
            _ => None,
        }
    }

    fn seed_id(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeTag {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = match s.to_ascii_lowercase().as_str() {
            "singlets" => SchemeTag::Singlets,
            "pairs" => SchemeTag::Pairs,
            "triplets" => SchemeTag::Triplets,
            "quadruplet" => SchemeTag::Quadruplet,
            "config1" | "hybrid_config1" => SchemeTag::HybridConfig1,
            "config2" | "hybrid_config2" => SchemeTag::HybridConfig2,
            "config3" | "hybrid_config3" => SchemeTag::HybridConfig3,
            "conjecture" | "conjecture_custom" => SchemeTag::ConjectureCustom,
            other => return Err(format!("unknown scheme `{other}`")),
        };
        Ok(t)
    }
}

/// A sensing scheme with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    Singlets,
    Pairs,
    Triplets,
    Quadruplet,
    /// Base scheme gets `T - α`, the quadruplet row gets `α`.
    Hybrid {
        tag: SchemeTag,
        alpha: f64,
    },
    /// Group-constant times `(a, b, c, d)` for singlets, pairs, triplets and
    /// the quadruplet.
    Conjecture {
        abcd: [f64; 4],
    },
}

impl Scheme {
    pub fn pure(tag: SchemeTag) -> Option<Scheme> {
        match tag {
            SchemeTag::Singlets => Some(Scheme::Singlets),
            SchemeTag::Pairs => Some(Scheme::Pairs),
            SchemeTag::Triplets => Some(Scheme::Triplets),
            SchemeTag::Quadruplet => Some(Scheme::Quadruplet),
            _ => None,
        }
    }

    pub fn hybrid(tag: SchemeTag, alpha: f64) -> Option<Scheme> {
        tag.is_hybrid().then_some(Scheme::Hybrid { tag, alpha })
    }

    pub fn tag(&self) -> SchemeTag {
        match *self {
            Scheme::Singlets => SchemeTag::Singlets,
            Scheme::Pairs => SchemeTag::Pairs,
            Scheme::Triplets => SchemeTag::Triplets,
            Scheme::Quadruplet => SchemeTag::Quadruplet,
            Scheme::Hybrid { tag, .. } => tag,
            Scheme::Conjecture { .. } => SchemeTag::ConjectureCustom,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Scheme::Hybrid { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Table label. Conjecture points carry their coordinates,
    /// `conjecture(a;b;c;d)`; hybrids keep α in its own column.
    pub fn label(&self) -> String {
        match self {
            Scheme::Conjecture { abcd: [a, b, c, d] } => format!("conjecture({a};{b};{c};{d})"),
            other => other.tag().as_str().to_string(),
        }
    }
}

fn fill(t: &mut [f64; N_ROWS], range: std::ops::Range<usize>, value: f64) {
    t[range].fill(value);
}

fn group_allocation(abcd: [f64; 4]) -> Result<TimeAllocation> {
    let [a, b, c, d] = abcd;
    let mut t = [0.0; N_ROWS];
    fill(&mut t, groups::SINGLETS, a);
    fill(&mut t, groups::PAIRS, b);
    fill(&mut t, groups::TRIPLETS, c);
    t[groups::QUADRUPLET] = d;
    TimeAllocation::new(t)
}

/// Total time spent by a group-constant allocation.
pub fn conjecture_budget(abcd: [f64; 4]) -> f64 {
    4.0 * abcd[0] + 6.0 * abcd[1] + 4.0 * abcd[2] + abcd[3]
}

/// Time allocation of `scheme` under budget `total`.
pub fn allocation_for(scheme: &Scheme, total: f64) -> Result<TimeAllocation> {
    if !(total.is_finite() && total >= 0.0) {
        return Err(Error::InvalidAllocation(format!("T = {total} must be finite and nonnegative")));
    }
    let abcd = match *scheme {
        Scheme::Singlets => [total / 4.0, 0.0, 0.0, 0.0],
        Scheme::Pairs => [0.0, total / 6.0, 0.0, 0.0],
        Scheme::Triplets => [0.0, 0.0, total / 4.0, 0.0],
        Scheme::Quadruplet => [0.0, 0.0, 0.0, total],
        Scheme::Hybrid { tag, alpha } => {
            if !(0.0..=total).contains(&alpha) {
                return Err(Error::AlphaOutOfRange { alpha, total });
            }
            let rest = total - alpha;
            match tag {
                SchemeTag::HybridConfig1 => [rest / 4.0, 0.0, 0.0, alpha],
                SchemeTag::HybridConfig2 => [0.0, rest / 6.0, 0.0, alpha],
                SchemeTag::HybridConfig3 => [0.0, 0.0, rest / 4.0, alpha],
                other => return Err(Error::InvalidAllocation(format!("{other} is not a hybrid configuration"))),
            }
        }
        Scheme::Conjecture { abcd } => {
            if abcd.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidAllocation(format!("abcd = {abcd:?} must be nonnegative")));
            }
            let actual = conjecture_budget(abcd);
            if (actual - total).abs() > BUDGET_TOL {
                return Err(Error::BudgetMismatch { actual, expected: total });
            }
            abcd
        }
    };
    group_allocation(abcd)
}

/// As [`allocation_for`], but conjecture coordinates are first rescaled
/// onto the budget.
pub fn allocation_for_rescaled(scheme: &Scheme, total: f64) -> Result<TimeAllocation> {
    match *scheme {
        Scheme::Conjecture { abcd } => {
            let abcd = crate::optimize::project_to_budget(abcd, total)?;
            allocation_for(&Scheme::Conjecture { abcd }, total)
        }
        _ => allocation_for(scheme, total),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "mi_bits")]
    MiBits,
    #[serde(rename = "pd")]
    Pd,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::MiBits => "mi_bits",
            Metric::Pd => "pd",
        }
    }

    fn seed_id(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mi_bits" | "mi" => Ok(Metric::MiBits),
            "pd" => Ok(Metric::Pd),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// Evaluates one metric for one allocation with a fresh generator.
pub fn evaluate_metric(
    channel: ChannelKind,
    alloc: &TimeAllocation,
    params: &ModelParams,
    metric: Metric,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    evaluate_metric_with(channel, alloc, params, metric, n_samples, seed, &EntropyOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate_metric_with(
    channel: ChannelKind,
    alloc: &TimeAllocation,
    params: &ModelParams,
    metric: Metric,
    n_samples: u64,
    seed: u64,
    opts: &EntropyOptions,
) -> Result<Estimate> {
    let rng = SeededRng::new(seed);
    let est = match metric {
        Metric::MiBits => mutual_information_with(channel, alloc, params, n_samples, &rng, opts)?,
        Metric::Pd => estimate_pd(channel, alloc, params, n_samples, &rng)?,
    };
    if !(est.value.is_finite() && est.stderr.is_finite()) {
        return Err(Error::NonFinite(format!("{metric} = {} ± {}", est.value, est.stderr)));
    }
    Ok(est)
}

/// Seed of a sweep cell. Deliberately independent of `T` and `α`: points
/// along one curve share random streams, which keeps the curve smooth.
pub fn cell_seed(master: u64, channel: ChannelKind, tag: SchemeTag, metric: Metric) -> u64 {
    let ch = match channel {
        ChannelKind::Poisson => 0,
        ChannelKind::Gaussian => 1,
    };
    derive_seed(master, &[ch, tag.seed_id(), metric.seed_id()])
}

/// One grid-cell result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub channel: ChannelKind,
    pub scheme: String,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub p: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub metric: Metric,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// A cell whose estimator failed; the sweep continues past it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub channel: ChannelKind,
    pub scheme: String,
    #[serde(rename = "T")]
    pub t: f64,
    pub alpha: Option<f64>,
    pub p: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub metric: Metric,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<CellFailure>,
}

impl SweepOutput {
    pub fn extend(&mut self, other: SweepOutput) {
        self.rows.extend(other.rows);
        self.failures.extend(other.failures);
    }

    pub fn find(&self, scheme: &str, t: f64, alpha: Option<f64>, metric: Metric) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.t == t && r.alpha == alpha && r.metric == metric)
    }
}

struct Cell {
    scheme: Scheme,
    total: f64,
    metric: Metric,
}

fn run_cells(
    channel: ChannelKind,
    cells: Vec<Cell>,
    params: &ModelParams,
    n_samples: u64,
    seed: u64,
    opts: &EntropyOptions,
) -> SweepOutput {
    let results: Vec<(Cell, u64, Result<Estimate>)> = cells
        .into_par_iter()
        .map(|cell| {
            let s = cell_seed(seed, channel, cell.scheme.tag(), cell.metric);
            let res = allocation_for_rescaled(&cell.scheme, cell.total)
                .and_then(|alloc| evaluate_metric_with(channel, &alloc, params, cell.metric, n_samples, s, opts));
            (cell, s, res)
        })
        .collect();

    let mut out = SweepOutput::default();
    for (cell, s, res) in results {
        match res {
            Ok(est) => out.rows.push(SweepRow {
                channel,
                scheme: cell.scheme.label(),
                t: cell.total,
                alpha: cell.scheme.alpha(),
                p: params.p,
                lambda0: params.lambda0,
                lambda1: params.lambda1,
                metric: cell.metric,
                value: est.value,
                stderr: est.stderr,
                n_samples: est.n_samples,
                seed: s,
            }),
            Err(e) => out.failures.push(CellFailure {
                channel,
                scheme: cell.scheme.label(),
                t: cell.total,
                alpha: cell.scheme.alpha(),
                p: params.p,
                lambda0: params.lambda0,
                lambda1: params.lambda1,
                metric: cell.metric,
                error: e.to_string(),
            }),
        }
    }
    out
}

/// One row per (scheme, T, metric), in that nesting order.
pub fn sweep_time(
    channel: ChannelKind,
    schemes: &[Scheme],
    t_grid: &[f64],
    params: &ModelParams,
    metrics: &[Metric],
    n_samples: u64,
    seed: u64,
) -> SweepOutput {
    let opts = EntropyOptions::default();
    sweep_time_with(channel, schemes, t_grid, params, metrics, n_samples, seed, &opts)
}

#[allow(clippy::too_many_arguments)]
pub fn sweep_time_with(
    channel: ChannelKind,
    schemes: &[Scheme],
    t_grid: &[f64],
    params: &ModelParams,
    metrics: &[Metric],
    n_samples: u64,
    seed: u64,
    opts: &EntropyOptions,
) -> SweepOutput {
    let mut cells = Vec::with_capacity(schemes.len() * t_grid.len() * metrics.len());
    for scheme in schemes {
        for &total in t_grid {
            for &metric in metrics {
                cells.push(Cell { scheme: *scheme, total, metric });
            }
        }
    }
    run_cells(channel, cells, params, n_samples, seed, opts)
}

/// One row per (config, α, metric) at fixed budget `total`.
#[allow(clippy::too_many_arguments)]
pub fn sweep_alpha(
    channel: ChannelKind,
    configs: &[SchemeTag],
    total: f64,
    alpha_grid: &[f64],
    params: &ModelParams,
    metrics: &[Metric],
    n_samples: u64,
    seed: u64,
) -> SweepOutput {
    let opts = EntropyOptions::default();
    sweep_alpha_with(channel, configs, total, alpha_grid, params, metrics, n_samples, seed, &opts)
}

#[allow(clippy::too_many_arguments)]
pub fn sweep_alpha_with(
    channel: ChannelKind,
    configs: &[SchemeTag],
    total: f64,
    alpha_grid: &[f64],
    params: &ModelParams,
    metrics: &[Metric],
    n_samples: u64,
    seed: u64,
    opts: &EntropyOptions,
) -> SweepOutput {
    let mut cells = Vec::new();
    for &tag in configs {
        for &alpha in alpha_grid {
            for &metric in metrics {
                cells.push(Cell { scheme: Scheme::Hybrid { tag, alpha }, total, metric });
            }
        }
    }
    run_cells(channel, cells, params, n_samples, seed, opts)
}

/// Outcome of an empirical concavity test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    /// Largest second difference, or 0 if none is positive.
    pub max_positive_second_difference: f64,
    /// Interior indices whose second difference exceeds its tolerance.
    pub violations: Vec<usize>,
    pub pass: bool,
}

/// Checks `v[i-1] - 2 v[i] + v[i+1] <= 3 · sqrt(se[i-1]² + 4 se[i]² + se[i+1]²)`
/// at every interior point of a uniformly spaced series `(x, value, stderr)`.
pub fn concavity_check(series: &[(f64, f64, f64)]) -> Result<ConcavityReport> {
    if series.len() < 3 {
        return Err(Error::TooFewPoints(series.len()));
    }
    let h = series[1].0 - series[0].0;
    let span = (series[series.len() - 1].0 - series[0].0).abs().max(f64::MIN_POSITIVE);
    let uniform = series.windows(2).all(|w| {
        let step = w[1].0 - w[0].0;
        step > 0.0 && (step - h).abs() <= 1e-9 * span
    });
    if !uniform {
        return Err(Error::NonUniformGrid);
    }
    let scale = series.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    let roundoff = 1e-12 * scale.max(1.0);
    let mut max_pos = 0.0f64;
    let mut violations = Vec::new();
    for i in 1..series.len() - 1 {
        let (_, a, sa) = series[i - 1];
        let (_, b, sb) = series[i];
        let (_, c, sc) = series[i + 1];
        let d2 = a - 2.0 * b + c;
        let tol = 3.0 * (sa * sa + 4.0 * sb * sb + sc * sc).sqrt();
        max_pos = max_pos.max(d2);
        if d2 > tol + roundoff {
            violations.push(i);
        }
    }
    Ok(ConcavityReport { max_positive_second_difference: max_pos, pass: violations.is_empty(), violations })
}
