//! Run configuration files (TOML).
//!
//! ```toml
//! mode = "sweep-time"            # optional; must match the subcommand
//! channel = "poisson"
//! schemes = ["singlets", "pairs", "triplets", "quadruplet"]
//! t_grid = [0.0, 0.5, 1.0]
//! p = [0.1, 0.5, 0.9]            # scalar or list; likewise lambda0/lambda1
//! lambda0 = 2.0
//! lambda1 = 20.0
//! metrics = ["mi_bits", "pd"]
//! samples = 100000
//! seed = 1
//! workers = 4
//! out = "results/poisson_time.csv"
//! format = "csv"
//! gaussian_rows = "active"       # or "all"
//! ```
//!
//! `sweep-alpha` reads `configs`, `T` and `alpha_grid`. `search` reads `T`
//! and a `[search]` table. `estimate` reads `T` and an `[estimate]` table
//! naming the scheme (plus `alpha` or `abcd` where needed).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use quadsense::channel::RowSelection;
use quadsense::entropy::DEFAULT_SAMPLES;
use quadsense::{ChannelKind, Metric, ModelParams, Scheme, SchemeTag};

use crate::emit::Format;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SweepTime,
    SweepAlpha,
    Search,
    Estimate,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SweepTime => "sweep-time",
            Mode::SweepAlpha => "sweep-alpha",
            Mode::Search => "search",
            Mode::Estimate => "estimate",
        })
    }
}

/// A scalar or a list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default = "default_metric")]
    pub metric: String,
    #[serde(default = "default_resolution")]
    pub grid_resolution: usize,
    #[serde(default)]
    pub refine_iters: usize,
}

fn default_metric() -> String {
    "mi_bits".into()
}

fn default_resolution() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub scheme: String,
    pub alpha: Option<f64>,
    pub abcd: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub channel: Option<String>,
    pub schemes: Option<Vec<String>>,
    pub t_grid: Option<Vec<f64>>,
    pub configs: Option<Vec<String>>,
    #[serde(rename = "T")]
    pub total: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    pub p: Option<OneOrMany>,
    pub lambda0: Option<OneOrMany>,
    pub lambda1: Option<OneOrMany>,
    pub metrics: Option<Vec<String>>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub gaussian_rows: Option<RowSelection>,
    pub search: Option<SearchSection>,
    pub estimate: Option<EstimateSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }
}

/// What a validated run does.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    SweepTime { schemes: Vec<Scheme>, t_grid: Vec<f64> },
    SweepAlpha { configs: Vec<SchemeTag>, total: f64, alpha_grid: Vec<f64> },
    Search { metric: Metric, total: f64, grid_resolution: usize, refine_iters: usize },
    Estimate { scheme: Scheme, total: f64 },
}

/// A fully checked run with all defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedRun {
    pub mode: Mode,
    pub channel: ChannelKind,
    pub job: Job,
    pub params: Vec<ModelParams>,
    pub metrics: Vec<Metric>,
    pub samples: u64,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub format: Format,
    pub gaussian_rows: RowSelection,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_all<T: FromStr<Err = String>>(items: &[String]) -> Result<Vec<T>, CliError> {
    items.iter().map(|s| s.parse().map_err(usage)).collect()
}

fn nonempty<T: Clone>(v: &Option<Vec<T>>, name: &str) -> Result<Vec<T>, CliError> {
    match v {
        Some(v) if !v.is_empty() => Ok(v.clone()),
        Some(_) => Err(usage(format!("`{name}` must be nonempty"))),
        None => Err(usage(format!("`{name}` is required"))),
    }
}

fn grid(v: &Option<OneOrMany>, name: &str) -> Result<Vec<f64>, CliError> {
    let vals = v.as_ref().ok_or_else(|| usage(format!("`{name}` is required")))?.values();
    if vals.is_empty() {
        return Err(usage(format!("`{name}` must be nonempty")));
    }
    Ok(vals)
}

fn required_total(cfg: &RunConfig) -> Result<f64, CliError> {
    let t = cfg.total.ok_or_else(|| usage("`T` is required"))?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(usage(format!("T = {t} must be finite and nonnegative")));
    }
    Ok(t)
}

impl RunConfig {
    /// Checks the configuration for `mode` and fills in defaults.
    pub fn validate(&self, mode: Mode) -> Result<ValidatedRun, CliError> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(usage(format!("config declares mode `{m}` but `{mode}` was requested")));
            }
        }
        let channel: ChannelKind =
            self.channel.as_deref().ok_or_else(|| usage("`channel` is required"))?.parse().map_err(usage)?;

        let job = match mode {
            Mode::SweepTime => {
                let tags: Vec<SchemeTag> = parse_all(&nonempty(&self.schemes, "schemes")?)?;
                let schemes = tags
                    .iter()
                    .map(|&t| {
                        Scheme::pure(t).ok_or_else(|| usage(format!("`{t}` is not a pure scheme; use sweep-alpha")))
                    })
                    .collect::<Result<_, _>>()?;
                let t_grid = nonempty(&self.t_grid, "t_grid")?;
                if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    return Err(usage("t_grid values must be finite and nonnegative"));
                }
                Job::SweepTime { schemes, t_grid }
            }
            Mode::SweepAlpha => {
                let configs: Vec<SchemeTag> = parse_all(&nonempty(&self.configs, "configs")?)?;
                if let Some(t) = configs.iter().find(|t| !t.is_hybrid()) {
                    return Err(usage(format!("`{t}` is not a hybrid configuration")));
                }
                let total = required_total(self)?;
                let alpha_grid = nonempty(&self.alpha_grid, "alpha_grid")?;
                if let Some(a) = alpha_grid.iter().find(|a| !(0.0..=total).contains(*a)) {
                    return Err(usage(format!("alpha = {a} outside [0, {total}]")));
                }
                Job::SweepAlpha { configs, total, alpha_grid }
            }
            Mode::Search => {
                let s = self.search.clone().ok_or_else(|| usage("`[search]` table is required"))?;
                let metric: Metric = s.metric.parse().map_err(usage)?;
                if s.grid_resolution < 2 {
                    return Err(usage("search.grid_resolution must be at least 2"));
                }
                let total = required_total(self)?;
                if total == 0.0 {
                    return Err(usage("search needs T > 0"));
                }
                Job::Search { metric, total, grid_resolution: s.grid_resolution, refine_iters: s.refine_iters }
            }
            Mode::Estimate => {
                let e = self.estimate.clone().ok_or_else(|| usage("`[estimate]` table is required"))?;
                let tag: SchemeTag = e.scheme.parse().map_err(usage)?;
                let total = required_total(self)?;
                let scheme = if tag.is_hybrid() {
                    let alpha = e.alpha.ok_or_else(|| usage("estimate.alpha is required for hybrid schemes"))?;
                    Scheme::Hybrid { tag, alpha }
                } else if tag == SchemeTag::ConjectureCustom {
                    Scheme::Conjecture {
                        abcd: e.abcd.ok_or_else(|| usage("estimate.abcd is required for conjecture"))?,
                    }
                } else {
                    Scheme::pure(tag).expect("pure tag")
                };
                quadsense::schemes::allocation_for(&scheme, total).map_err(|e| usage(e.to_string()))?;
                Job::Estimate { scheme, total }
            }
        };

        let mut params = Vec::new();
        for p in grid(&self.p, "p")? {
            for l0 in grid(&self.lambda0, "lambda0")? {
                for l1 in grid(&self.lambda1, "lambda1")? {
                    params.push(ModelParams::new(p, l0, l1).map_err(|e| usage(e.to_string()))?);
                }
            }
        }

        let metrics = match (&job, &self.metrics) {
            (Job::Search { metric, .. }, _) => vec![*metric],
            (_, Some(m)) if !m.is_empty() => parse_all(m)?,
            (_, Some(_)) => return Err(usage("`metrics` must be nonempty")),
            (_, None) => vec![Metric::MiBits],
        };

        let samples = self.samples.unwrap_or(DEFAULT_SAMPLES);
        if samples == 0 {
            return Err(usage("`samples` must be positive"));
        }
        if self.workers == Some(0) {
            return Err(usage("`workers` must be positive"));
        }
        Ok(ValidatedRun {
            mode,
            channel,
            job,
            params,
            metrics,
            samples,
            seed: self.seed.unwrap_or(0),
            workers: self.workers,
            out: self.out.clone().ok_or_else(|| usage("`out` is required (config or --out)"))?,
            format: self.format.unwrap_or_default(),
            gaussian_rows: self.gaussian_rows.unwrap_or_default(),
        })
    }
}
