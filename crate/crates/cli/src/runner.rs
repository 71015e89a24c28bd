//! Executes a validated run and writes the results table and manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use quadsense::entropy::EntropyOptions;
use quadsense::optimize::{search, SearchConfig, SearchResult};
use quadsense::schemes::{
    allocation_for, cell_seed, evaluate_metric_with, sweep_alpha_with, sweep_time_with, CellFailure,
};
use quadsense::{ModelParams, Scheme, SchemeTag, SweepOutput, SweepRow};

use crate::config::{Job, Mode, RunConfig, ValidatedRun};
use crate::emit::emit;
use crate::CliError;

/// Version string recorded in manifests.
pub fn version() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("QUADSENSE_GIT_DESCRIBE"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchRecord {
    pub p: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub seed: u64,
    pub result: Option<SearchResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Execution {
    pub output: SweepOutput,
    pub searches: Vec<SearchRecord>,
}

/// Runs every cell of `run` on the current rayon pool.
pub fn execute(run: &ValidatedRun) -> Execution {
    let opts = EntropyOptions { gaussian_rows: run.gaussian_rows };
    let mut exec = Execution::default();
    for params in &run.params {
        match &run.job {
            Job::SweepTime { schemes, t_grid } => exec.output.extend(sweep_time_with(
                run.channel,
                schemes,
                t_grid,
                params,
                &run.metrics,
                run.samples,
                run.seed,
                &opts,
            )),
            Job::SweepAlpha { configs, total, alpha_grid } => exec.output.extend(sweep_alpha_with(
                run.channel,
                configs,
                *total,
                alpha_grid,
                params,
                &run.metrics,
                run.samples,
                run.seed,
                &opts,
            )),
            Job::Estimate { scheme, total } => {
                for &metric in &run.metrics {
                    let seed = cell_seed(run.seed, run.channel, scheme.tag(), metric);
                    let est = allocation_for(scheme, *total).and_then(|alloc| {
                        evaluate_metric_with(run.channel, &alloc, params, metric, run.samples, seed, &opts)
                    });
                    push_cell(&mut exec.output, run, params, scheme, *total, metric, seed, est);
                }
            }
            Job::Search { metric, total, grid_resolution, refine_iters } => {
                let seed = cell_seed(run.seed, run.channel, SchemeTag::ConjectureCustom, *metric);
                let cfg = SearchConfig {
                    metric: *metric,
                    channel: run.channel,
                    total: *total,
                    grid_resolution: *grid_resolution,
                    refine_iters: *refine_iters,
                    n_samples: run.samples,
                    seed,
                    gaussian_rows: run.gaussian_rows,
                };
                let record = |result, error| SearchRecord {
                    p: params.p,
                    lambda0: params.lambda0,
                    lambda1: params.lambda1,
                    seed,
                    result,
                    error,
                };
                match search(&cfg, params) {
                    Ok(res) => {
                        for entry in &res.trace {
                            let scheme = Scheme::Conjecture { abcd: entry.abcd };
                            let est = match (&entry.estimate, &entry.error) {
                                (Some(e), _) => Ok(*e),
                                (None, err) => Err(err.clone().unwrap_or_default()),
                            };
                            push_cell(&mut exec.output, run, params, &scheme, *total, *metric, seed, est);
                        }
                        exec.searches.push(record(Some(res), None));
                    }
                    Err(e) => {
                        exec.output.failures.push(failure(
                            run,
                            params,
                            &Scheme::Conjecture { abcd: [0.0; 4] },
                            *total,
                            *metric,
                            e.to_string(),
                        ));
                        exec.searches.push(record(None, Some(e.to_string())));
                    }
                }
            }
        }
    }
    exec
}

fn failure(
    run: &ValidatedRun,
    params: &ModelParams,
    scheme: &Scheme,
    t: f64,
    metric: quadsense::Metric,
    error: String,
) -> CellFailure {
    CellFailure {
        channel: run.channel,
        scheme: scheme.label(),
        t,
        alpha: scheme.alpha(),
        p: params.p,
        lambda0: params.lambda0,
        lambda1: params.lambda1,
        metric,
        error,
    }
}

#[allow(clippy::too_many_arguments)]
fn push_cell<E: ToString>(
    out: &mut SweepOutput,
    run: &ValidatedRun,
    params: &ModelParams,
    scheme: &Scheme,
    t: f64,
    metric: quadsense::Metric,
    seed: u64,
    est: Result<quadsense::Estimate, E>,
) {
    match est {
        Ok(e) => out.rows.push(SweepRow {
            channel: run.channel,
            scheme: scheme.label(),
            t,
            alpha: scheme.alpha(),
            p: params.p,
            lambda0: params.lambda0,
            lambda1: params.lambda1,
            metric,
            value: e.value,
            stderr: e.stderr,
            n_samples: e.n_samples,
            seed,
        }),
        Err(err) => out.failures.push(failure(run, params, scheme, t, metric, err.to_string())),
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: String,
    mode: Mode,
    config: &'a RunConfig,
    seed: u64,
    samples: u64,
    workers: usize,
    wall_time_seconds: f64,
    rows: usize,
    failures: &'a [CellFailure],
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    searches: &'a [SearchRecord],
}

/// What [`run`] produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub table_path: PathBuf,
    pub manifest_path: PathBuf,
    pub execution: Execution,
}

impl RunOutcome {
    /// 0 when every cell succeeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.execution.output.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

/// `<out>.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, bytes).map_err(io)
}

/// Validates `config` for `mode`, runs it on a pool of the configured size,
/// and writes the table plus manifest.
pub fn run(config: &RunConfig, mode: Mode) -> Result<RunOutcome, CliError> {
    let run = config.validate(mode)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = run.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;

    let start = Instant::now();
    let execution = pool.install(|| execute(&run));
    let wall = start.elapsed().as_secs_f64();

    let table = emit(&execution.output.rows, run.format);
    write(&run.out, &table)?;

    let manifest = Manifest {
        version: version(),
        mode,
        config,
        seed: run.seed,
        samples: run.samples,
        workers: pool.current_num_threads(),
        wall_time_seconds: wall,
        rows: execution.output.rows.len(),
        failures: &execution.output.failures,
        searches: &execution.searches,
    };
    let manifest_path = manifest_path(&run.out);
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write(&manifest_path, &json)?;

    Ok(RunOutcome { table_path: run.out, manifest_path, execution })
}
