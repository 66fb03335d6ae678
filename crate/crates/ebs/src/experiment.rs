//! Executes a scenario plan and writes its outputs.

use std::path::{Path, PathBuf};

use ebs_core::sim::{run, RunResult};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::export::{csv_bytes, write_summary, write_trace, SummaryRow};
use crate::scenario::{fmt_num, PlannedRun, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Replaces `run.seed`.
    pub seed: Option<u64>,
    pub trace: bool,
    /// Worker threads; 0 picks one per core.
    pub jobs: usize,
    /// Expand the `[sweep]` section instead of running the base values.
    pub sweep: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out: PathBuf::from("out"),
            seed: None,
            trace: false,
            jobs: 0,
            sweep: false,
        }
    }
}

#[derive(Debug)]
pub struct Completed {
    pub run: PlannedRun,
    pub result: RunResult,
}

#[derive(Debug)]
pub struct Report {
    pub runs: Vec<Completed>,
    pub summary: Vec<SummaryRow>,
    /// Every file written, in write order.
    pub files: Vec<PathBuf>,
}

/// Runs every planned simulation. Runs are independent and may execute
/// concurrently; results come back in plan order.
pub fn execute(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Vec<Completed>> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let plan = cfg.plan(opts.sweep)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Plan(format!("thread pool: {e}")))?;
    let results: Vec<Result<Completed>> = pool.install(|| {
        plan.into_par_iter()
            .map(|planned| {
                let mut scenario = planned.config.to_scenario(planned.kind, planned.seed)?;
                scenario.trace = opts.trace;
                let result = run(&scenario)?;
                Ok(Completed { run: planned, result })
            })
            .collect()
    });
    results.into_iter().collect()
}

/// Seed-averaged steady-state figures per sweep point and protocol, in plan
/// order.
pub fn summarize(cfg: &ScenarioConfig, runs: &[Completed]) -> Vec<SummaryRow> {
    let axis = cfg.sweep.as_ref().map(|s| s.axis);
    let mut rows: Vec<(Option<f64>, SummaryRow)> = Vec::new();
    for c in runs {
        let from = c.run.config.steady_from();
        let (duty, thr) = c.result.series.steady_state(from).unwrap_or((f64::NAN, f64::NAN));
        let last = c.result.series.rows.last();
        let steady = last.map_or(f64::NAN, |r| r.steady_pct);
        let flaps = last.map_or(0.0, |r| r.flaps as f64);
        let slot = rows
            .iter_mut()
            .find(|(p, r)| *p == c.run.point && r.protocol == c.run.kind.as_str());
        match slot {
            Some((_, r)) => {
                r.seeds += 1;
                r.duty_pct += duty;
                r.thr_pct += thr;
                r.steady_pct += steady;
                r.flaps += flaps;
            }
            None => rows.push((
                c.run.point,
                SummaryRow {
                    sweep: match (axis, c.run.point) {
                        (Some(a), Some(_)) => a.name().to_string(),
                        _ => String::new(),
                    },
                    value: c.run.point.map(fmt_num).unwrap_or_default(),
                    protocol: c.run.kind.as_str(),
                    seeds: 1,
                    duty_pct: duty,
                    thr_pct: thr,
                    steady_pct: steady,
                    flaps,
                },
            )),
        }
    }
    rows.into_iter()
        .map(|(_, mut r)| {
            let n = r.seeds as f64;
            r.duty_pct /= n;
            r.thr_pct /= n;
            r.steady_pct /= n;
            r.flaps /= n;
            r
        })
        .collect()
}

/// Runs the plan and writes, under `opts.out`:
///
/// - `resolved-config.txt`, the configuration with every default,
/// - one metrics CSV per run, named `<protocol>[-<axis>-<value>]-seed<N>.csv`,
/// - `<stem>.trace.ndjson` per run with `--trace`,
/// - `summary.csv`.
///
/// Nothing is written if a run fails; if a write fails, the files already
/// written are removed.
pub fn run_experiment(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Report> {
    let runs = execute(cfg, opts)?;
    let summary = summarize(cfg, &runs);
    let mut written = Vec::new();
    match write_outputs(cfg, opts, &runs, &summary, &mut written) {
        Ok(()) => Ok(Report {
            runs,
            summary,
            files: written,
        }),
        Err(e) => {
            for f in &written {
                let _ = std::fs::remove_file(f);
            }
            Err(e)
        }
    }
}

fn write_outputs(
    cfg: &ScenarioConfig,
    opts: &RunOptions,
    runs: &[Completed],
    summary: &[SummaryRow],
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    std::fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    let mut resolved = cfg.clone();
    if let Some(seed) = opts.seed {
        resolved.seed = seed;
    }
    put(
        written,
        &opts.out.join("resolved-config.txt"),
        resolved.resolved().as_bytes(),
    )?;
    let axis = if opts.sweep {
        cfg.sweep.as_ref().map(|s| s.axis)
    } else {
        None
    };
    for c in runs {
        let stem = c.run.stem(axis);
        put(
            written,
            &opts.out.join(format!("{stem}.csv")),
            &csv_bytes(&c.result.series),
        )?;
        if opts.trace {
            let mut buf = Vec::new();
            write_trace(&c.result.trace, &mut buf).expect("writing to memory");
            put(written, &opts.out.join(format!("{stem}.trace.ndjson")), &buf)?;
        }
    }
    let mut buf = Vec::new();
    write_summary(summary, &mut buf)?;
    put(written, &opts.out.join("summary.csv"), &buf)
}

fn put(written: &mut Vec<PathBuf>, path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    written.push(path.to_path_buf());
    Ok(())
}
