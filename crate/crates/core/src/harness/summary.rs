use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BenchmarkKind, RunConfig};
use super::run::{run, CheckpointRecord, RunRecords, RunResult};
use crate::error::{Error, Result};
use crate::samplers::Method;

/// How per-seed values are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregate {
    /// Median over seeds with a finite value.
    Median,
    /// Mean over seeds with a finite value.
    Mean,
}

/// Which checkpoint of each run is summarized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryPoint {
    /// Lowest finite monitor value after the initial checkpoint.
    Best,
    /// Last recorded checkpoint.
    Final,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub runs: usize,
    pub finite_seeds: usize,
    /// `finite_seeds/runs`, e.g. `3/5`.
    pub finite: String,
    pub monitor_value: Option<f64>,
    pub iteration: Option<f64>,
    pub grad_evals: Option<f64>,
    pub grad_batches: Option<f64>,
    pub kernel_evals: Option<f64>,
    pub wall_seconds: Option<f64>,
    pub metrics: BTreeMap<String, Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub benchmark: String,
    pub monitor: String,
    pub aggregate: Aggregate,
    pub point: SummaryPoint,
    pub rows: Vec<SummaryRow>,
}

/// Result of a method x seed sweep on one benchmark.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub runs: Vec<RunResult>,
    pub summary: Summary,
}

impl SweepResult {
    pub fn traces(&self) -> Vec<RunRecords> {
        self.runs.iter().map(|r| r.trace.clone()).collect()
    }

    /// True if no run reached a finite checkpoint.
    pub fn all_diverged(&self) -> bool {
        !self.runs.is_empty() && self.runs.iter().all(|r| !r.has_finite_checkpoint())
    }
}

/// Median of the finite entries; `None` if there are none.
pub fn finite_median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Mean of the finite entries; `None` if there are none.
pub fn finite_mean(values: &[f64]) -> Option<f64> {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl Aggregate {
    fn apply(self, values: &[f64]) -> Option<f64> {
        match self {
            Aggregate::Median => finite_median(values),
            Aggregate::Mean => finite_mean(values),
        }
    }
}

/// Default monitor key, aggregate and summary point of a benchmark. The
/// monitor of a predictive benchmark is `val_nll` when the runs recorded it.
pub fn summary_defaults(benchmark: &str, runs: &[RunRecords]) -> Result<(String, Aggregate, SummaryPoint)> {
    let kind = BenchmarkKind::parse(benchmark)?;
    let has_val = runs
        .iter()
        .flat_map(|r| r.records.first())
        .any(|c| c.metrics.get("val_nll").is_some());
    let monitor = match (kind.is_predictive(), has_val) {
        (false, _) => "ksd",
        (true, true) => "val_nll",
        (true, false) => "nll",
    };
    let aggregate = if kind.is_predictive() { Aggregate::Mean } else { Aggregate::Median };
    let point = if kind == BenchmarkKind::Mix8 { SummaryPoint::Final } else { SummaryPoint::Best };
    Ok((monitor.to_string(), aggregate, point))
}

fn chosen<'a>(run: &'a RunRecords, monitor: &str, point: SummaryPoint) -> Option<&'a CheckpointRecord> {
    match point {
        SummaryPoint::Best => run.best_index(monitor).map(|i| &run.records[i]),
        SummaryPoint::Final => run
            .records
            .last()
            .filter(|c| c.iteration > 0 && c.metrics.get(monitor).is_some_and(f64::is_finite)),
    }
}

/// Summarizes runs of a single benchmark, one row per method.
pub fn summarize(
    runs: &[RunRecords],
    monitor: &str,
    aggregate: Aggregate,
    point: SummaryPoint,
) -> Result<Summary> {
    let benchmark = runs.first().map(|r| r.benchmark.clone()).unwrap_or_default();
    if runs.iter().any(|r| r.benchmark != benchmark) {
        return Err(Error::Precondition("summarize expects runs of one benchmark".into()));
    }
    let mut by_method: BTreeMap<Method, Vec<&RunRecords>> = BTreeMap::new();
    for r in runs {
        by_method.entry(r.method).or_default().push(r);
    }
    let rows = by_method
        .into_iter()
        .map(|(method, group)| {
            let picks: Vec<&CheckpointRecord> = group.iter().filter_map(|r| chosen(r, monitor, point)).collect();
            let keys: BTreeSet<&str> = group
                .iter()
                .flat_map(|r| r.records.iter().flat_map(|c| c.metrics.keys()))
                .collect();
            let agg = |f: &dyn Fn(&CheckpointRecord) -> f64| {
                aggregate.apply(&picks.iter().map(|c| f(c)).collect::<Vec<_>>())
            };
            let metrics = keys
                .into_iter()
                .map(|k| (k.to_string(), agg(&|c| c.metrics.get(k).unwrap_or(f64::NAN))))
                .collect();
            SummaryRow {
                method,
                runs: group.len(),
                finite_seeds: picks.len(),
                finite: format!("{}/{}", picks.len(), group.len()),
                monitor_value: agg(&|c| c.metrics.get(monitor).unwrap_or(f64::NAN)),
                iteration: agg(&|c| c.iteration as f64),
                grad_evals: agg(&|c| c.costs.grad_evals as f64),
                grad_batches: agg(&|c| c.costs.grad_batches as f64),
                kernel_evals: agg(&|c| c.costs.kernel_evals as f64),
                wall_seconds: agg(&|c| c.wall_seconds),
                metrics,
            }
        })
        .collect();
    Ok(Summary {
        benchmark,
        monitor: monitor.to_string(),
        aggregate,
        point,
        rows,
    })
}

/// Groups runs by benchmark and summarizes each group with its defaults.
pub fn summarize_all(runs: &[RunRecords]) -> Result<Vec<Summary>> {
    let mut groups: BTreeMap<&str, Vec<RunRecords>> = BTreeMap::new();
    for r in runs {
        groups.entry(&r.benchmark).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(b, g)| {
            let (monitor, aggregate, point) = summary_defaults(b, &g)?;
            summarize(&g, &monitor, aggregate, point)
        })
        .collect()
}

/// Runs every (method, seed) pair of `base` in parallel and summarizes.
pub fn sweep(base: &RunConfig, methods: &[Method], seeds: &[u64]) -> Result<SweepResult> {
    if methods.is_empty() || seeds.is_empty() {
        return Err(Error::config("a sweep needs at least one method and one seed"));
    }
    let configs: Vec<RunConfig> = methods
        .iter()
        .flat_map(|&m| {
            seeds.iter().map(move |&s| RunConfig {
                method: m,
                seed: s,
                ..base.clone()
            })
        })
        .collect();
    let runs = configs.par_iter().map(run).collect::<Result<Vec<_>>>()?;
    let traces: Vec<RunRecords> = runs.iter().map(|r| r.trace.clone()).collect();
    let (_, aggregate, point) = summary_defaults(&base.benchmark, &traces)?;
    let monitor = runs.first().map(|r| r.monitor_key.clone()).unwrap_or_default();
    let summary = summarize(&traces, &monitor, aggregate, point)?;
    Ok(SweepResult { runs, summary })
}
