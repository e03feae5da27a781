//! Result files.
//!
//! `checkpoints.csv` has the columns
//! `benchmark, method, seed, iteration, <metrics...>, grad_evals,
//! grad_batches, kernel_evals, wall_seconds, is_finite`, where the metric
//! columns are the union of metric names over all runs in lexicographic
//! order. A metric a run does not record is an empty cell. Floats are
//! written in shortest round-trip form (`NaN`, `inf` and `-inf` included).
//!
//! `summary.csv` has `benchmark, method, runs, finite_seeds, finite,
//! monitor, aggregate, point, monitor_value, iteration, grad_evals,
//! grad_batches, kernel_evals, wall_seconds` followed by one column per
//! metric; missing values are empty. `summary.json` holds the same data and
//! follows `schema/summary.schema.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{CheckpointRecord, RunRecords};
use super::summary::{Summary, SummaryPoint};
use crate::data::write_atomic;
use crate::ensemble::CostCounters;
use crate::error::{Error, Result};
use crate::metrics::MetricSnapshot;

const LEAD: [&str; 4] = ["benchmark", "method", "seed", "iteration"];
const TRAIL: [&str; 5] = ["grad_evals", "grad_batches", "kernel_evals", "wall_seconds", "is_finite"];
const SUMMARY_LEAD: [&str; 14] = [
    "benchmark",
    "method",
    "runs",
    "finite_seeds",
    "finite",
    "monitor",
    "aggregate",
    "point",
    "monitor_value",
    "iteration",
    "grad_evals",
    "grad_batches",
    "kernel_evals",
    "wall_seconds",
];

/// Version tag of `summary.json`.
pub const SUMMARY_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SummaryFile {
    version: u32,
    summaries: Vec<Summary>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_bytes(writer: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    writer
        .into_inner()
        .map_err(|e| Error::Data(format!("csv buffer: {e}")))
}

/// Renders the per-checkpoint table.
pub fn checkpoints_csv(runs: &[RunRecords]) -> Result<String> {
    let metric_keys: BTreeSet<&str> = runs
        .iter()
        .flat_map(|r| r.records.iter().flat_map(|c| c.metrics.keys()))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = LEAD.iter().copied().chain(metric_keys.iter().copied()).chain(TRAIL).collect();
    w.write_record(&header)?;
    for r in runs {
        for c in &r.records {
            let mut row = vec![
                r.benchmark.clone(),
                r.method.to_string(),
                r.seed.to_string(),
                c.iteration.to_string(),
            ];
            row.extend(metric_keys.iter().map(|k| fmt_opt(c.metrics.get(k))));
            row.extend([
                c.costs.grad_evals.to_string(),
                c.costs.grad_batches.to_string(),
                c.costs.kernel_evals.to_string(),
                fmt_f64(c.wall_seconds),
                c.is_finite.to_string(),
            ]);
            w.write_record(&row)?;
        }
    }
    Ok(String::from_utf8(csv_bytes(w)?).expect("csv output is utf-8"))
}

fn parse_field<T: std::str::FromStr>(value: &str, column: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::DataLine {
        line,
        msg: format!("cannot parse '{value}' in column '{column}'"),
    })
}

/// Parses a table written by [`checkpoints_csv`] back into runs, in order of
/// first appearance.
pub fn read_checkpoints_csv(text: &str) -> Result<Vec<RunRecords>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let n = header.len();
    let ok = n >= LEAD.len() + TRAIL.len()
        && header[..LEAD.len()] == LEAD
        && header[n - TRAIL.len()..] == TRAIL;
    if !ok {
        return Err(Error::DataLine {
            line: 1,
            msg: "not a checkpoint table (unexpected header)".into(),
        });
    }
    let metric_cols = &header[LEAD.len()..n - TRAIL.len()];
    let mut runs: Vec<RunRecords> = Vec::new();
    let mut index: BTreeMap<(String, String, u64), usize> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let get = |j: usize| rec.get(j).unwrap_or("");
        let method = get(1).parse().map_err(|_| Error::DataLine {
            line,
            msg: format!("unknown method '{}'", get(1)),
        })?;
        let seed: u64 = parse_field(get(2), "seed", line)?;
        let mut metrics = MetricSnapshot::new();
        for (k, col) in metric_cols.iter().enumerate() {
            let v = get(LEAD.len() + k);
            if !v.is_empty() {
                metrics.insert(col.clone(), parse_field(v, col, line)?);
            }
        }
        let t = n - TRAIL.len();
        let wall: f64 = parse_field(get(t + 3), "wall_seconds", line)?;
        let record = CheckpointRecord {
            iteration: parse_field(get(3), "iteration", line)?,
            metrics,
            costs: CostCounters {
                grad_evals: parse_field(get(t), "grad_evals", line)?,
                grad_batches: parse_field(get(t + 1), "grad_batches", line)?,
                kernel_evals: parse_field(get(t + 2), "kernel_evals", line)?,
                wall_seconds: wall,
            },
            wall_seconds: wall,
            is_finite: parse_field(get(t + 4), "is_finite", line)?,
        };
        let key = (get(0).to_string(), get(1).to_string(), seed);
        let slot = *index.entry(key).or_insert_with(|| {
            runs.push(RunRecords {
                benchmark: get(0).to_string(),
                method,
                seed,
                records: Vec::new(),
            });
            runs.len() - 1
        });
        runs[slot].records.push(record);
    }
    Ok(runs)
}

pub fn summary_csv(summaries: &[Summary]) -> Result<String> {
    let metric_keys: BTreeSet<&str> = summaries
        .iter()
        .flat_map(|s| s.rows.iter().flat_map(|r| r.metrics.keys().map(String::as_str)))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = SUMMARY_LEAD.iter().copied().chain(metric_keys.iter().copied()).collect();
    w.write_record(&header)?;
    for s in summaries {
        let agg = serde_json::to_value(s.aggregate)?;
        let point = serde_json::to_value(s.point)?;
        for r in &s.rows {
            let mut row = vec![
                s.benchmark.clone(),
                r.method.to_string(),
                r.runs.to_string(),
                r.finite_seeds.to_string(),
                r.finite.clone(),
                s.monitor.clone(),
                agg.as_str().unwrap_or_default().to_string(),
                point.as_str().unwrap_or_default().to_string(),
                fmt_opt(r.monitor_value),
                fmt_opt(r.iteration),
                fmt_opt(r.grad_evals),
                fmt_opt(r.grad_batches),
                fmt_opt(r.kernel_evals),
                fmt_opt(r.wall_seconds),
            ];
            row.extend(metric_keys.iter().map(|k| fmt_opt(r.metrics.get(*k).copied().flatten())));
            w.write_record(&row)?;
        }
    }
    Ok(String::from_utf8(csv_bytes(w)?).expect("csv output is utf-8"))
}

pub fn summary_json(summaries: &[Summary]) -> Result<String> {
    let file = SummaryFile {
        version: SUMMARY_FORMAT_VERSION,
        summaries: summaries.to_vec(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn read_summary_json(text: &str) -> Result<Vec<Summary>> {
    let file: SummaryFile = serde_json::from_str(text)?;
    if file.version != SUMMARY_FORMAT_VERSION {
        return Err(Error::Data(format!("unsupported summary version {}", file.version)));
    }
    Ok(file.summaries)
}

const PALETTE: [&str; 6] = ["#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6c4f9c", "#555555"];

/// A minimal line or scatter chart rendered as SVG.
struct Chart<'a> {
    title: &'a str,
    x_label: &'a str,
    y_label: &'a str,
    log_x: bool,
    log_y: bool,
    lines: bool,
    series: Vec<(String, Vec<(f64, f64)>)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart<'_> {
    fn render(&self) -> String {
        let (w, h) = (640.0, 420.0);
        let (l, r, t, b) = (70.0, 150.0, 40.0, 50.0);
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let usable = |(x, y): &(f64, f64)| {
            x.is_finite() && y.is_finite() && (!self.log_x || *x > 0.0) && (!self.log_y || *y > 0.0)
        };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|(_, p)| p.iter().filter(|q| usable(q)).map(|&(x, y)| (tx(x), ty(y))))
            .collect();
        let bounds = |f: fn(&(f64, f64)) -> f64| {
            let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            match (lo.is_finite(), hi > lo) {
                (false, _) => (0.0, 1.0),
                (true, true) => (lo, hi),
                (true, false) => (lo - 0.5, lo + 0.5),
            }
        };
        let (x0, x1) = bounds(|p| p.0);
        let (y0, y1) = bounds(|p| p.1);
        let px = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
        let py = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (l + w - r) / 2.0, escape(self.title));
        let _ = writeln!(
            s,
            r##"<path d="M{l},{t} L{l},{} L{},{}" fill="none" stroke="#333"/>"##,
            h - b,
            w - r,
            h - b
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let lx = if self.log_x { format!("1e{fx:.1}") } else { format!("{fx:.3}") };
            let ly = if self.log_y { format!("1e{fy:.1}") } else { format!("{fy:.3}") };
            let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{lx}</text>"#, px(fx), h - b + 16.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{ly}</text>"#, l - 6.0, py(fy) + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (l + w - r) / 2.0, h - 12.0, escape(self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            (t + h - b) / 2.0,
            (t + h - b) / 2.0,
            escape(self.y_label)
        );
        for (i, (label, points)) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mapped: Vec<(f64, f64)> = points.iter().filter(|q| usable(q)).map(|&(x, y)| (px(tx(x)), py(ty(y)))).collect();
            if self.lines && mapped.len() > 1 {
                let d: Vec<String> = mapped.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.join(" "));
            }
            for (x, y) in &mapped {
                let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#);
            }
            let ly = t + 14.0 * i as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, w - r + 10.0, ly);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - r + 26.0, ly + 9.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Monitor value against iteration, one line per run.
pub fn monitor_svg(runs: &[RunRecords], monitor: &str) -> String {
    let series = runs
        .iter()
        .map(|r| {
            let pts = r.records.iter().map(|c| (c.iteration as f64, c.metrics.get(monitor).unwrap_or(f64::NAN))).collect();
            (format!("{} s{}", r.method, r.seed), pts)
        })
        .collect();
    let log_y = monitor == "ksd";
    Chart {
        title: &format!("{} by iteration", monitor),
        x_label: "iteration",
        y_label: monitor,
        log_x: false,
        log_y,
        lines: true,
        series,
    }
    .render()
}

/// Quality against wall time at the summarized checkpoint of each run,
/// one colour per method. Quality is `e_mu` when recorded, else the monitor.
pub fn pareto_svg(runs: &[RunRecords], summary: &Summary) -> String {
    let quality = if runs.iter().any(|r| r.records.iter().any(|c| c.metrics.get("e_mu").is_some())) {
        "e_mu"
    } else {
        summary.monitor.as_str()
    };
    let mut by_method: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in runs {
        let pick = match summary.point {
            SummaryPoint::Best => r.best_index(&summary.monitor).map(|i| &r.records[i]),
            SummaryPoint::Final => r.records.last(),
        };
        if let Some(c) = pick {
            by_method
                .entry(r.method.to_string())
                .or_default()
                .push((c.wall_seconds, c.metrics.get(quality).unwrap_or(f64::NAN)));
        }
    }
    Chart {
        title: &format!("{}: {} vs wall time", summary.benchmark, quality),
        x_label: "wall seconds",
        y_label: quality,
        log_x: true,
        log_y: true,
        lines: false,
        series: by_method.into_iter().collect(),
    }
    .render()
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes checkpoint and summary tables and plots into `out_dir`, each file
/// atomically. Returns the written paths.
pub fn emit_outputs(out_dir: &Path, runs: &[RunRecords], summaries: &[Summary]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: &[u8]| -> Result<()> {
        let path = out_dir.join(name);
        write_atomic(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    put("checkpoints.csv".into(), checkpoints_csv(runs)?.as_bytes())?;
    put("summary.csv".into(), summary_csv(summaries)?.as_bytes())?;
    put("summary.json".into(), summary_json(summaries)?.as_bytes())?;
    for s in summaries {
        let group: Vec<RunRecords> = runs.iter().filter(|r| r.benchmark == s.benchmark).cloned().collect();
        let tag = file_safe(&s.benchmark);
        put(format!("monitor-{tag}.svg"), monitor_svg(&group, &s.monitor).as_bytes())?;
        put(format!("pareto-{tag}.svg"), pareto_svg(&group, s).as_bytes())?;
    }
    Ok(written)
}
