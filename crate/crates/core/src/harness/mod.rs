//! Benchmark runs: configuration, checkpointed stepping with early
//! stopping, seed sweeps, summaries and result files.
//!
//! ```no_run
//! use msvgd::harness::{run, RunConfig};
//! use msvgd::samplers::Method;
//!
//! let mut cfg = RunConfig::for_benchmark("2d-banana", Method::AdaptMr).unwrap();
//! cfg.max_iterations = 200;
//! let result = run(&cfg).unwrap();
//! println!("stopped by {:?} with best checkpoint {:?}", result.stop_reason, result.best);
//! ```

mod benchmark;
mod config;
mod output;
mod run;
mod summary;
mod validate;

pub use benchmark::Benchmark;
pub use config::{
    merge_tables, parse_assignment, read_config_file, resolve_run_config, BenchmarkKind,
    BenchmarkOptions, ChainParams, DataSource, Limit, Monitor, RunConfig,
};
pub use output::{
    checkpoints_csv, emit_outputs, monitor_svg, pareto_svg, read_checkpoints_csv,
    read_summary_json, summary_csv, summary_json, SUMMARY_FORMAT_VERSION,
};
pub use run::{
    run, run_with_hook, AdaptStats, CheckpointRecord, EarlyStopper, RunRecords, RunResult,
    StopReason,
};
pub use summary::{
    finite_mean, finite_median, summarize, summarize_all, summary_defaults, sweep, Aggregate,
    Summary, SummaryPoint, SummaryRow, SweepResult,
};
pub use validate::{
    ceil_sqrt_search, field_identity_ulps, score_check_targets, self_checks, worst_score_error,
    CheckOutcome,
};

/// Environment variable overriding the base RNG seed.
pub const SEED_ENV: &str = "MSVGD_SEED";
/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "MSVGD_OUT_DIR";

/// Writes the resolved configuration next to the results.
pub fn write_resolved_config(out_dir: &std::path::Path, text: &str) -> crate::Result<std::path::PathBuf> {
    std::fs::create_dir_all(out_dir).map_err(|e| crate::Error::io(out_dir, e))?;
    let path = out_dir.join("config-resolved.toml");
    crate::data::write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
