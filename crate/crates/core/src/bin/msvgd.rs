use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use msvgd::harness::{
    self, emit_outputs, parse_assignment, read_checkpoints_csv, read_config_file,
    resolve_run_config, summarize, summarize_all, summary_defaults, write_resolved_config,
    Aggregate, RunConfig, RunRecords, Summary, SummaryPoint,
};
use msvgd::samplers::Method;
use msvgd::{Error, Result};

#[derive(Parser)]
#[command(name = "msvgd", version, about = "Multirate SVGD benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its checkpoints.
    Run(RunArgs),
    /// Run a benchmark over methods and seeds and summarize.
    Sweep(SweepArgs),
    /// Fold checkpoint CSV files into summary tables.
    Summarize(SummarizeArgs),
    /// Run gradient and oracle self-checks.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// TOML file mirroring the run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    benchmark: Option<String>,
    #[arg(long, env = harness::SEED_ENV)]
    seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    n_particles: Option<usize>,
    /// Macro step size.
    #[arg(long)]
    step: Option<f64>,
    /// Any configuration key, e.g. `--set kernel.kind=rbf`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, short, env = harness::OUT_DIR_ENV, default_value = "msvgd-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, short)]
    method: Option<Method>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated methods; defaults to all six.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    /// Number of seeds, counted up from the base seed.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregateArg {
    Median,
    Mean,
}

#[derive(Clone, Copy, ValueEnum)]
enum PointArg {
    Best,
    Final,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Checkpoint tables written by `run` or `sweep`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, short, env = harness::OUT_DIR_ENV, default_value = "msvgd-out")]
    out_dir: PathBuf,
    /// Override the per-benchmark monitor.
    #[arg(long)]
    monitor: Option<String>,
    #[arg(long, value_enum)]
    aggregate: Option<AggregateArg>,
    #[arg(long, value_enum)]
    point: Option<PointArg>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, env = harness::SEED_ENV, default_value_t = 0)]
    seed: u64,
}

fn layers(common: &Common, method: Option<Method>) -> Result<Vec<toml::Table>> {
    let mut out = Vec::new();
    if let Some(path) = &common.config {
        out.push(read_config_file(path)?);
    }
    for s in &common.set {
        out.push(parse_assignment(s)?);
    }
    let mut flags = Vec::new();
    if let Some(b) = &common.benchmark {
        flags.push(format!("benchmark={}", toml::Value::from(b.as_str())));
    }
    if let Some(m) = method {
        flags.push(format!("method=\"{m}\""));
    }
    if let Some(s) = common.seed {
        flags.push(format!("seed={s}"));
    }
    if let Some(n) = common.max_iterations {
        flags.push(format!("max_iterations={n}"));
    }
    if let Some(n) = common.n_particles {
        flags.push(format!("n_particles={n}"));
    }
    if let Some(h) = common.step {
        flags.push(format!("step.h={h:?}"));
    }
    for f in flags {
        out.push(parse_assignment(&f)?);
    }
    Ok(out)
}

fn resolve(common: &Common, method: Option<Method>) -> Result<RunConfig> {
    let tables = layers(common, method)?;
    let refs: Vec<&toml::Table> = tables.iter().collect();
    resolve_run_config(&refs)
}

fn report(out_dir: &Path, files: &[PathBuf]) {
    eprintln!("wrote {} files to {}", files.len(), out_dir.display());
}

fn print_summary(s: &Summary) {
    println!("{} (monitor {}, {:?} at {:?})", s.benchmark, s.monitor, s.aggregate, s.point);
    for r in &s.rows {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4e}"));
        println!(
            "  {:<9} finite {:<5} {} {:<11} iter {:<6} grads {:<10} kernels {}",
            r.method.to_string(),
            r.finite,
            s.monitor,
            fmt(r.monitor_value),
            r.iteration.map_or("-".into(), |v| format!("{v:.0}")),
            r.grad_evals.map_or("-".into(), |v| format!("{v:.0}")),
            r.kernel_evals.map_or("-".into(), |v| format!("{v:.0}")),
        );
    }
}

fn cmd_run(args: RunArgs) -> Result<bool> {
    let cfg = resolve(&args.common, args.method)?;
    let out = &args.common.out_dir;
    write_resolved_config(out, &cfg.to_toml()?)?;
    let result = harness::run(&cfg)?;
    let traces = [result.trace.clone()];
    let summary = summarize(&traces, &result.monitor_key, Aggregate::Median, SummaryPoint::Best)?;
    let files = emit_outputs(out, &traces, std::slice::from_ref(&summary))?;
    eprintln!("stopped: {:?}", result.stop_reason);
    print_summary(&summary);
    report(out, &files);
    Ok(result.has_finite_checkpoint())
}

fn cmd_sweep(args: SweepArgs) -> Result<bool> {
    let methods = if args.methods.is_empty() { Method::ALL.to_vec() } else { args.methods };
    let cfg = resolve(&args.common, Some(methods[0]))?;
    let seeds: Vec<u64> = (cfg.seed..cfg.seed + args.seeds).collect();
    let out = &args.common.out_dir;
    write_resolved_config(out, &cfg.to_toml()?)?;
    let result = harness::sweep(&cfg, &methods, &seeds)?;
    let files = emit_outputs(out, &result.traces(), std::slice::from_ref(&result.summary))?;
    print_summary(&result.summary);
    report(out, &files);
    Ok(!result.all_diverged())
}

fn cmd_summarize(args: SummarizeArgs) -> Result<bool> {
    let mut runs: Vec<RunRecords> = Vec::new();
    for path in &args.inputs {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
        runs.extend(read_checkpoints_csv(&text)?);
    }
    let overridden = args.monitor.is_some() || args.aggregate.is_some() || args.point.is_some();
    let summaries = if overridden {
        let mut benches: Vec<&str> = runs.iter().map(|r| r.benchmark.as_str()).collect();
        benches.dedup();
        benches.sort_unstable();
        benches.dedup();
        let mut out = Vec::new();
        for b in benches {
            let group: Vec<RunRecords> = runs.iter().filter(|r| r.benchmark == b).cloned().collect();
            let (monitor, aggregate, point) = summary_defaults(b, &group)?;
            let aggregate = match args.aggregate {
                Some(AggregateArg::Median) => Aggregate::Median,
                Some(AggregateArg::Mean) => Aggregate::Mean,
                None => aggregate,
            };
            let point = match args.point {
                Some(PointArg::Best) => SummaryPoint::Best,
                Some(PointArg::Final) => SummaryPoint::Final,
                None => point,
            };
            out.push(summarize(&group, args.monitor.as_deref().unwrap_or(&monitor), aggregate, point)?);
        }
        out
    } else {
        summarize_all(&runs)?
    };
    let files = emit_outputs(&args.out_dir, &runs, &summaries)?;
    summaries.iter().for_each(print_summary);
    report(&args.out_dir, &files);
    Ok(runs.is_empty() || runs.iter().any(|r| r.records.iter().any(|c| c.is_finite)))
}

fn cmd_validate(args: ValidateArgs) -> Result<bool> {
    let checks = harness::self_checks(args.seed)?;
    for c in &checks {
        println!("{} {:<24} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        Ok(true)
    } else {
        Err(Error::Precondition("self-checks failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: every run diverged before a finite checkpoint");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
