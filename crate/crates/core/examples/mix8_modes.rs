//! Eight-mode ring mixture with the multiscale kernel: mode coverage,
//! entropy and imbalance for MR and adaptive MR at a fixed budget.
use msvgd::harness::{run, RunConfig};
use msvgd::samplers::Method;

fn main() -> msvgd::Result<()> {
    for method in [Method::Mr, Method::AdaptMr] {
        let mut cfg = RunConfig::for_benchmark("mix8", method)?;
        cfg.max_iterations = 400;
        cfg.checkpoint_every = 100;
        let result = run(&cfg)?;
        let last = result.records().last().expect("initial checkpoint");
        let m = &last.metrics;
        println!(
            "{method:<9} iter {:>4}  coverage {:.3}  entropy {:.3}  imbalance {:.4}  ksd {:.4}",
            last.iteration,
            m.get("coverage").unwrap_or(f64::NAN),
            m.get("entropy").unwrap_or(f64::NAN),
            m.get("imbalance").unwrap_or(f64::NAN),
            m.get("ksd").unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
