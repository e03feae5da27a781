//! One-hidden-layer Bayesian neural network classifier sampled with
//! adaptive multirate SVGD through the run harness.
use msvgd::harness::{run, RunConfig};
use msvgd::samplers::Method;

fn main() -> msvgd::Result<()> {
    let mut cfg = RunConfig::for_benchmark("bnn-synthetic", Method::AdaptMr)?;
    cfg.max_iterations = 300;
    cfg.checkpoint_every = 50;
    cfg.n_particles = 32;
    cfg.options.bnn_width = 8;
    let result = run(&cfg)?;
    for rec in result.records() {
        let m = &rec.metrics;
        println!(
            "iter {:>3}  val_nll {:.4}  nll {:.4}  acc {:.3}  ece {:.4}",
            rec.iteration,
            m.get("val_nll").unwrap_or(f64::NAN),
            m.get("nll").unwrap_or(f64::NAN),
            m.get("accuracy").unwrap_or(f64::NAN),
            m.get("ece").unwrap_or(f64::NAN),
        );
    }
    println!("best checkpoint {:?}, stopped by {:?}", result.best, result.stop_reason);
    Ok(())
}
