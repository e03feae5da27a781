//! Hierarchical logistic regression with long-tailed group sizes. A smaller
//! instance than the default keeps the example quick.
use msvgd::harness::{run, RunConfig};
use msvgd::samplers::Method;

fn main() -> msvgd::Result<()> {
    for method in [Method::Mr, Method::AdaptMr] {
        let mut cfg = RunConfig::for_benchmark("hlr-longtail", method)?;
        cfg.options.hlr.n = 2000;
        cfg.options.hlr.groups = 100;
        cfg.max_iterations = 300;
        let result = run(&cfg)?;
        let best = result.best.map(|i| &result.records()[i]);
        match best {
            Some(rec) => println!(
                "{method:<9} best nll {:.4} at iter {} (grads {}, kernels {}), stop {:?}",
                rec.metrics.get("nll").unwrap_or(f64::NAN),
                rec.iteration,
                rec.costs.grad_evals,
                rec.costs.kernel_evals,
                result.stop_reason
            ),
            None => println!("{method:<9} no finite checkpoint, stop {:?}", result.stop_reason),
        }
        if let Some(a) = result.adapt {
            println!("          mean drift substeps {:.2}, max {}", a.mean_substeps(), a.max_substeps);
        }
    }
    Ok(())
}
