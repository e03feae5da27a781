//! The four particle samplers side by side on the banana target, with
//! their gradient and kernel costs.
use msvgd::prelude::*;
use msvgd::targets::make_2d_target;

fn main() -> Result<()> {
    let target = make_2d_target("banana")?;
    let kernel = KernelSpec::rbf();
    let cfg = StepConfig { h: 0.05, ..StepConfig::default() };
    let start = init_ensemble(100, 2, &InitSpec::gaussian(1.0), &RngStream::new(4))?;
    let ksd_kernel = KernelSpec::rbf();

    type Stepper = fn(&Ensemble, &dyn Target, &KernelSpec, &StepConfig, &mut CostCounters) -> Result<Ensemble>;
    let methods: [(&str, Stepper); 4] = [
        ("svgd", svgd_step),
        ("strang", |e, t, k, c, ctr| strang_step(e, t, k, c, ctr, 1)),
        ("mr", mr_svgd_step),
        ("adapt-mr", |e, t, k, c, ctr| adapt_mr_svgd_step(e, t, k, c, ctr).map(|(e, _)| e)),
    ];
    println!("{:<9} {:>9} {:>10} {:>12}", "method", "ksd", "grads", "kernels");
    for (name, step) in methods {
        let mut ens = start.clone();
        let mut ctr = CostCounters::default();
        for _ in 0..300 {
            ens = step(&ens, target.as_ref(), &kernel, &cfg, &mut ctr)?;
        }
        let k = msvgd::metrics::ksd_target(ens.particles.view(), target.as_ref(), &ksd_kernel);
        println!("{name:<9} {k:>9.4} {:>10} {:>12}", ctr.grad_evals, ctr.kernel_evals);
    }
    Ok(())
}
