//! Vanilla SVGD on a 2D standard Gaussian, driven step by step.
use msvgd::prelude::*;

fn main() -> Result<()> {
    let target = DiagGaussian::standard(2);
    let (mean, cov) = target.reference_moments().expect("gaussian moments");
    let kernel = KernelSpec::rbf();
    let cfg = StepConfig { h: 0.1, ..StepConfig::default() };
    let mut ctr = CostCounters::default();
    let mut ens = init_ensemble(128, 2, &InitSpec::gaussian(0.25), &RngStream::new(0))?;

    for it in 0..=500 {
        if it % 100 == 0 {
            let (e_mu, e_sigma) = moment_errors(ens.particles.view(), &mean, &cov)?;
            println!("iter {it:>4}  e_mu {e_mu:.4}  e_sigma {e_sigma:.4}  grads {}", ctr.grad_evals);
        }
        ens = svgd_step(&ens, &target, &kernel, &cfg, &mut ctr)?;
    }
    Ok(())
}
