//! How the step-doubling indicator and the substep controller react to the
//! macro step size on a stiff anisotropic Gaussian.
use msvgd::prelude::*;
use msvgd::samplers::substeps_for;
use msvgd::targets::make_gauss50;

fn main() -> Result<()> {
    let target = make_gauss50(10, 100.0)?;
    let kernel = KernelSpec::rbf();
    let ens = init_ensemble(64, 10, &InitSpec::gaussian(1.0), &RngStream::new(1))?;

    println!("{:>8} {:>11} {:>4} {:>7}", "h", "rho", "m", "reused");
    for h in [0.2, 0.1, 0.05, 0.02, 0.01, 0.005] {
        let cfg = StepConfig { h, ..StepConfig::default() };
        let mut ctr = CostCounters::default();
        let (_, report) = adapt_mr_svgd_step(&ens, &target, &kernel, &cfg, &mut ctr)?;
        println!("{h:>8} {:>11.3e} {:>4} {:>7}", report.rho, report.m_chosen, report.reused_predictor);
    }

    println!("\ncontroller: m = clip(ceil(sqrt(rho / tol)), m_min, m_max) with tol 1e-3, m in [1, 16]");
    for rho in [0.0, 1e-3, 1.0001e-3, 4e-3, 0.1, 10.0] {
        println!("  rho {rho:<9} -> m {}", substeps_for(rho, 1e-3, 1, 16)?);
    }
    Ok(())
}
