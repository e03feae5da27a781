//! Single-chain SGLD and SGHMC baselines on a 1D standard Gaussian, with
//! the effective sample size of the trace.
use msvgd::prelude::*;
use msvgd::samplers::{sghmc_step, sgld_step};

fn main() -> Result<()> {
    let target = DiagGaussian::standard(1);
    let steps = 50_000;
    for name in ["sgld", "sghmc"] {
        let mut rng = RngStream::new(2).substream(name);
        let mut ctr = CostCounters::default();
        let mut chain = ChainState::new(vec![3.0], 1e-2, 0.1, 0.9)?;
        let mut trace = Vec::with_capacity(steps);
        for _ in 0..steps {
            chain = match name {
                "sgld" => sgld_step(&chain, &target, &mut rng, &mut ctr),
                _ => sghmc_step(&chain, &target, &mut rng, &mut ctr),
            };
            trace.push(chain.position[0]);
        }
        let kept = &trace[steps / 10..];
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        let var = kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / kept.len() as f64;
        println!("{name:<6} mean {mean:+.3}  var {var:.3}  ess {:.0} of {}", ess_1d(kept), kept.len());
    }
    Ok(())
}
