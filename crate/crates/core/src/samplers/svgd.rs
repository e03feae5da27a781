use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::fields::{compute_fields, drift_field, repulsion_field};
use crate::ensemble::{CostCounters, Ensemble, StepConfig};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::targets::Target;

/// Diagnostics of one adaptive macro step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptReport {
    pub rho: f64,
    pub m_chosen: usize,
    pub reused_predictor: bool,
}

fn euler(x: &Array2<f64>, tau: f64, f: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    out.scaled_add(tau, f);
    out
}

fn advance(ens: &Ensemble, particles: Array2<f64>) -> Ensemble {
    Ensemble {
        particles,
        iteration: ens.iteration + 1,
    }
}

fn rep_substeps(
    x: Array2<f64>,
    tau: f64,
    count: usize,
    kernel: &KernelSpec,
    ctr: &mut CostCounters,
) -> Result<Array2<f64>> {
    let mut state = Ensemble { particles: x, iteration: 0 };
    for _ in 0..count {
        let f = repulsion_field(&state, kernel, ctr)?;
        state.particles.scaled_add(tau, &f);
    }
    Ok(state.particles)
}

fn as_state(x: &Array2<f64>) -> Ensemble {
    Ensemble { particles: x.clone(), iteration: 0 }
}

/// Vanilla SVGD: `x + h (drift + repulsion)`.
pub fn svgd_step(
    ens: &Ensemble,
    target: &dyn Target,
    kernel: &KernelSpec,
    cfg: &StepConfig,
    ctr: &mut CostCounters,
) -> Result<Ensemble> {
    let fields = compute_fields(ens, target, kernel, cfg, ctr)?;
    Ok(advance(ens, euler(&ens.particles, cfg.h, &fields.velocity())))
}

/// Symmetric splitting: half repulsion, full drift, half repulsion, each
/// half made of `half_substeps` Euler substeps of size `h / (2 m')`.
pub fn strang_step(
    ens: &Ensemble,
    target: &dyn Target,
    kernel: &KernelSpec,
    cfg: &StepConfig,
    ctr: &mut CostCounters,
    half_substeps: usize,
) -> Result<Ensemble> {
    if half_substeps == 0 {
        return Err(Error::Config("half_substeps must be at least 1".into()));
    }
    let tau = cfg.h / (2.0 * half_substeps as f64);
    let x = rep_substeps(ens.particles.clone(), tau, half_substeps, kernel, ctr)?;
    let f = drift_field(&as_state(&x), target, kernel, cfg, ctr)?;
    let x = euler(&x, cfg.h, &f);
    let x = rep_substeps(x, tau, half_substeps, kernel, ctr)?;
    Ok(advance(ens, x))
}

/// Fixed multirate step: `m_fixed` repulsion substeps of size `h / m_fixed`
/// followed by one drift step of size `h`.
pub fn mr_svgd_step(
    ens: &Ensemble,
    target: &dyn Target,
    kernel: &KernelSpec,
    cfg: &StepConfig,
    ctr: &mut CostCounters,
) -> Result<Ensemble> {
    let m = cfg.m_fixed.max(1);
    let x = rep_substeps(ens.particles.clone(), cfg.h / m as f64, m, kernel, ctr)?;
    let f = drift_field(&as_state(&x), target, kernel, cfg, ctr)?;
    Ok(advance(ens, euler(&x, cfg.h, &f)))
}

/// Substep count `clip(ceil(sqrt(rho / tol)), m_min, m_max)`.
///
/// The ceiling is taken exactly: the result is the smallest `k` with
/// `k * k >= rho / tol` before clipping.
pub fn substeps_for(rho: f64, tol: f64, m_min: usize, m_max: usize) -> Result<usize> {
    let r = rho / tol;
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Diverged(format!("local error indicator is {rho}")));
    }
    let cap = (m_max as f64) * (m_max as f64);
    let k = if r > cap {
        m_max
    } else {
        let mut k = r.sqrt().ceil() as usize;
        while k > 0 && ((k - 1) * (k - 1)) as f64 >= r {
            k -= 1;
        }
        while ((k * k) as f64) < r {
            k += 1;
        }
        k
    };
    Ok(k.clamp(m_min, m_max))
}

/// Adaptive multirate step. One repulsion step, then a step-doubling error
/// estimate on the drift sets the number of drift substeps.
pub fn adapt_mr_svgd_step(
    ens: &Ensemble,
    target: &dyn Target,
    kernel: &KernelSpec,
    cfg: &StepConfig,
    ctr: &mut CostCounters,
) -> Result<(Ensemble, AdaptReport)> {
    let h = cfg.h;
    let x = rep_substeps(ens.particles.clone(), h, 1, kernel, ctr)?;
    let x_state = as_state(&x);

    let f = drift_field(&x_state, target, kernel, cfg, ctr)?;
    let x_full = euler(&x, h, &f);
    let x_half = euler(&x, 0.5 * h, &f);
    let f_half = drift_field(&as_state(&x_half), target, kernel, cfg, ctr)?;
    let x_tilde = euler(&x_half, 0.5 * h, &f_half);

    let diff = (&x_tilde - &x_full).iter().map(|v| v * v).sum::<f64>().sqrt();
    let rho = diff / (x_state.frobenius_norm() + cfg.eps);
    let m = substeps_for(rho, cfg.tol, cfg.m_min, cfg.m_max)?;

    if m <= 2 {
        let report = AdaptReport { rho, m_chosen: m, reused_predictor: true };
        return Ok((advance(ens, x_tilde), report));
    }
    let tau = h / m as f64;
    let mut state = x_state;
    for _ in 0..m {
        let f = drift_field(&state, target, kernel, cfg, ctr)?;
        state.particles.scaled_add(tau, &f);
    }
    let report = AdaptReport { rho, m_chosen: m, reused_predictor: false };
    Ok((advance(ens, state.particles), report))
}
