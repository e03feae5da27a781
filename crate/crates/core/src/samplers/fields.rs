use ndarray::Array2;
use rayon::prelude::*;

use crate::ensemble::{clip_in_place, CostCounters, Ensemble, StepConfig};
use crate::error::{Error, Result};
use crate::kernel::{sq_dist, Bandwidth, KernelSpec};
use crate::targets::Target;

/// Drift and repulsion parts of the SVGD velocity, both `N x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldPair {
    pub drift: Array2<f64>,
    pub repulsion: Array2<f64>,
}

impl FieldPair {
    /// The full SVGD velocity `drift + repulsion`.
    pub fn velocity(&self) -> Array2<f64> {
        &self.drift + &self.repulsion
    }
}

/// Clipped per-particle scores. Counts one batch of `N` score evaluations.
pub fn score_matrix(
    ens: &Ensemble,
    target: &dyn Target,
    clip_bound: f64,
    ctr: &mut CostCounters,
) -> Array2<f64> {
    let (n, d) = (ens.n(), ens.dim());
    let xs = ens.as_slice();
    let mut out = Array2::zeros((n, d));
    out.as_slice_mut()
        .unwrap()
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(i, row)| {
            target.score_into(&xs[i * d..(i + 1) * d], row);
            clip_in_place(row, clip_bound);
        });
    ctr.add_grad_batch(n);
    out
}

fn ensure_finite(ens: &Ensemble) -> Result<()> {
    if ens.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged(format!(
            "non-finite particle coordinate at iteration {}",
            ens.iteration
        )))
    }
}

/// One pass over all pairs. `scores` enables the drift sum, `want_rep` the
/// repulsion sum; for particle `i` the sums run over `j` in index order.
fn assemble(
    ens: &Ensemble,
    bw: &Bandwidth,
    scores: Option<&[f64]>,
    want_rep: bool,
) -> (Option<Array2<f64>>, Option<Array2<f64>>) {
    let (n, d) = (ens.n(), ens.dim());
    let xs = ens.as_slice();
    let inv_n = 1.0 / n as f64;
    let mut drift = scores.map(|_| Array2::<f64>::zeros((n, d)));
    let mut rep = want_rep.then(|| Array2::<f64>::zeros((n, d)));

    let row = |i: usize, drow: Option<&mut [f64]>, rrow: Option<&mut [f64]>| {
        let xi = &xs[i * d..(i + 1) * d];
        let mut dacc = vec![0.0; if drow.is_some() { d } else { 0 }];
        let mut racc = vec![0.0; if rrow.is_some() { d } else { 0 }];
        for j in 0..n {
            let xj = &xs[j * d..(j + 1) * d];
            let (k, w) = bw.value_and_weight(sq_dist(xj, xi));
            if let Some(s) = scores {
                let sj = &s[j * d..(j + 1) * d];
                for c in 0..d {
                    dacc[c] += k * sj[c];
                }
            }
            if !racc.is_empty() {
                for c in 0..d {
                    racc[c] += (xi[c] - xj[c]) * w;
                }
            }
        }
        if let Some(dr) = drow {
            for (o, a) in dr.iter_mut().zip(&dacc) {
                *o = a * inv_n;
            }
        }
        if let Some(rr) = rrow {
            for (o, a) in rr.iter_mut().zip(&racc) {
                *o = a * inv_n;
            }
        }
    };

    match (drift.as_mut(), rep.as_mut()) {
        (Some(dm), Some(rm)) => dm
            .as_slice_mut()
            .unwrap()
            .par_chunks_mut(d)
            .zip(rm.as_slice_mut().unwrap().par_chunks_mut(d))
            .enumerate()
            .for_each(|(i, (dr, rr))| row(i, Some(dr), Some(rr))),
        (Some(dm), None) => dm
            .as_slice_mut()
            .unwrap()
            .par_chunks_mut(d)
            .enumerate()
            .for_each(|(i, dr)| row(i, Some(dr), None)),
        (None, Some(rm)) => rm
            .as_slice_mut()
            .unwrap()
            .par_chunks_mut(d)
            .enumerate()
            .for_each(|(i, rr)| row(i, None, Some(rr))),
        (None, None) => {}
    }
    (drift, rep)
}

/// Both fields at the current state: one score batch and one kernel table.
pub fn compute_fields(
    ens: &Ensemble,
    target: &dyn Target,
    kernel: &KernelSpec,
    cfg: &StepConfig,
    ctr: &mut CostCounters,
) -> Result<FieldPair> {
    ensure_finite(ens)?;
    let scores = score_matrix(ens, target, cfg.clip_bound, ctr);
    let bw = kernel.resolve(ens.particles.view());
    let (drift, rep) = assemble(ens, &bw, Some(scores.as_slice().unwrap()), true);
    ctr.add_kernel_table(ens.n());
    Ok(FieldPair {
        drift: drift.unwrap(),
        repulsion: rep.unwrap(),
    })
}

/// `f_drift(x_i) = (1/N) sum_j k(x_j, x_i) s(x_j)` with clipped scores.
pub fn drift_field(
    ens: &Ensemble,
    target: &dyn Target,
    kernel: &KernelSpec,
    cfg: &StepConfig,
    ctr: &mut CostCounters,
) -> Result<Array2<f64>> {
    ensure_finite(ens)?;
    let scores = score_matrix(ens, target, cfg.clip_bound, ctr);
    let bw = kernel.resolve(ens.particles.view());
    let (drift, _) = assemble(ens, &bw, Some(scores.as_slice().unwrap()), false);
    ctr.add_kernel_table(ens.n());
    Ok(drift.unwrap())
}

/// `f_rep(x_i) = (1/N) sum_j grad_{x_j} k(x_j, x_i)`. Needs no scores.
pub fn repulsion_field(
    ens: &Ensemble,
    kernel: &KernelSpec,
    ctr: &mut CostCounters,
) -> Result<Array2<f64>> {
    ensure_finite(ens)?;
    let bw = kernel.resolve(ens.particles.view());
    let (_, rep) = assemble(ens, &bw, None, true);
    ctr.add_kernel_table(ens.n());
    Ok(rep.unwrap())
}
