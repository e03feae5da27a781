use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::kernel::{sq_dist, KernelSpec};
use crate::targets::Target;

/// Kernelized Stein discrepancy (V-statistic, diagonal included) of the
/// empirical measure on `particles` against the density with score
/// `score_fn`.
pub fn ksd<F>(particles: ArrayView2<'_, f64>, score_fn: F, kernel: &KernelSpec) -> f64
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let (n, d) = particles.dim();
    if n == 0 {
        return f64::NAN;
    }
    let xs: Vec<f64> = particles.iter().copied().collect();
    if xs.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    let mut scores = vec![0.0; n * d];
    scores
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(i, s)| score_fn(&xs[i * d..(i + 1) * d], s));
    if scores.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    let bw = kernel.resolve(particles);

    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &xs[i * d..(i + 1) * d];
            let si = &scores[i * d..(i + 1) * d];
            let mut acc = 0.0;
            for j in 0..n {
                let xj = &xs[j * d..(j + 1) * d];
                let sj = &scores[j * d..(j + 1) * d];
                let r2 = sq_dist(xi, xj);
                let (k, w) = bw.value_and_weight(r2);
                // grad_x k = -(x - x') w, grad_x' k = (x - x') w
                let mut ss = 0.0;
                let mut cross = 0.0;
                for c in 0..d {
                    let diff = xi[c] - xj[c];
                    ss += si[c] * sj[c];
                    cross += (si[c] - sj[c]) * diff;
                }
                acc += ss * k + cross * w + bw.mixed_trace(r2, d);
            }
            acc
        })
        .collect();
    let total: f64 = rows.iter().sum();
    (total / (n as f64 * n as f64)).max(0.0).sqrt()
}

/// [`ksd`] with the target's own score.
pub fn ksd_target(particles: ArrayView2<'_, f64>, target: &dyn Target, kernel: &KernelSpec) -> f64 {
    ksd(particles, |x, out| target.score_into(x, out), kernel)
}
