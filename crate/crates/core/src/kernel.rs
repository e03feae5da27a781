//! RBF and multiscale RBF kernels with a median-heuristic bandwidth.
//!
//! Convention: `k(x, y) = exp(-|x - y|^2 / (2 l^2))` with
//! `l^2 = scale * med^2 / ln(N + 1)`, `med` the median pairwise distance.
//! The multiscale kernel is the unweighted mean of RBF kernels with squared
//! bandwidths `(c_s l)^2`, so `k(x, x) = 1` for both kinds.

use ndarray::{Array2, Array3, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::CostCounters;
use crate::error::{Error, Result};

pub const DEFAULT_BANDWIDTH_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum KernelKind {
    Rbf,
    MultiscaleRbf { factors: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum BandwidthPolicy {
    MedianHeuristic,
    /// Fixed squared base bandwidth `l^2`.
    Fixed { ell2: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub bandwidth: BandwidthPolicy,
    /// Multiplier on the heuristic `l^2`.
    pub scale_factor: f64,
    /// Lower bound on `l^2`, used when the ensemble has collapsed.
    pub floor: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::rbf()
    }
}

impl KernelSpec {
    pub fn rbf() -> Self {
        Self {
            kind: KernelKind::Rbf,
            bandwidth: BandwidthPolicy::MedianHeuristic,
            scale_factor: 1.0,
            floor: DEFAULT_BANDWIDTH_FLOOR,
        }
    }

    pub fn multiscale(factors: Vec<f64>) -> Self {
        Self {
            kind: KernelKind::MultiscaleRbf { factors },
            ..Self::rbf()
        }
    }

    /// The three-scale kernel used on the ring mixture.
    pub fn mix8_default() -> Self {
        Self::multiscale(vec![0.5, 1.0, 2.0])
    }

    pub fn with_fixed_bandwidth(mut self, ell2: f64) -> Self {
        self.bandwidth = BandwidthPolicy::Fixed { ell2 };
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale_factor = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let KernelKind::MultiscaleRbf { factors } = &self.kind {
            if factors.is_empty() {
                return Err(Error::config("multiscale kernel needs at least one factor"));
            }
            if factors.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
                return Err(Error::config("multiscale factors must be positive"));
            }
        }
        if let BandwidthPolicy::Fixed { ell2 } = self.bandwidth {
            if !(ell2 > 0.0 && ell2.is_finite()) {
                return Err(Error::config("fixed bandwidth must be positive"));
            }
        }
        if !(self.scale_factor > 0.0 && self.scale_factor.is_finite()) {
            return Err(Error::config("kernel scale_factor must be positive"));
        }
        if !(self.floor > 0.0) {
            return Err(Error::config("bandwidth floor must be positive"));
        }
        Ok(())
    }

    /// Resolves the bandwidth set for the given ensemble. With a single
    /// particle the median heuristic is undefined and the floor is used.
    pub fn resolve(&self, particles: ArrayView2<'_, f64>) -> Bandwidth {
        let ell2 = match self.bandwidth {
            BandwidthPolicy::Fixed { ell2 } => ell2,
            BandwidthPolicy::MedianHeuristic => {
                if particles.nrows() < 2 {
                    self.floor
                } else {
                    let raw = median_sq_distance_heuristic(particles);
                    if raw.is_nan() {
                        f64::NAN
                    } else {
                        (self.scale_factor * raw).max(self.floor)
                    }
                }
            }
        };
        Bandwidth::for_kind(&self.kind, ell2)
    }
}

/// Resolved squared bandwidths, one per kernel component.
#[derive(Clone, Debug, PartialEq)]
pub struct Bandwidth {
    /// Base `l^2`.
    pub ell2: f64,
    /// `(c_s l)^2` per component; a single entry for the plain RBF kernel.
    pub sq_scales: Vec<f64>,
}

impl Bandwidth {
    pub fn for_kind(kind: &KernelKind, ell2: f64) -> Self {
        let sq_scales = match kind {
            KernelKind::Rbf => vec![ell2],
            KernelKind::MultiscaleRbf { factors } => {
                factors.iter().map(|c| c * c * ell2).collect()
            }
        };
        Self { ell2, sq_scales }
    }

    pub fn rbf(ell2: f64) -> Self {
        Self::for_kind(&KernelKind::Rbf, ell2)
    }

    /// Returns `(k, w)` for squared distance `r2`, where `k` is the kernel
    /// value and `w = (1/S) sum_s k_s / sigma_s^2`, so that
    /// `grad_x k(x, y) = -(x - y) * w`.
    #[inline]
    pub(crate) fn value_and_weight(&self, r2: f64) -> (f64, f64) {
        if let [s2] = self.sq_scales[..] {
            let k = (-r2 / (2.0 * s2)).exp();
            return (k, k / s2);
        }
        let mut k = 0.0;
        let mut w = 0.0;
        for &s2 in &self.sq_scales {
            let ks = (-r2 / (2.0 * s2)).exp();
            k += ks;
            w += ks / s2;
        }
        let inv = 1.0 / self.sq_scales.len() as f64;
        (k * inv, w * inv)
    }

    /// Trace of the mixed Hessian `grad_x grad_y k(x, y)` in dimension `d`,
    /// i.e. `(1/S) sum_s (d / sigma_s^2 - r2 / sigma_s^4) k_s`.
    #[inline]
    pub(crate) fn mixed_trace(&self, r2: f64, d: usize) -> f64 {
        let d = d as f64;
        let mut t = 0.0;
        for &s2 in &self.sq_scales {
            let ks = (-r2 / (2.0 * s2)).exp();
            t += (d / s2 - r2 / (s2 * s2)) * ks;
        }
        t / self.sq_scales.len() as f64
    }
}

/// `med^2 / ln(N + 1)` without scale factor or floor.
fn median_sq_distance_heuristic(particles: ArrayView2<'_, f64>) -> f64 {
    let n = particles.nrows();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let xi = particles.row(i);
        for j in (i + 1)..n {
            let r2: f64 = xi
                .iter()
                .zip(particles.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(r2.sqrt());
        }
    }
    if dists.iter().any(|v| v.is_nan()) {
        return f64::NAN;
    }
    let med = median_in_place(&mut dists);
    med * med / ((n + 1) as f64).ln()
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let len = values.len();
    let mid = len / 2;
    let (_, hi, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *hi;
    if len % 2 == 1 {
        hi
    } else {
        let lo = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Median-heuristic squared bandwidth with the default floor.
pub fn median_bandwidth(particles: ArrayView2<'_, f64>) -> Result<f64> {
    median_bandwidth_with_floor(particles, DEFAULT_BANDWIDTH_FLOOR)
}

pub fn median_bandwidth_with_floor(particles: ArrayView2<'_, f64>, floor: f64) -> Result<f64> {
    if particles.nrows() < 2 {
        return Err(Error::Precondition(
            "median heuristic needs at least two particles".into(),
        ));
    }
    let raw = median_sq_distance_heuristic(particles);
    Ok(if raw > floor { raw } else if raw.is_nan() { raw } else { floor })
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn kernel_eval(x: &[f64], y: &[f64], bw: &Bandwidth) -> f64 {
    bw.value_and_weight(sq_dist(x, y)).0
}

/// Gradient of `k(x, y)` with respect to its first argument.
pub fn kernel_grad_first(x: &[f64], y: &[f64], bw: &Bandwidth) -> Vec<f64> {
    let (_, w) = bw.value_and_weight(sq_dist(x, y));
    x.iter().zip(y).map(|(a, b)| (b - a) * w).collect()
}

/// Dense pairwise tables: `K[j][i] = k(x_j, x_i)` and
/// `G[j][i] = grad_{x_j} k(x_j, x_i)`. Counts `N^2` kernel evaluations.
pub fn pairwise_tables(
    particles: ArrayView2<'_, f64>,
    bw: &Bandwidth,
    ctr: &mut CostCounters,
) -> (Array2<f64>, Array3<f64>) {
    let (n, d) = particles.dim();
    let x = particles.as_standard_layout();
    let xs = x.as_slice().expect("standard layout");
    let mut k = Array2::zeros((n, n));
    let mut g = Array3::zeros((n, n, d));
    k.as_slice_mut()
        .unwrap()
        .par_chunks_mut(n)
        .zip(g.as_slice_mut().unwrap().par_chunks_mut(n * d))
        .enumerate()
        .for_each(|(j, (krow, grow))| {
            let xj = &xs[j * d..(j + 1) * d];
            for i in 0..n {
                let xi = &xs[i * d..(i + 1) * d];
                let (kv, w) = bw.value_and_weight(sq_dist(xj, xi));
                krow[i] = kv;
                for c in 0..d {
                    grow[i * d + c] = (xi[c] - xj[c]) * w;
                }
            }
        });
    ctr.add_kernel_table(n);
    (k, g)
}
