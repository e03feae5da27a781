//! Benchmark target densities with analytic scores.

use ndarray::Array2;

mod bnn;
mod gaussian;
mod hlr;
mod logreg;
mod mixture;
mod synthetic;

pub use bnn::Bnn;
pub use gaussian::{make_gauss50, DiagGaussian};
pub use hlr::{hlr_generate, make_hlr_target, GroupLaw, HlrConfig, HlrHyper, HlrModel, HlrTarget};
pub use logreg::{make_logreg, LogisticRegression};
pub use mixture::{make_mix8, GaussianMixture, MixtureSpec};
pub use synthetic::{make_2d_target, Banana, Funnel, Ring, Squiggly, TwoMoons, TARGET_2D_NAMES};

/// Held-out partitions a predictive target can be scored on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// A differentiable (possibly unnormalized) log-density on `R^d`.
pub trait Target: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn log_density(&self, x: &[f64]) -> f64;

    /// Writes `grad log p(x)` into `out`.
    fn score_into(&self, x: &[f64], out: &mut [f64]);

    fn score(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.score_into(x, &mut out);
        out
    }

    /// Exact mean and covariance, when known.
    fn reference_moments(&self) -> Option<(Vec<f64>, Array2<f64>)> {
        None
    }

    fn as_predictive(&self) -> Option<&dyn PredictiveTarget> {
        None
    }

    /// Number of likelihood terms available for minibatching (0 if none).
    fn n_obs(&self) -> usize {
        0
    }

    /// Score with the likelihood restricted to `batch` and rescaled by
    /// `n_obs / batch.len()`, plus the full prior. Returns `false` when the
    /// target has no likelihood to subsample, leaving `out` untouched.
    fn minibatch_score_into(&self, _x: &[f64], _batch: &[usize], _out: &mut [f64]) -> bool {
        false
    }
}

/// A target whose parameters induce a binary posterior predictive.
pub trait PredictiveTarget: Target {
    fn has_split(&self, split: Split) -> bool;

    /// Labels of a split, each 0.0 or 1.0.
    fn labels(&self, split: Split) -> &[f64];

    /// `P(y = 1 | theta, x_m)` for every example `m` of `split`.
    fn predict_proba_into(&self, theta: &[f64], split: Split, out: &mut [f64]);
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood `y ln s(z) + (1 - y) ln(1 - s(z))`.
#[inline]
pub(crate) fn bernoulli_logit_loglik(y: f64, z: f64) -> f64 {
    y * z - softplus(z)
}

/// Worst error between the analytic score and central differences of the
/// log density with the given step, relative to `max(1, max_c |score_c|)`.
pub fn score_fd_error(t: &dyn Target, x: &[f64], step: f64) -> f64 {
    let g = t.score(x);
    let mut worst: f64 = 0.0;
    let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut xp = x.to_vec();
    for c in 0..x.len() {
        xp[c] = x[c] + step;
        let up = t.log_density(&xp);
        xp[c] = x[c] - step;
        let down = t.log_density(&xp);
        xp[c] = x[c];
        let fd = (up - down) / (2.0 * step);
        worst = worst.max((fd - g[c]).abs() / scale);
    }
    worst
}
