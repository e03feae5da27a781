//! Sample-quality and predictive diagnostics.
//!
//! All metrics return NaN rather than panicking when fed non-finite
//! particles, so a checkpoint can be recorded and flagged by the harness.

mod ess;
mod ksd;
mod modes;
mod predictive;

pub use ess::ess_1d;
pub use ksd::{ksd, ksd_target};
pub use modes::{mode_metrics, ModeMetrics, DEFAULT_MODE_THRESHOLD};
pub use predictive::{posterior_predictive, predictive_metrics, PredictiveMetrics, DEFAULT_ECE_BINS};

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::targets::Target;

/// Metric values of one checkpoint, keyed by metric name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricSnapshot(pub BTreeMap<String, f64>);

impl MetricSnapshot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: f64) {
        self.0.insert(key.into(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// True if every value is finite.
    pub fn all_finite(&self) -> bool {
        self.0.values().all(|v| v.is_finite())
    }
}

/// `(1/N) sum_i log p(x_i)`.
pub fn mean_logp(particles: ArrayView2<'_, f64>, target: &dyn Target) -> f64 {
    let n = particles.nrows();
    if n == 0 {
        return f64::NAN;
    }
    let vals: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| target.log_density(&particles.row(i).to_vec()))
        .collect();
    vals.iter().sum::<f64>() / n as f64
}

/// Returns `(||mu_hat - mu_ref||_2, ||Sigma_hat - Sigma_ref||_F)` with the
/// biased (1/N) sample covariance.
pub fn moment_errors(
    particles: ArrayView2<'_, f64>,
    ref_mean: &[f64],
    ref_cov: &Array2<f64>,
) -> Result<(f64, f64)> {
    let (n, d) = particles.dim();
    if ref_mean.len() != d || ref_cov.dim() != (d, d) {
        return Err(Error::Precondition(format!(
            "reference moments have dimension {} / {:?}, particles have {d}",
            ref_mean.len(),
            ref_cov.dim()
        )));
    }
    if n == 0 {
        return Err(Error::Precondition("moment errors need at least one particle".into()));
    }
    let mean: Array1<f64> = particles.mean_axis(Axis(0)).unwrap();
    let centered = &particles - &mean;
    let cov = centered.t().dot(&centered) / n as f64;
    let e_mu = mean.iter().zip(ref_mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let e_sigma = (&cov - ref_cov).iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((e_mu, e_sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{init_ensemble, InitSpec, RngStream};
    use crate::targets::DiagGaussian;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn mean_logp_at_mode() {
        let t = DiagGaussian::standard(2);
        let v = mean_logp(array![[0.0, 0.0]].view(), &t);
        assert!((v + (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
    }

    #[test]
    fn mean_logp_is_mean_of_calls() {
        let t = DiagGaussian::standard(3);
        let e = init_ensemble(9, 3, &InitSpec::gaussian(2.0), &RngStream::new(1)).unwrap();
        let direct: f64 = (0..9).map(|i| t.log_density(e.row(i))).sum::<f64>() / 9.0;
        assert!((mean_logp(e.particles.view(), &t) - direct).abs() < 1e-12);
    }

    #[test]
    fn moment_errors_examples() {
        let (a, b) = moment_errors(array![[1.0], [-1.0]].view(), &[0.0], &array![[1.0]]).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
        let cov = array![[2.0, 0.5], [0.5, 1.0]];
        let (_, b) = moment_errors(array![[3.0, 4.0]].view(), &[0.0, 0.0], &cov).unwrap();
        assert!((b - (4.0f64 + 0.25 + 0.25 + 1.0).sqrt()).abs() < 1e-15);
        assert!(moment_errors(array![[1.0]].view(), &[0.0, 0.0], &cov).is_err());
    }

    /// Two-pass mean and covariance with explicit loops.
    fn two_pass(x: &Array2<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (n, d) = x.dim();
        let mut mu = vec![0.0; d];
        for i in 0..n {
            for j in 0..d {
                mu[j] += x[[i, j]];
            }
        }
        mu.iter_mut().for_each(|m| *m /= n as f64);
        let mut cov = vec![vec![0.0; d]; d];
        for i in 0..n {
            for a in 0..d {
                for b in 0..d {
                    cov[a][b] += (x[[i, a]] - mu[a]) * (x[[i, b]] - mu[b]) / n as f64;
                }
            }
        }
        (mu, cov)
    }

    #[test]
    fn moment_errors_match_two_pass_oracle() {
        let e = init_ensemble(40, 4, &InitSpec::gaussian(1.5), &RngStream::new(3)).unwrap();
        let ref_mean = vec![0.1, -0.2, 0.3, 0.0];
        let ref_cov = Array2::from_shape_fn((4, 4), |(i, j)| if i == j { 1.0 + i as f64 } else { 0.1 });
        let (mu, cov) = two_pass(&e.particles);
        let em = mu.iter().zip(&ref_mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let mut es = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                es += (cov[a][b] - ref_cov[[a, b]]).powi(2);
            }
        }
        let (a, b) = moment_errors(e.particles.view(), &ref_mean, &ref_cov).unwrap();
        assert!((a - em).abs() < 1e-12);
        assert!((b - es.sqrt()).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn duplication_and_permutation_invariance(seed in 0u64..500, rot in 0usize..10) {
            let t = DiagGaussian::standard(2);
            let e = init_ensemble(10, 2, &InitSpec::gaussian(1.0), &RngStream::new(seed)).unwrap();
            let mut rows: Vec<Vec<f64>> = (0..10).map(|i| e.row(i).to_vec()).collect();
            rows.rotate_left(rot);
            let permuted = crate::ensemble::Ensemble::from_rows(&rows).unwrap();
            rows.extend(rows.clone());
            let doubled = crate::ensemble::Ensemble::from_rows(&rows).unwrap();
            let base = mean_logp(e.particles.view(), &t);
            prop_assert!((mean_logp(permuted.particles.view(), &t) - base).abs() < 1e-12);
            prop_assert!((mean_logp(doubled.particles.view(), &t) - base).abs() < 1e-12);
            let id = Array2::eye(2);
            let m0 = moment_errors(e.particles.view(), &[0.0, 0.0], &id).unwrap();
            let m1 = moment_errors(doubled.particles.view(), &[0.0, 0.0], &id).unwrap();
            prop_assert!((m0.0 - m1.0).abs() < 1e-12 && (m0.1 - m1.1).abs() < 1e-12);
        }
    }
}
