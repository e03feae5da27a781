use std::f64::consts::PI;

use ndarray::Array2;

use super::Target;
use crate::error::{Error, Result};

/// Gaussian with diagonal covariance, normalized.
#[derive(Clone, Debug)]
pub struct DiagGaussian {
    name: String,
    mean: Vec<f64>,
    var: Vec<f64>,
    log_norm: f64,
}

impl DiagGaussian {
    pub fn new(name: impl Into<String>, mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != var.len() {
            return Err(Error::config("gaussian mean/variance dimension mismatch"));
        }
        if var.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config("gaussian variances must be positive"));
        }
        let log_norm = -0.5 * var.iter().map(|v| (2.0 * PI * v).ln()).sum::<f64>();
        Ok(Self {
            name: name.into(),
            mean,
            var,
            log_norm,
        })
    }

    pub fn standard(d: usize) -> Self {
        Self::new(format!("gaussian-{d}d"), vec![0.0; d], vec![1.0; d])
            .expect("valid standard gaussian")
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variances(&self) -> &[f64] {
        &self.var
    }

    /// A copy translated by `shift`.
    pub fn shifted(&self, shift: &[f64]) -> Self {
        let mean = self.mean.iter().zip(shift).map(|(m, s)| m + s).collect();
        Self::new(self.name.clone(), mean, self.var.clone()).expect("valid shift")
    }
}

/// Anisotropic Gaussian: mean `(1, ..., 1)/sqrt(d)`, variances log-spaced over
/// `[1/sqrt(kappa), sqrt(kappa)]`.
pub fn make_gauss50(d: usize, kappa: f64) -> Result<DiagGaussian> {
    if d < 2 {
        return Err(Error::config("gauss50 needs d >= 2"));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::config("condition number must be >= 1"));
    }
    let lo = -0.5 * kappa.ln();
    let hi = 0.5 * kappa.ln();
    let var = (0..d)
        .map(|i| (lo + (hi - lo) * i as f64 / (d - 1) as f64).exp())
        .collect();
    let mean = vec![1.0 / (d as f64).sqrt(); d];
    DiagGaussian::new(format!("gauss{d}"), mean, var)
}

impl Target for DiagGaussian {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let quad: f64 = x
            .iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((xi, m), v)| (xi - m) * (xi - m) / v)
            .sum();
        self.log_norm - 0.5 * quad
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, xi), m), v) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.var) {
            *o = -(xi - m) / v;
        }
    }

    fn reference_moments(&self) -> Option<(Vec<f64>, Array2<f64>)> {
        Some((self.mean.clone(), Array2::from_diag(&ndarray::arr1(&self.var))))
    }
}
