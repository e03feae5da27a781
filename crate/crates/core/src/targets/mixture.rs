use std::f64::consts::PI;

use ndarray::Array2;

use super::Target;

/// Component centres of an isotropic, equal-weight Gaussian mixture.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec {
    /// `K x d` centre matrix.
    pub centers: Array2<f64>,
    pub component_std: f64,
}

impl MixtureSpec {
    /// `k` centres equally spaced on a circle of the given radius.
    pub fn ring(k: usize, radius: f64, component_std: f64) -> Self {
        let centers = Array2::from_shape_fn((k, 2), |(i, c)| {
            let angle = 2.0 * PI * i as f64 / k as f64;
            radius * if c == 0 { angle.cos() } else { angle.sin() }
        });
        Self {
            centers,
            component_std,
        }
    }

    pub fn k(&self) -> usize {
        self.centers.nrows()
    }
}

#[derive(Clone, Debug)]
pub struct GaussianMixture {
    name: String,
    spec: MixtureSpec,
}

pub const MIX8_COMPONENT_STD: f64 = 0.5;

/// Eight equal-weight components on a radius-4 ring.
pub fn make_mix8() -> (GaussianMixture, MixtureSpec) {
    let spec = MixtureSpec::ring(8, 4.0, MIX8_COMPONENT_STD);
    (GaussianMixture::new("mix8", spec.clone()), spec)
}

impl GaussianMixture {
    pub fn new(name: impl Into<String>, spec: MixtureSpec) -> Self {
        Self {
            name: name.into(),
            spec,
        }
    }

    pub fn spec(&self) -> &MixtureSpec {
        &self.spec
    }

    /// Per-component log terms `-|x - c_k|^2 / (2 s^2)`.
    fn log_terms(&self, x: &[f64]) -> Vec<f64> {
        let s2 = self.spec.component_std.powi(2);
        self.spec
            .centers
            .rows()
            .into_iter()
            .map(|c| {
                let r2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                -r2 / (2.0 * s2)
            })
            .collect()
    }
}

impl Target for GaussianMixture {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.spec.centers.ncols()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let terms = self.log_terms(x);
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
        let d = self.dim() as f64;
        let s2 = self.spec.component_std.powi(2);
        lse - (self.spec.k() as f64).ln() - 0.5 * d * (2.0 * PI * s2).ln()
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) {
        let terms = self.log_terms(x);
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = terms.iter().map(|t| (t - m).exp()).collect();
        let total: f64 = weights.iter().sum();
        let s2 = self.spec.component_std.powi(2);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (w, c) in weights.iter().zip(self.spec.centers.rows()) {
            let r = w / total;
            for ((o, ci), xi) in out.iter_mut().zip(c.iter()).zip(x) {
                *o += r * (ci - xi) / s2;
            }
        }
    }
}
