use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::kernel::sq_dist;
use crate::targets::MixtureSpec;

pub const DEFAULT_MODE_THRESHOLD: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeMetrics {
    /// Fraction of modes holding at least `threshold` of the mass.
    pub coverage: f64,
    /// Entropy of the mode masses divided by `ln K`.
    pub entropy: f64,
    /// Population standard deviation of the mode masses.
    pub imbalance: f64,
}

impl ModeMetrics {
    fn nan() -> Self {
        Self { coverage: f64::NAN, entropy: f64::NAN, imbalance: f64::NAN }
    }
}

/// Assigns each particle to its nearest center (lowest index on ties) and
/// summarizes the resulting mode masses.
pub fn mode_metrics(particles: ArrayView2<'_, f64>, spec: &MixtureSpec, threshold: f64) -> ModeMetrics {
    let n = particles.nrows();
    let k = spec.k();
    if n == 0 || k < 2 || particles.iter().any(|v| !v.is_finite()) {
        return ModeMetrics::nan();
    }
    let mut counts = vec![0usize; k];
    for row in particles.rows() {
        let x = row.to_vec();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in spec.centers.rows().into_iter().enumerate() {
            let d = sq_dist(&x, center.as_slice().unwrap());
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        counts[best] += 1;
    }
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let coverage = p.iter().filter(|&&pk| pk >= threshold).count() as f64 / k as f64;
    let h: f64 = p.iter().filter(|&&pk| pk > 0.0).map(|pk| -pk * pk.ln()).sum();
    let mean = 1.0 / k as f64;
    let var = p.iter().map(|pk| (pk - mean).powi(2)).sum::<f64>() / k as f64;
    ModeMetrics {
        coverage,
        entropy: (h / (k as f64).ln()).max(0.0),
        imbalance: var.sqrt(),
    }
}
