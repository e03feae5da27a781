/// Effective sample size of a scalar series with initial-positive
/// truncation: `L / (1 + 2 sum_{t=1}^T rho_t)`, where `T` is the last lag
/// before the first non-positive autocorrelation. Clamped to `[1, L]`.
///
/// A constant series yields `L`. Series shorter than 4 or containing
/// non-finite values yield NaN.
pub fn ess_1d(series: &[f64]) -> f64 {
    let l = series.len();
    if l < 4 || series.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    let mean = series.iter().sum::<f64>() / l as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let gamma0 = centered.iter().map(|v| v * v).sum::<f64>();
    if gamma0 == 0.0 {
        return l as f64;
    }
    let mut sum_rho = 0.0;
    for t in 1..l {
        let gamma: f64 = centered[..l - t]
            .iter()
            .zip(&centered[t..])
            .map(|(a, b)| a * b)
            .sum();
        let rho = gamma / gamma0;
        if rho <= 0.0 {
            break;
        }
        sum_rho += rho;
    }
    (l as f64 / (1.0 + 2.0 * sum_rho)).clamp(1.0, l as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(l: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..l).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn alternating_series_has_full_ess() {
        let s: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(ess_1d(&s), 100.0);
    }

    #[test]
    fn constant_and_degenerate_series() {
        assert_eq!(ess_1d(&[2.5; 10]), 10.0);
        assert!(ess_1d(&[1.0, 2.0, 3.0]).is_nan());
        assert!(ess_1d(&[1.0, f64::NAN, 3.0, 4.0]).is_nan());
    }

    #[test]
    fn iid_series_near_full_ess() {
        let l = 4096;
        let mut v: Vec<f64> = (0..20).map(|s| ess_1d(&normals(l, s))).collect();
        v.sort_by(f64::total_cmp);
        let med = (v[9] + v[10]) / 2.0;
        assert!(med >= 0.8 * l as f64 && med <= 1.2 * l as f64, "median {med}");
    }

    #[test]
    fn ar1_matches_integrated_autocorrelation() {
        let l = 65536;
        let phi: f64 = 0.9;
        let xi = normals(l, 77);
        let mut x = vec![0.0; l];
        x[0] = xi[0] / (1.0 - phi * phi).sqrt();
        for t in 1..l {
            x[t] = phi * x[t - 1] + xi[t];
        }
        let ratio = ess_1d(&x) / l as f64;
        let theory = (1.0 - phi) / (1.0 + phi);
        assert!(ratio >= 0.7 * theory && ratio <= 1.3 * theory, "{ratio} vs {theory}");
    }

    #[test]
    fn affine_invariance_and_bounds() {
        for seed in 0..10 {
            let s = normals(256, seed);
            let e = ess_1d(&s);
            assert!((1.0..=256.0).contains(&e));
            for (a, b) in [(3.0, 1.0), (-0.5, 7.0)] {
                let t: Vec<f64> = s.iter().map(|v| a * v + b).collect();
                assert!((ess_1d(&t) - e).abs() < 1e-8 * e);
            }
        }
    }
}
