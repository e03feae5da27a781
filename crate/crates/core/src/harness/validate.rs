//! Self-checks run by `msvgd validate`: analytic scores against finite
//! differences, the split fields against a direct double loop, the substep
//! controller against an integer search, and zero-sum repulsion.

use ndarray::Axis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::data::{standardize_and_split, synthetic_classification, SplitSpec};
use crate::ensemble::{init_ensemble, CostCounters, InitSpec, RngStream, StepConfig};
use crate::error::Result;
use crate::kernel::{kernel_eval, kernel_grad_first, KernelSpec};
use crate::samplers::{compute_fields, repulsion_field, substeps_for};
use crate::targets::{
    hlr_generate, make_2d_target, make_gauss50, make_logreg, make_mix8, score_fd_error, Bnn,
    DiagGaussian, HlrConfig, HlrTarget, Target, TARGET_2D_NAMES,
};

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

/// Every target family at a small size, with its finite-difference tolerance.
pub fn score_check_targets(seed: u64) -> Result<Vec<(Box<dyn Target>, f64)>> {
    let mut out: Vec<(Box<dyn Target>, f64)> = vec![
        (Box::new(DiagGaussian::standard(2)), 1e-5),
        (Box::new(make_gauss50(50, 100.0)?), 1e-5),
        (Box::new(make_mix8().0), 1e-5),
    ];
    for name in TARGET_2D_NAMES {
        out.push((make_2d_target(name)?, 1e-5));
    }
    let ds = synthetic_classification(300, 6, seed)?;
    out.push((Box::new(make_logreg(&ds, 1.0)?), 1e-5));
    let sp = standardize_and_split(&ds, &SplitSpec::train_val_test(seed))?;
    out.push((Box::new(Bnn::new("synthetic", &sp.train, None, None, 8, 1.0)?), 1e-4));
    let model = hlr_generate(&HlrConfig { n: 400, p: 6, groups: 20, seed, ..HlrConfig::default() })?;
    out.push((Box::new(HlrTarget::with_holdout(&model, 0.2)?), 1e-5));
    Ok(out)
}

/// Largest relative finite-difference error of `target` over `points`
/// standard-normal draws.
pub fn worst_score_error(target: &dyn Target, points: usize, rng: &mut ChaCha8Rng) -> f64 {
    (0..points)
        .map(|_| {
            let x: Vec<f64> = (0..target.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            score_fd_error(target, &x, 1e-5)
        })
        .fold(0.0, f64::max)
}

fn check_scores(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(score_check_targets(seed)?
        .into_iter()
        .map(|(t, tol)| {
            let worst = worst_score_error(t.as_ref(), 100, &mut rng);
            CheckOutcome::new(
                format!("score {}", t.name()),
                worst < tol,
                format!("worst rel err {worst:.2e} (tol {tol:.0e}, d={})", t.dim()),
            )
        })
        .collect())
}

/// Drift plus repulsion against a direct double-loop velocity. The error
/// is measured in ulps of `sum_j |term_j| / N`.
pub fn field_identity_ulps(target: &dyn Target, n: usize, seed: u64) -> Result<f64> {
    let d = target.dim();
    let ens = init_ensemble(n, d, &InitSpec::gaussian(1.5), &RngStream::new(seed))?;
    let cfg = StepConfig::default();
    let kernel = KernelSpec::rbf();
    let phi = compute_fields(&ens, target, &kernel, &cfg, &mut CostCounters::default())?.velocity();
    let bw = kernel.resolve(ens.particles.view());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for c in 0..d {
            let (mut acc, mut scale) = (0.0, 0.0);
            for j in 0..n {
                let xj = ens.row(j);
                let s = target.score(xj)[c].clamp(-cfg.clip_bound, cfg.clip_bound);
                let term = kernel_eval(xj, ens.row(i), &bw) * s + kernel_grad_first(xj, ens.row(i), &bw)[c];
                acc += term;
                scale += term.abs();
            }
            let ulp = f64::EPSILON * (scale / n as f64).max(f64::MIN_POSITIVE);
            worst = worst.max((phi[[i, c]] - acc / n as f64).abs() / ulp);
        }
    }
    Ok(worst)
}

fn check_fields(seed: u64) -> Result<CheckOutcome> {
    let targets: Vec<Box<dyn Target>> = vec![
        Box::new(DiagGaussian::standard(5)),
        make_2d_target("banana")?,
        Box::new(make_mix8().0),
    ];
    let mut worst: f64 = 0.0;
    for (k, t) in targets.iter().enumerate() {
        for r in 0..10 {
            worst = worst.max(field_identity_ulps(t.as_ref(), 16, seed + 100 * k as u64 + r)?);
        }
    }
    Ok(CheckOutcome::new("field identity", worst <= 8.0, format!("worst {worst:.2} ulps")))
}

/// Smallest `k` with `k^2 >= r`, by doubling and bisection.
pub fn ceil_sqrt_search(r: f64) -> u128 {
    let (mut lo, mut hi) = (0u128, 1u128);
    while ((hi * hi) as f64) < r {
        hi *= 2;
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ((mid * mid) as f64) >= r {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

fn check_controller(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let tol = 10f64.powf(rng.random_range(-6.0..0.0));
        let rho = tol * 10f64.powf(rng.random_range(-3.0..4.0));
        let m_min = rng.random_range(1..6usize);
        let m_max = m_min + rng.random_range(0..20usize);
        let expect = ceil_sqrt_search(rho / tol).clamp(m_min as u128, m_max as u128) as usize;
        if substeps_for(rho, tol, m_min, m_max)? != expect {
            mismatches += 1;
        }
    }
    Ok(CheckOutcome::new("controller", mismatches == 0, format!("{mismatches} mismatches in 1000")))
}

fn check_repulsion(seed: u64) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for r in 0..20 {
        let ens = init_ensemble(24, 3, &InitSpec::gaussian(2.0), &RngStream::new(seed + r))?;
        let spread = ens.particles.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for kernel in [KernelSpec::rbf(), KernelSpec::mix8_default()] {
            let rep = repulsion_field(&ens, &kernel, &mut CostCounters::default())?;
            let sum = rep.sum_axis(Axis(0));
            let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(norm / spread);
        }
    }
    Ok(CheckOutcome::new("zero-sum repulsion", worst <= 1e-10, format!("worst |sum|/scale {worst:.2e}")))
}

/// Runs every self-check. Errors only if a check cannot be set up.
pub fn self_checks(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = check_scores(seed)?;
    out.push(check_fields(seed)?);
    out.push(check_controller(seed)?);
    out.push(check_repulsion(seed)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let out = self_checks(3).unwrap();
        assert!(out.len() >= 13);
        for c in &out {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn search_oracle_examples() {
        assert_eq!(ceil_sqrt_search(0.0), 0);
        assert_eq!(ceil_sqrt_search(1.0), 1);
        assert_eq!(ceil_sqrt_search(1.0001), 2);
        assert_eq!(ceil_sqrt_search(16.0), 4);
    }
}
