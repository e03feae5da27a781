use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::targets::{PredictiveTarget, Split};

pub const DEFAULT_ECE_BINS: usize = 10;

const PROB_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveMetrics {
    pub nll: f64,
    pub accuracy: f64,
    pub ece: f64,
}

/// Index of the equal-width bin holding `p`: bins are `[b/B, (b+1)/B)` with
/// the last one closed on the right.
fn bin_index(p: f64, bins: usize) -> usize {
    let b = bins as f64;
    let mut idx = ((p * b).floor().max(0.0) as usize).min(bins - 1);
    while idx > 0 && p < idx as f64 / b {
        idx -= 1;
    }
    while idx + 1 < bins && p >= (idx + 1) as f64 / b {
        idx += 1;
    }
    idx
}

/// NLL, accuracy at threshold 0.5 and expected calibration error.
///
/// Probabilities are clamped to `[1e-12, 1 - 1e-12]` for the log terms only.
/// Non-finite probabilities give NaN in all three fields.
pub fn predictive_metrics(probs: &[f64], labels: &[f64], bins: usize) -> Result<PredictiveMetrics> {
    if probs.len() != labels.len() {
        return Err(Error::Precondition(format!(
            "{} probabilities for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::Precondition("predictive metrics need at least one example".into()));
    }
    if bins == 0 {
        return Err(Error::Precondition("ECE needs at least one bin".into()));
    }
    if let Some(y) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
        return Err(Error::Precondition(format!("label {y} is not 0 or 1")));
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Ok(PredictiveMetrics { nll: f64::NAN, accuracy: f64::NAN, ece: f64::NAN });
    }
    let m = probs.len() as f64;
    let mut nll = 0.0;
    let mut correct = 0usize;
    let mut bin_n = vec![0usize; bins];
    let mut bin_correct = vec![0usize; bins];
    let mut bin_conf = vec![0.0; bins];
    for (&p, &y) in probs.iter().zip(labels) {
        let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        nll -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
        let hit = (p >= 0.5) == (y == 1.0);
        correct += usize::from(hit);
        let b = bin_index(p, bins);
        bin_n[b] += 1;
        bin_correct[b] += usize::from(hit);
        bin_conf[b] += p;
    }
    let mut ece = 0.0;
    for b in 0..bins {
        if bin_n[b] > 0 {
            let nb = bin_n[b] as f64;
            ece += nb / m * (bin_correct[b] as f64 / nb - bin_conf[b] / nb).abs();
        }
    }
    Ok(PredictiveMetrics { nll: nll / m, accuracy: correct as f64 / m, ece })
}

/// Monte Carlo posterior predictive `(1/N) sum_i P(y = 1 | theta_i, x_m)` for
/// every example of `split`. Rows of `particles` are parameter vectors.
pub fn posterior_predictive(
    particles: ndarray::ArrayView2<'_, f64>,
    target: &dyn PredictiveTarget,
    split: Split,
) -> Result<Vec<f64>> {
    if !target.has_split(split) {
        return Err(Error::Precondition(format!("target '{}' has no {split:?} split", target.name())));
    }
    let n = particles.nrows();
    if n == 0 {
        return Err(Error::Precondition("posterior predictive needs at least one particle".into()));
    }
    let m = target.labels(split).len();
    let per_particle: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let theta = particles.row(i).to_vec();
            let mut out = vec![0.0; m];
            target.predict_proba_into(&theta, split, &mut out);
            out
        })
        .collect();
    let mut acc = vec![0.0; m];
    for probs in &per_particle {
        for (a, p) in acc.iter_mut().zip(probs) {
            *a += p;
        }
    }
    acc.iter_mut().for_each(|a| *a /= n as f64);
    Ok(acc)
}
