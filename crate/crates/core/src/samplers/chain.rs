use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::CostCounters;
use crate::error::{Error, Result};
use crate::targets::Target;

/// State and hyperparameters of a single stochastic-gradient chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub position: Vec<f64>,
    /// Only used by SGHMC.
    pub momentum: Vec<f64>,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Fraction of likelihood terms per gradient; `None` for full batch.
    pub minibatch: Option<f64>,
}

impl ChainState {
    pub fn new(position: Vec<f64>, eta: f64, alpha: f64, beta: f64) -> Result<Self> {
        let state = Self {
            momentum: vec![0.0; position.len()],
            position,
            eta,
            alpha,
            beta,
            minibatch: None,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn with_minibatch(mut self, fraction: Option<f64>) -> Self {
        self.minibatch = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if let Some(f) = self.minibatch {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("minibatch fraction must lie in (0, 1], got {f}")));
            }
        }
        if self.momentum.len() != self.position.len() {
            return Err(Error::Config("momentum and position differ in length".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(&self.momentum).all(|v| v.is_finite())
    }
}

fn chain_score<R: Rng + ?Sized>(
    chain: &ChainState,
    target: &dyn Target,
    rng: &mut R,
    ctr: &mut CostCounters,
) -> Vec<f64> {
    let mut g = vec![0.0; chain.position.len()];
    let n_obs = target.n_obs();
    let used_batch = match chain.minibatch {
        Some(f) if n_obs > 0 && f < 1.0 => {
            let size = ((f * n_obs as f64).round() as usize).clamp(1, n_obs);
            let mut batch = sample(rng, n_obs, size).into_vec();
            batch.sort_unstable();
            target.minibatch_score_into(&chain.position, &batch, &mut g)
        }
        _ => false,
    };
    if !used_batch {
        target.score_into(&chain.position, &mut g);
    }
    ctr.add_grad_batch(1);
    g
}

fn draw_noise<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// `x + eta * score(x) + sqrt(2 eta) * xi`.
pub fn sgld_step<R: Rng + ?Sized>(
    chain: &ChainState,
    target: &dyn Target,
    rng: &mut R,
    ctr: &mut CostCounters,
) -> ChainState {
    let g = chain_score(chain, target, rng, ctr);
    let xi = draw_noise(rng, g.len());
    sgld_update(chain, &g, &xi)
}

/// SGLD with caller-supplied noise `xi` and full-batch gradient.
pub fn sgld_step_with_noise(
    chain: &ChainState,
    target: &dyn Target,
    xi: &[f64],
    ctr: &mut CostCounters,
) -> ChainState {
    let g = target.score(&chain.position);
    ctr.add_grad_batch(1);
    sgld_update(chain, &g, xi)
}

fn sgld_update(chain: &ChainState, g: &[f64], xi: &[f64]) -> ChainState {
    let noise = (2.0 * chain.eta).sqrt();
    let mut next = chain.clone();
    for ((x, gi), e) in next.position.iter_mut().zip(g).zip(xi) {
        *x += chain.eta * gi + noise * e;
    }
    next
}

/// `v <- beta v + eta * score(x) + sqrt(2 alpha eta) * xi; x <- x + v`.
pub fn sghmc_step<R: Rng + ?Sized>(
    chain: &ChainState,
    target: &dyn Target,
    rng: &mut R,
    ctr: &mut CostCounters,
) -> ChainState {
    let g = chain_score(chain, target, rng, ctr);
    let xi = draw_noise(rng, g.len());
    sghmc_update(chain, &g, &xi)
}

/// SGHMC with caller-supplied noise `xi` and full-batch gradient.
pub fn sghmc_step_with_noise(
    chain: &ChainState,
    target: &dyn Target,
    xi: &[f64],
    ctr: &mut CostCounters,
) -> ChainState {
    let g = target.score(&chain.position);
    ctr.add_grad_batch(1);
    sghmc_update(chain, &g, xi)
}

fn sghmc_update(chain: &ChainState, g: &[f64], xi: &[f64]) -> ChainState {
    let noise = (2.0 * chain.alpha * chain.eta).sqrt();
    let mut next = chain.clone();
    for c in 0..g.len() {
        let v = chain.beta * chain.momentum[c] + chain.eta * g[c] + noise * xi[c];
        next.momentum[c] = v;
        next.position[c] += v;
    }
    next
}
