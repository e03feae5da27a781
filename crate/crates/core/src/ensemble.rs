//! Particle state, stepper configuration, cost counters and seeded RNG streams.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `N x d` particle ensemble, stored row-major with one particle per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub particles: Array2<f64>,
    pub iteration: u64,
}

impl Ensemble {
    pub fn new(particles: Array2<f64>) -> Result<Self> {
        let (n, d) = particles.dim();
        if n == 0 || d == 0 {
            return Err(Error::Precondition(format!(
                "ensemble must be non-empty, got {n}x{d}"
            )));
        }
        Ok(Self {
            particles: particles.as_standard_layout().into_owned(),
            iteration: 0,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Precondition("ragged particle rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let particles = Array2::from_shape_vec((n, d), flat)
            .map_err(|e| Error::Precondition(e.to_string()))?;
        Self::new(particles)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.particles.nrows()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.particles.ncols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.as_slice()[i * d..(i + 1) * d]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        self.particles
            .as_slice()
            .expect("ensemble particles are kept in standard layout")
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }

    /// Flattened Euclidean norm of the whole `N x d` state.
    pub fn frobenius_norm(&self) -> f64 {
        self.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Step sizes, substep bounds and controller constants shared by the SVGD
/// family of samplers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    /// Macro step size.
    pub h: f64,
    /// Repulsion substeps per macro step for fixed multirate SVGD.
    pub m_fixed: usize,
    pub m_min: usize,
    pub m_max: usize,
    /// Target local error for the adaptive controller.
    pub tol: f64,
    /// Guard added to the state norm in the relative error indicator.
    pub eps: f64,
    /// Raw score components are clipped to `[-clip_bound, clip_bound]`.
    pub clip_bound: f64,
    /// Repulsion substeps inside each Strang half step.
    pub half_substeps: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            h: 0.05,
            m_fixed: 5,
            m_min: 1,
            m_max: 16,
            tol: 1e-3,
            eps: 1e-8,
            clip_bound: 50.0,
            half_substeps: 1,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::config(msg));
        if !(self.h.is_finite() && self.h >= 0.0) {
            return bad("step size h must be finite and non-negative");
        }
        if self.m_fixed < 1 {
            return bad("m_fixed must be >= 1");
        }
        if self.m_min < 1 || self.m_max < self.m_min {
            return bad("substep bounds need 1 <= m_min <= m_max");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be > 0");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be > 0");
        }
        if !(self.clip_bound > 0.0) {
            return bad("clip_bound must be > 0");
        }
        if self.half_substeps < 1 {
            return bad("half_substeps must be >= 1");
        }
        Ok(())
    }
}

/// Work done by a run. Counters only grow.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostCounters {
    /// Per-particle (or per-chain-iterate) score evaluations.
    pub grad_evals: u64,
    /// Batched score calls, one per ensemble-wide score evaluation.
    pub grad_batches: u64,
    /// Pairwise kernel evaluations, `N^2` per pairwise table assembly.
    pub kernel_evals: u64,
    pub wall_seconds: f64,
}

impl CostCounters {
    #[inline]
    pub fn add_grad_batch(&mut self, n: usize) {
        self.grad_evals += n as u64;
        self.grad_batches += 1;
    }

    #[inline]
    pub fn add_kernel_table(&mut self, n: usize) {
        self.kernel_evals += (n as u64) * (n as u64);
    }
}

/// Named substreams used across the crate. Each draws from its own ChaCha
/// stream so adding a consumer never shifts another one.
pub mod streams {
    pub const INIT: &str = "init";
    pub const SGLD_NOISE: &str = "sgld-noise";
    pub const SGHMC_NOISE: &str = "sghmc-noise";
    pub const DATA_SPLIT: &str = "data-split";
    pub const DATA_GEN: &str = "data-gen";
    pub const MINIBATCH: &str = "minibatch";
}

/// A base seed from which independent named generators are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// A fresh generator for `name`. Same `(seed, name)` always yields the
    /// same sequence.
    pub fn substream(&self, name: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(fnv1a(name.as_bytes()));
        rng
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitSpec {
    /// Isotropic normal scaled by `sigma`, optionally shifted.
    Gaussian {
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Every particle placed at the same point.
    PointCloud { point: Vec<f64> },
}

impl InitSpec {
    pub fn gaussian(sigma: f64) -> Self {
        InitSpec::Gaussian {
            sigma,
            center: None,
        }
    }

    pub fn origin(d: usize) -> Self {
        InitSpec::PointCloud {
            point: vec![0.0; d],
        }
    }

    /// Builds an initializer from its short name (`gaussian`, `point-cloud`).
    pub fn from_name(name: &str, sigma: f64, d: usize) -> Result<Self> {
        match name {
            "gaussian" | "standard-normal" => Ok(Self::gaussian(sigma)),
            "point-cloud" | "origin" => Ok(Self::origin(d)),
            other => Err(Error::config(format!("unknown initializer '{other}'"))),
        }
    }
}

/// Draws an `n x d` ensemble from `spec` using the `init` substream of `rng`.
pub fn init_ensemble(n: usize, d: usize, spec: &InitSpec, rng: &RngStream) -> Result<Ensemble> {
    if n == 0 || d == 0 {
        return Err(Error::Precondition(format!(
            "init_ensemble needs n, d >= 1 (got n={n}, d={d})"
        )));
    }
    let particles = match spec {
        InitSpec::Gaussian { sigma, center } => {
            if !(sigma.is_finite() && *sigma >= 0.0) {
                return Err(Error::config("initializer sigma must be finite and >= 0"));
            }
            if let Some(c) = center {
                if c.len() != d {
                    return Err(Error::config("initializer center has wrong dimension"));
                }
            }
            let mut gen = rng.substream(streams::INIT);
            Array2::from_shape_fn((n, d), |(_, j)| {
                let z: f64 = StandardNormal.sample(&mut gen);
                sigma * z + center.as_ref().map_or(0.0, |c| c[j])
            })
        }
        InitSpec::PointCloud { point } => {
            if point.len() != d {
                return Err(Error::config("point-cloud initializer has wrong dimension"));
            }
            Array2::from_shape_fn((n, d), |(_, j)| point[j])
        }
    };
    Ensemble::new(particles)
}

/// Entrywise clip to `[-bound, bound]`. NaN entries pass through unchanged.
pub fn clip_scores(scores: &Array2<f64>, bound: f64) -> Array2<f64> {
    let mut out = scores.clone();
    clip_in_place(out.as_slice_mut().expect("standard layout"), bound);
    out
}

#[inline]
pub(crate) fn clip_in_place(values: &mut [f64], bound: f64) {
    for v in values {
        *v = v.clamp(-bound, bound);
    }
}
