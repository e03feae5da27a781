//! Particle-based Bayesian sampling with multirate Stein variational gradient
//! descent.
//!
//! The SVGD velocity field splits into an attractive drift (kernel-weighted
//! scores) and a repulsive interaction (kernel gradients). This crate provides
//! samplers that integrate the two parts on different time scales:
//!
//! - [`samplers::svgd_step`]: vanilla forward-Euler SVGD.
//! - [`samplers::strang_step`]: symmetric repulsion/drift/repulsion splitting.
//! - [`samplers::mr_svgd_step`]: `m` repulsion substeps, one coarse drift step.
//! - [`samplers::adapt_mr_svgd_step`]: one repulsion step followed by drift
//!   substeps whose count is picked by a step-doubling error estimate.
//! - [`samplers::sgld_step`] / [`samplers::sghmc_step`]: single-chain baselines.
//!
//! Alongside the samplers live the benchmark targets ([`targets`]), the
//! diagnostics ([`metrics`]), dataset ingestion ([`data`]) and a checkpointing
//! run harness ([`harness`]) with gradient and kernel cost accounting.
//!
//! ```
//! use msvgd::prelude::*;
//!
//! let target = DiagGaussian::standard(2);
//! let rng = RngStream::new(7);
//! let mut ens = init_ensemble(32, 2, &InitSpec::gaussian(0.5), &rng).unwrap();
//! let kernel = KernelSpec::rbf();
//! let cfg = StepConfig::default();
//! let mut ctr = CostCounters::default();
//! for _ in 0..10 {
//!     ens = svgd_step(&ens, &target, &kernel, &cfg, &mut ctr).unwrap();
//! }
//! assert_eq!(ens.iteration, 10);
//! assert_eq!(ctr.grad_evals, 10 * 32);
//! ```

pub mod data;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod metrics;
pub mod samplers;
pub mod targets;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::ensemble::{
        clip_scores, init_ensemble, CostCounters, Ensemble, InitSpec, RngStream, StepConfig,
    };
    pub use crate::error::{Error, Result};
    pub use crate::kernel::{Bandwidth, BandwidthPolicy, KernelKind, KernelSpec};
    pub use crate::metrics::{
        ess_1d, ksd, mean_logp, mode_metrics, moment_errors, posterior_predictive,
        predictive_metrics,
    };
    pub use crate::samplers::{
        adapt_mr_svgd_step, compute_fields, mr_svgd_step, sghmc_step, sgld_step, strang_step,
        svgd_step, ChainState,
    };
    pub use crate::targets::{DiagGaussian, PredictiveTarget, Target};
}
