//! Update rules: SVGD, its split and multirate variants, and the
//! stochastic-gradient chain baselines.
//!
//! Cost accounting: every ensemble-wide score evaluation adds `N` to
//! `grad_evals`, and every pairwise kernel assembly (drift or repulsion
//! field) adds `N^2` to `kernel_evals`.

mod chain;
mod fields;
mod svgd;

pub use chain::{sghmc_step, sghmc_step_with_noise, sgld_step, sgld_step_with_noise, ChainState};
pub use fields::{compute_fields, drift_field, repulsion_field, score_matrix, FieldPair};
pub use svgd::{
    adapt_mr_svgd_step, mr_svgd_step, strang_step, substeps_for, svgd_step, AdaptReport,
};

use serde::{Deserialize, Serialize};

/// Sampler identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Svgd,
    Strang,
    Mr,
    AdaptMr,
    Sgld,
    Sghmc,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Svgd,
        Method::Strang,
        Method::Mr,
        Method::AdaptMr,
        Method::Sgld,
        Method::Sghmc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Svgd => "svgd",
            Method::Strang => "strang",
            Method::Mr => "mr",
            Method::AdaptMr => "adapt-mr",
            Method::Sgld => "sgld",
            Method::Sghmc => "sghmc",
        }
    }

    pub fn is_chain(self) -> bool {
        matches!(self, Method::Sgld | Method::Sghmc)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| crate::Error::Config(format!("unknown method '{s}'")))
    }
}
