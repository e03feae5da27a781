//! Hierarchical logistic regression with non-centred group effects.
//!
//! `y_i ~ Bernoulli(sigmoid(alpha + x_i . beta + tau z_{g_i}))` with
//! `beta ~ N(0, s_beta^2 I)`, `alpha ~ N(0, s_alpha^2)`, `z_j ~ N(0, 1)` and
//! `log tau ~ N(mu_tau, s_tau^2)`. Parameters are laid out as
//! `theta = (beta, alpha, z, log tau)`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Geometric, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{bernoulli_logit_loglik, sigmoid, PredictiveTarget, Split, Target};
use crate::data::CsrMatrix;
use crate::ensemble::{streams, RngStream};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupLaw {
    /// Zipf-like: `P(g = j) ~ (j + 1)^(-s)`.
    LongTail,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HlrHyper {
    pub sigma_beta: f64,
    pub sigma_alpha: f64,
    pub mu_tau: f64,
    pub sigma_tau: f64,
}

impl Default for HlrHyper {
    fn default() -> Self {
        Self {
            sigma_beta: 1.0,
            sigma_alpha: 1.0,
            mu_tau: 0.0,
            sigma_tau: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HlrConfig {
    pub n: usize,
    pub p: usize,
    pub groups: usize,
    pub law: GroupLaw,
    /// Probability that a feature entry is nonzero.
    pub sparsity: f64,
    pub zipf_exponent: f64,
    pub hyper: HlrHyper,
    pub seed: u64,
}

impl Default for HlrConfig {
    /// Desk-scale long-tail instance.
    fn default() -> Self {
        Self {
            n: 10_000,
            p: 30,
            groups: 500,
            law: GroupLaw::LongTail,
            sparsity: 0.05,
            zipf_exponent: 1.1,
            hyper: HlrHyper::default(),
            seed: 0,
        }
    }
}

impl HlrConfig {
    /// Full-scale long-tail instance (`n = 10^6`, `p = 300`, `G = 50,000`).
    pub fn full_scale() -> Self {
        Self {
            n: 1_000_000,
            p: 300,
            groups: 50_000,
            ..Self::default()
        }
    }

    pub fn param_dim(&self) -> usize {
        self.p + 1 + self.groups + 1
    }
}

/// A generated data set together with the parameters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct HlrModel {
    pub config: HlrConfig,
    pub features: CsrMatrix,
    pub labels: Vec<u8>,
    /// Zero-based group index per observation.
    pub groups: Vec<u32>,
    pub true_beta: Vec<f64>,
    pub true_alpha: f64,
    pub true_z: Vec<f64>,
    pub true_log_tau: f64,
}

pub fn hlr_generate(cfg: &HlrConfig) -> Result<HlrModel> {
    if cfg.n == 0 || cfg.p == 0 || cfg.groups == 0 {
        return Err(Error::config("HLR needs n, p, G >= 1"));
    }
    if !(cfg.sparsity > 0.0 && cfg.sparsity <= 1.0) {
        return Err(Error::config("HLR sparsity must lie in (0, 1]"));
    }
    if cfg.groups > u32::MAX as usize {
        return Err(Error::config("too many groups"));
    }
    let h = cfg.hyper;
    let mut rng = RngStream::new(cfg.seed).substream(streams::DATA_GEN);
    let std_normal = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let true_beta: Vec<f64> = (0..cfg.p).map(|_| h.sigma_beta * std_normal(&mut rng)).collect();
    let true_alpha = h.sigma_alpha * std_normal(&mut rng);
    let true_z: Vec<f64> = (0..cfg.groups).map(|_| std_normal(&mut rng)).collect();
    let true_log_tau = Normal::new(h.mu_tau, h.sigma_tau)
        .map_err(|e| Error::config(e.to_string()))?
        .sample(&mut rng);
    let tau = true_log_tau.exp();

    let cdf: Vec<f64> = match cfg.law {
        GroupLaw::Uniform => Vec::new(),
        GroupLaw::LongTail => {
            let mut acc = 0.0;
            let mut c: Vec<f64> = (0..cfg.groups)
                .map(|j| {
                    acc += ((j + 1) as f64).powf(-cfg.zipf_exponent);
                    acc
                })
                .collect();
            let total = acc;
            c.iter_mut().for_each(|v| *v /= total);
            c
        }
    };
    let gap = Geometric::new(cfg.sparsity).map_err(|e| Error::config(e.to_string()))?;
    let magnitude = 1.0 / (cfg.p as f64 * cfg.sparsity).sqrt();

    let mut features = CsrMatrix::empty(cfg.p);
    let mut labels = Vec::with_capacity(cfg.n);
    let mut groups = Vec::with_capacity(cfg.n);
    let mut row = Vec::new();
    for _ in 0..cfg.n {
        let g = match cfg.law {
            GroupLaw::Uniform => rng.random_range(0..cfg.groups),
            GroupLaw::LongTail => {
                let u: f64 = rng.random();
                cdf.partition_point(|c| *c < u).min(cfg.groups - 1)
            }
        };
        row.clear();
        let mut col = gap.sample(&mut rng);
        while col < cfg.p as u64 {
            let v = if rng.random_bool(0.5) { magnitude } else { -magnitude };
            row.push((col as usize, v));
            col += 1 + gap.sample(&mut rng);
        }
        let logit = true_alpha
            + row.iter().map(|(c, v)| v * true_beta[*c]).sum::<f64>()
            + tau * true_z[g];
        labels.push(u8::from(rng.random_bool(sigmoid(logit))));
        groups.push(g as u32);
        features.push_row(row.iter().copied());
    }
    Ok(HlrModel {
        config: cfg.clone(),
        features,
        labels,
        groups,
        true_beta,
        true_alpha,
        true_z,
        true_log_tau,
    })
}

#[derive(Clone, Debug)]
struct HlrData {
    x: CsrMatrix,
    y: Vec<f64>,
    g: Vec<u32>,
}

impl HlrData {
    fn rows(model: &HlrModel, rows: &[usize]) -> Self {
        Self {
            x: model.features.select_rows(rows),
            y: rows.iter().map(|&r| f64::from(model.labels[r])).collect(),
            g: rows.iter().map(|&r| model.groups[r]).collect(),
        }
    }
}

/// Posterior over `(beta, alpha, z, log tau)` given the training rows, with a
/// held-out test partition for predictive metrics.
#[derive(Clone, Debug)]
pub struct HlrTarget {
    name: String,
    p: usize,
    groups: usize,
    hyper: HlrHyper,
    train: HlrData,
    test: Option<HlrData>,
}

/// Builds the posterior target on all observations (no held-out split).
pub fn make_hlr_target(model: &HlrModel) -> HlrTarget {
    let all: Vec<usize> = (0..model.labels.len()).collect();
    HlrTarget::from_rows(model, &all, None)
}

impl HlrTarget {
    /// Holds out a seeded `holdout` fraction of rows as the test split.
    pub fn with_holdout(model: &HlrModel, holdout: f64) -> Result<Self> {
        let n = model.labels.len();
        let n_test = (holdout * n as f64).round() as usize;
        if !(0.0..1.0).contains(&holdout) || n_test == 0 || n_test >= n {
            return Err(Error::config("HLR holdout must leave both splits non-empty"));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut RngStream::new(model.config.seed).substream(streams::DATA_SPLIT));
        let test = perm.split_off(n - n_test);
        Ok(Self::from_rows(model, &perm, Some(&test)))
    }

    fn from_rows(model: &HlrModel, train: &[usize], test: Option<&[usize]>) -> Self {
        let law = match model.config.law {
            GroupLaw::LongTail => "longtail",
            GroupLaw::Uniform => "uniform",
        };
        Self {
            name: format!("hlr-{law}"),
            p: model.config.p,
            groups: model.config.groups,
            hyper: model.config.hyper,
            train: HlrData::rows(model, train),
            test: test.map(|t| HlrData::rows(model, t)),
        }
    }

    #[inline]
    fn logit(&self, data: &HlrData, i: usize, beta: &[f64], alpha: f64, u: impl Fn(usize) -> f64) -> f64 {
        let (idx, val) = data.x.row(i);
        let mut z = alpha + u(data.g[i] as usize);
        for (c, v) in idx.iter().zip(val) {
            z += v * beta[*c];
        }
        z
    }

    fn unpack<'a>(&self, theta: &'a [f64]) -> (&'a [f64], f64, &'a [f64], f64) {
        let (beta, rest) = theta.split_at(self.p);
        let (alpha, rest) = rest.split_at(1);
        let (z, log_tau) = rest.split_at(self.groups);
        (beta, alpha[0], z, log_tau[0])
    }

    fn accumulate(&self, theta: &[f64], rows: impl Iterator<Item = usize>, scale: f64, out: &mut [f64]) {
        let (beta, alpha, z, log_tau) = self.unpack(theta);
        let tau = log_tau.exp();
        out.iter_mut().for_each(|o| *o = 0.0);
        let (g_beta, rest) = out.split_at_mut(self.p);
        let (g_alpha, rest) = rest.split_at_mut(1);
        let (g_z, g_log_tau) = rest.split_at_mut(self.groups);
        let mut d_log_tau = 0.0;
        for i in rows {
            let g = self.train.g[i] as usize;
            let r = self.train.y[i] - sigmoid(self.logit(&self.train, i, beta, alpha, |g| tau * z[g]));
            let (idx, val) = self.train.x.row(i);
            for (c, v) in idx.iter().zip(val) {
                g_beta[*c] += r * v;
            }
            g_alpha[0] += r;
            g_z[g] += r * tau;
            d_log_tau += r * z[g] * tau;
        }
        let h = &self.hyper;
        for (gb, b) in g_beta.iter_mut().zip(beta) {
            *gb = scale * *gb - b / (h.sigma_beta * h.sigma_beta);
        }
        g_alpha[0] = scale * g_alpha[0] - alpha / (h.sigma_alpha * h.sigma_alpha);
        for (gz, zj) in g_z.iter_mut().zip(z) {
            *gz = scale * *gz - zj;
        }
        g_log_tau[0] = scale * d_log_tau - (log_tau - h.mu_tau) / (h.sigma_tau * h.sigma_tau);
    }
}

impl Target for HlrTarget {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.p + 1 + self.groups + 1
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let (beta, alpha, z, log_tau) = self.unpack(theta);
        let tau = log_tau.exp();
        let lik: f64 = (0..self.train.y.len())
            .map(|i| {
                bernoulli_logit_loglik(
                    self.train.y[i],
                    self.logit(&self.train, i, beta, alpha, |g| tau * z[g]),
                )
            })
            .sum();
        let h = &self.hyper;
        lik - beta.iter().map(|b| b * b).sum::<f64>() / (2.0 * h.sigma_beta * h.sigma_beta)
            - alpha * alpha / (2.0 * h.sigma_alpha * h.sigma_alpha)
            - 0.5 * z.iter().map(|v| v * v).sum::<f64>()
            - (log_tau - h.mu_tau).powi(2) / (2.0 * h.sigma_tau * h.sigma_tau)
    }

    fn score_into(&self, theta: &[f64], out: &mut [f64]) {
        self.accumulate(theta, 0..self.train.y.len(), 1.0, out);
    }

    fn as_predictive(&self) -> Option<&dyn PredictiveTarget> {
        Some(self)
    }

    fn n_obs(&self) -> usize {
        self.train.y.len()
    }

    fn minibatch_score_into(&self, theta: &[f64], batch: &[usize], out: &mut [f64]) -> bool {
        let scale = self.n_obs() as f64 / batch.len().max(1) as f64;
        self.accumulate(theta, batch.iter().copied(), scale, out);
        true
    }
}

impl PredictiveTarget for HlrTarget {
    fn has_split(&self, split: Split) -> bool {
        match split {
            Split::Train => true,
            Split::Validation => false,
            Split::Test => self.test.is_some(),
        }
    }

    fn labels(&self, split: Split) -> &[f64] {
        match split {
            Split::Train => &self.train.y,
            Split::Validation => &[],
            Split::Test => self.test.as_ref().map_or(&[], |t| &t.y),
        }
    }

    fn predict_proba_into(&self, theta: &[f64], split: Split, out: &mut [f64]) {
        let data = match split {
            Split::Train => &self.train,
            Split::Validation => return,
            Split::Test => match &self.test {
                Some(t) => t,
                None => return,
            },
        };
        let (beta, alpha, z, log_tau) = self.unpack(theta);
        let tau = log_tau.exp();
        for (i, o) in out.iter_mut().enumerate().take(data.y.len()) {
            *o = sigmoid(self.logit(data, i, beta, alpha, |g| tau * z[g]));
        }
    }
}
