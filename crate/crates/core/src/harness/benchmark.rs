use ndarray::{Array2, ArrayView2};

use super::config::{BenchmarkKind, BenchmarkOptions, Monitor, RunConfig};
use crate::data::{load_dataset, standardize_and_split, synthetic_classification, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::metrics::{
    ess_1d, ksd_target, mean_logp, mode_metrics, moment_errors, posterior_predictive,
    predictive_metrics, MetricSnapshot, DEFAULT_ECE_BINS, DEFAULT_MODE_THRESHOLD,
};
use crate::targets::{
    hlr_generate, make_2d_target, make_gauss50, make_mix8, Bnn, DiagGaussian, HlrConfig, HlrTarget,
    LogisticRegression, MixtureSpec, Split, Target,
};

enum Model {
    Plain(Box<dyn Target>),
    Logreg(LogisticRegression),
    Bnn(Bnn),
    Hlr(Box<HlrTarget>),
}

/// A constructed target together with the metric set evaluated at every
/// checkpoint.
pub struct Benchmark {
    pub id: String,
    pub kind: BenchmarkKind,
    model: Model,
    mixture: Option<MixtureSpec>,
    reference: Option<(Vec<f64>, Array2<f64>)>,
    ksd_kernel: KernelSpec,
    with_ksd: bool,
    monitor_key: String,
    metric_keys: Vec<String>,
}

fn load_or_synthesize(name: &str, opts: &BenchmarkOptions) -> Result<Dataset> {
    match (&opts.data, name) {
        (Some(src), _) => load_dataset(&src.path, &src.format),
        (None, "synthetic") => synthetic_classification(opts.synthetic_n, opts.synthetic_p, opts.data_seed),
        (None, _) => Err(Error::Config(format!(
            "benchmark data set '{name}' needs options.data.path (only 'synthetic' is generated)"
        ))),
    }
}

impl Benchmark {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let kind = cfg.kind()?;
        let opts = &cfg.options;
        let mut mixture = None;
        let model = match &kind {
            BenchmarkKind::Gaussian => Model::Plain(Box::new(DiagGaussian::standard(opts.dim.unwrap_or(2)))),
            BenchmarkKind::Gauss50 => Model::Plain(Box::new(make_gauss50(opts.dim.unwrap_or(50), opts.kappa)?)),
            BenchmarkKind::TwoD(name) => Model::Plain(make_2d_target(name)?),
            BenchmarkKind::Mix8 => {
                let (target, spec) = make_mix8();
                mixture = Some(spec);
                Model::Plain(Box::new(target))
            }
            BenchmarkKind::Uci(name) => {
                let ds = load_or_synthesize(name, opts)?;
                let s = standardize_and_split(&ds, &SplitSpec::train_val_test(opts.data_seed))?;
                Model::Logreg(LogisticRegression::new(
                    name,
                    &s.train,
                    s.validation.as_ref(),
                    Some(&s.test),
                    opts.prior_var,
                )?)
            }
            BenchmarkKind::Bnn(name) => {
                let ds = load_or_synthesize(name, opts)?;
                let s = standardize_and_split(&ds, &SplitSpec::train_val_test(opts.data_seed))?;
                Model::Bnn(Bnn::new(
                    name,
                    &s.train,
                    s.validation.as_ref(),
                    Some(&s.test),
                    opts.bnn_width,
                    opts.prior_var,
                )?)
            }
            BenchmarkKind::Hlr(law) => {
                let base = if opts.hlr_full_scale { HlrConfig::full_scale() } else { opts.hlr.clone() };
                let hcfg = HlrConfig { law: *law, seed: opts.data_seed, ..base };
                let model = hlr_generate(&hcfg)?;
                Model::Hlr(Box::new(HlrTarget::with_holdout(&model, opts.hlr_holdout)?))
            }
        };
        let mut bench = Benchmark {
            id: cfg.benchmark.clone(),
            kind,
            model,
            mixture,
            reference: None,
            ksd_kernel: cfg.ksd_kernel.clone(),
            with_ksd: false,
            monitor_key: String::new(),
            metric_keys: Vec::new(),
        };
        bench.reference = bench.target().reference_moments();
        let has_val = bench.predictive().is_some_and(|p| p.has_split(Split::Validation));
        bench.monitor_key = match cfg.monitor {
            Monitor::Ksd => "ksd".into(),
            Monitor::Nll if has_val => "val_nll".into(),
            Monitor::Nll => "nll".into(),
        };
        bench.with_ksd = !bench.kind.is_predictive() || cfg.monitor == Monitor::Ksd;
        bench.metric_keys = bench.nan_snapshot().keys().map(String::from).collect();
        if !bench.metric_keys.contains(&bench.monitor_key) {
            return Err(Error::Config(format!(
                "monitor '{}' is not available for benchmark '{}'",
                bench.monitor_key, bench.id
            )));
        }
        Ok(bench)
    }

    pub fn target(&self) -> &dyn Target {
        match &self.model {
            Model::Plain(t) => t.as_ref(),
            Model::Logreg(t) => t,
            Model::Bnn(t) => t,
            Model::Hlr(t) => t.as_ref(),
        }
    }

    fn predictive(&self) -> Option<&dyn crate::targets::PredictiveTarget> {
        match &self.model {
            Model::Plain(_) => None,
            Model::Logreg(t) => Some(t),
            Model::Bnn(t) => Some(t),
            Model::Hlr(t) => Some(t.as_ref()),
        }
    }

    pub fn dim(&self) -> usize {
        self.target().dim()
    }

    pub fn monitor_key(&self) -> &str {
        &self.monitor_key
    }

    /// Metric names, in the order they appear in every snapshot.
    pub fn metric_keys(&self) -> &[String] {
        &self.metric_keys
    }

    /// Summaries of mix8 runs use the final checkpoint rather than the best.
    pub fn uses_final_checkpoint(&self) -> bool {
        self.kind == BenchmarkKind::Mix8
    }

    /// A snapshot with every metric set to NaN.
    pub fn nan_snapshot(&self) -> MetricSnapshot {
        let mut keys: Vec<&str> = vec!["ess", "mean_logp"];
        if self.with_ksd {
            keys.push("ksd");
        }
        if self.reference.is_some() {
            keys.extend(["e_mu", "e_sigma"]);
        }
        if self.mixture.is_some() {
            keys.extend(["coverage", "entropy", "imbalance"]);
        }
        if let Some(p) = self.predictive() {
            keys.extend(["accuracy", "ece", "nll"]);
            if p.has_split(Split::Validation) {
                keys.push("val_nll");
            }
        }
        let mut snap = MetricSnapshot::new();
        for k in keys {
            snap.insert(k, f64::NAN);
        }
        snap
    }

    /// Evaluates the metric set on `particles` (rows are samples). The ESS is
    /// computed from `ess_series`.
    pub fn evaluate(&self, particles: ArrayView2<'_, f64>, ess_series: &[f64]) -> MetricSnapshot {
        let mut snap = self.nan_snapshot();
        if particles.iter().any(|v| !v.is_finite()) {
            return snap;
        }
        let target = self.target();
        snap.insert("ess", ess_1d(ess_series));
        snap.insert("mean_logp", mean_logp(particles, target));
        if self.with_ksd {
            snap.insert("ksd", ksd_target(particles, target, &self.ksd_kernel));
        }
        if let Some((mu, cov)) = &self.reference {
            if let Ok((a, b)) = moment_errors(particles, mu, cov) {
                snap.insert("e_mu", a);
                snap.insert("e_sigma", b);
            }
        }
        if let Some(spec) = &self.mixture {
            let m = mode_metrics(particles, spec, DEFAULT_MODE_THRESHOLD);
            snap.insert("coverage", m.coverage);
            snap.insert("entropy", m.entropy);
            snap.insert("imbalance", m.imbalance);
        }
        if let Some(p) = self.predictive() {
            let eval = |split: Split| {
                posterior_predictive(particles, p, split)
                    .and_then(|probs| predictive_metrics(&probs, p.labels(split), DEFAULT_ECE_BINS))
                    .ok()
            };
            if let Some(m) = eval(Split::Test) {
                snap.insert("nll", m.nll);
                snap.insert("accuracy", m.accuracy);
                snap.insert("ece", m.ece);
            }
            if p.has_split(Split::Validation) {
                if let Some(m) = eval(Split::Validation) {
                    snap.insert("val_nll", m.nll);
                }
            }
        }
        snap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::Method;

    #[test]
    fn metric_sets_per_benchmark() {
        let keys = |id: &str| {
            let cfg = RunConfig::for_benchmark(id, Method::Svgd).unwrap();
            Benchmark::build(&cfg).unwrap().metric_keys().to_vec()
        };
        assert_eq!(keys("gaussian"), ["e_mu", "e_sigma", "ess", "ksd", "mean_logp"]);
        assert_eq!(keys("2d-banana"), ["ess", "ksd", "mean_logp"]);
        assert_eq!(keys("mix8"), ["coverage", "entropy", "ess", "imbalance", "ksd", "mean_logp"]);
        assert_eq!(keys("uci-synthetic"), ["accuracy", "ece", "ess", "mean_logp", "nll", "val_nll"]);
    }

    #[test]
    fn monitor_keys() {
        let cfg = RunConfig::for_benchmark("uci-synthetic", Method::Svgd).unwrap();
        assert_eq!(Benchmark::build(&cfg).unwrap().monitor_key(), "val_nll");
        let mut cfg = RunConfig::for_benchmark("hlr-uniform", Method::Svgd).unwrap();
        cfg.options.hlr.n = 300;
        cfg.options.hlr.groups = 20;
        cfg.options.hlr.p = 4;
        assert_eq!(Benchmark::build(&cfg).unwrap().monitor_key(), "nll");
        let mut cfg = RunConfig::for_benchmark("gaussian", Method::Svgd).unwrap();
        cfg.monitor = Monitor::Nll;
        assert!(matches!(Benchmark::build(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn real_data_sets_need_a_path() {
        let cfg = RunConfig::for_benchmark("uci-ionosphere", Method::Svgd).unwrap();
        assert!(matches!(Benchmark::build(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn non_finite_particles_give_nan_snapshot() {
        let cfg = RunConfig::for_benchmark("gaussian", Method::Svgd).unwrap();
        let b = Benchmark::build(&cfg).unwrap();
        let x = ndarray::array![[0.0, f64::NAN], [1.0, 1.0]];
        let snap = b.evaluate(x.view(), &[0.0, 1.0, 0.5, 0.2]);
        assert!(snap.iter().all(|(_, v)| v.is_nan()));
    }
}
