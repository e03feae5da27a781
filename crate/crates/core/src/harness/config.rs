use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::DataFormat;
use crate::ensemble::{InitSpec, StepConfig};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::samplers::Method;
use crate::targets::{GroupLaw, HlrConfig, TARGET_2D_NAMES};

/// A count threshold that may be infinite. Serialized as an integer or the
/// string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Limit(pub Option<usize>);

impl Limit {
    pub const INF: Limit = Limit(None);

    pub fn of(n: usize) -> Self {
        Limit(Some(n))
    }

    pub fn reached(self, count: usize) -> bool {
        matches!(self.0, Some(n) if count >= n)
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(n) => write!(f, "{n}"),
            None => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Limit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" | "none" => Ok(Limit::INF),
            n => n
                .parse()
                .map(Limit::of)
                .map_err(|_| Error::Config(format!("expected a count or 'inf', got '{s}'"))),
        }
    }
}

impl Serialize for Limit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(n) => s.serialize_u64(n as u64),
            None => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Limit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Limit::of(n as usize)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Metric that drives early stopping and best-checkpoint selection. Both are
/// lower-is-better.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monitor {
    Ksd,
    Nll,
}

impl Monitor {
    pub fn as_str(self) -> &'static str {
        match self {
            Monitor::Ksd => "ksd",
            Monitor::Nll => "nll",
        }
    }
}

/// Parsed benchmark identifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BenchmarkKind {
    /// Standard normal in `dim` dimensions.
    Gaussian,
    Gauss50,
    TwoD(String),
    Mix8,
    /// Logistic regression on a named data set (`synthetic` needs no file).
    Uci(String),
    Bnn(String),
    Hlr(GroupLaw),
}

impl BenchmarkKind {
    pub fn parse(id: &str) -> Result<Self> {
        let kind = match id {
            "gaussian" => BenchmarkKind::Gaussian,
            "gauss50" => BenchmarkKind::Gauss50,
            "mix8" => BenchmarkKind::Mix8,
            "hlr-longtail" => BenchmarkKind::Hlr(GroupLaw::LongTail),
            "hlr-uniform" => BenchmarkKind::Hlr(GroupLaw::Uniform),
            _ => {
                if let Some(name) = id.strip_prefix("2d-") {
                    if !TARGET_2D_NAMES.contains(&name) {
                        return Err(Error::Config(format!("unknown 2D target '{name}'")));
                    }
                    BenchmarkKind::TwoD(name.to_string())
                } else if let Some(name) = id.strip_prefix("uci-").filter(|n| !n.is_empty()) {
                    BenchmarkKind::Uci(name.to_string())
                } else if let Some(name) = id.strip_prefix("bnn-").filter(|n| !n.is_empty()) {
                    BenchmarkKind::Bnn(name.to_string())
                } else {
                    return Err(Error::Config(format!("unknown benchmark '{id}'")));
                }
            }
        };
        Ok(kind)
    }

    pub fn is_predictive(&self) -> bool {
        matches!(self, BenchmarkKind::Uci(_) | BenchmarkKind::Bnn(_) | BenchmarkKind::Hlr(_))
    }

    pub fn default_monitor(&self) -> Monitor {
        if self.is_predictive() {
            Monitor::Nll
        } else {
            Monitor::Ksd
        }
    }
}

/// Where to read a data set from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub path: PathBuf,
    pub format: DataFormat,
}

/// Benchmark construction parameters. Fields that do not apply to the
/// selected benchmark are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkOptions {
    /// Dimension for `gaussian` (default 2) and `gauss50` (default 50).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Condition number of the `gauss50` covariance.
    pub kappa: f64,
    /// Data file for `uci-*` and `bnn-*`; required unless the name is `synthetic`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    /// Seed for data generation and train/validation/test splits, shared by
    /// every method and run seed.
    pub data_seed: u64,
    /// Rows and features of the synthetic classification set.
    pub synthetic_n: usize,
    pub synthetic_p: usize,
    pub prior_var: f64,
    pub bnn_width: usize,
    /// HLR generator settings; `law` and `seed` are taken from the benchmark
    /// id and `data_seed`.
    pub hlr: HlrConfig,
    /// Use the full-scale HLR instance instead of `hlr`.
    pub hlr_full_scale: bool,
    pub hlr_holdout: f64,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            dim: None,
            kappa: 100.0,
            data: None,
            data_seed: 0,
            synthetic_n: 500,
            synthetic_p: 8,
            prior_var: 1.0,
            bnn_width: 16,
            hlr: HlrConfig::default(),
            hlr_full_scale: false,
            hlr_holdout: 0.2,
        }
    }
}

/// Step size, friction and momentum of the chain baselines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainParams {
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minibatch: Option<f64>,
    /// Number of recent iterates forming the metric ensemble.
    pub window: usize,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            alpha: 0.1,
            beta: 0.9,
            minibatch: None,
            window: 512,
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub benchmark: String,
    pub method: Method,
    pub seed: u64,
    pub max_iterations: usize,
    pub checkpoint_every: usize,
    pub n_particles: usize,
    pub monitor: Monitor,
    /// Permit a monitor other than the benchmark default.
    #[serde(default)]
    pub allow_monitor_override: bool,
    /// Checkpoints without improvement before stopping.
    pub patience: Limit,
    /// Consecutive non-finite checkpoints before stopping.
    pub nonfinite_limit: Limit,
    pub init: InitSpec,
    pub step: StepConfig,
    pub kernel: KernelSpec,
    /// Kernel of the KSD metric, independent of the sampler kernel.
    pub ksd_kernel: KernelSpec,
    pub chain: ChainParams,
    #[serde(default)]
    pub options: BenchmarkOptions,
}

impl RunConfig {
    /// Defaults for a benchmark and method.
    pub fn for_benchmark(benchmark: &str, method: Method) -> Result<Self> {
        let kind = BenchmarkKind::parse(benchmark)?;
        let mut cfg = RunConfig {
            benchmark: benchmark.to_string(),
            method,
            seed: 0,
            max_iterations: 1000,
            checkpoint_every: 20,
            n_particles: 128,
            monitor: kind.default_monitor(),
            allow_monitor_override: false,
            patience: Limit::of(5),
            nonfinite_limit: Limit::INF,
            init: InitSpec::gaussian(1.0),
            step: StepConfig::default(),
            kernel: KernelSpec::rbf(),
            ksd_kernel: KernelSpec::rbf(),
            chain: ChainParams::default(),
            options: BenchmarkOptions::default(),
        };
        match kind {
            BenchmarkKind::Gaussian => {
                cfg.init = InitSpec::gaussian(0.25);
                cfg.step.h = 0.1;
            }
            BenchmarkKind::Gauss50 => {
                cfg.checkpoint_every = 50;
                cfg.step.h = 0.05;
            }
            BenchmarkKind::TwoD(_) => {
                cfg.step.h = 0.05;
            }
            BenchmarkKind::Mix8 => {
                cfg.init = InitSpec::gaussian(0.5);
                cfg.kernel = KernelSpec::mix8_default();
                cfg.patience = Limit::INF;
                cfg.step.h = 0.05;
            }
            BenchmarkKind::Uci(_) => {
                cfg.init = InitSpec::gaussian(0.1);
                cfg.step.h = 2e-3;
                cfg.chain.eta = 2e-4;
            }
            BenchmarkKind::Bnn(_) => {
                cfg.init = InitSpec::gaussian(0.1);
                cfg.step.h = 2e-3;
                cfg.chain.eta = 2e-4;
            }
            BenchmarkKind::Hlr(_) => {
                cfg.n_particles = 32;
                cfg.nonfinite_limit = Limit::of(2);
                cfg.init = InitSpec::gaussian(0.1);
                cfg.step.h = 5e-4;
                cfg.chain.eta = 1e-4;
            }
        }
        Ok(cfg)
    }

    pub fn kind(&self) -> Result<BenchmarkKind> {
        BenchmarkKind::parse(&self.benchmark)
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        if self.monitor != kind.default_monitor() && !self.allow_monitor_override {
            return Err(Error::Config(format!(
                "benchmark '{}' is monitored by {}; set allow_monitor_override to use {}",
                self.benchmark,
                kind.default_monitor().as_str(),
                self.monitor.as_str()
            )));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::config("checkpoint_every must be at least 1"));
        }
        if self.n_particles == 0 {
            return Err(Error::config("n_particles must be at least 1"));
        }
        if self.method.is_chain() && self.chain.window == 0 {
            return Err(Error::config("chain window must be at least 1"));
        }
        self.step.validate()?;
        self.kernel.validate()?;
        self.ksd_kernel.validate()?;
        if self.method.is_chain() {
            let probe = crate::samplers::ChainState::new(vec![0.0], self.chain.eta, self.chain.alpha, self.chain.beta)?
                .with_minibatch(self.chain.minibatch);
            probe.validate()?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Tag used in file names, e.g. `adapt-mr-seed3`.
    pub fn run_tag(&self) -> String {
        format!("{}-seed{}", self.method, self.seed)
    }
}

/// Keys whose presence marks a table as a tagged enum value. Such tables
/// replace their counterpart instead of being merged into it.
const TAG_KEYS: [&str; 4] = ["type", "kind", "policy", "format"];

/// Recursively overlays `over` onto `base`.
pub fn merge_tables(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o))
                if !TAG_KEYS.iter().any(|t| o.contains_key(*t)) =>
            {
                merge_tables(b, o)
            }
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

/// Parses `a.b.c=value` into a nested table. The value is read as TOML and
/// falls back to a plain string.
pub fn parse_assignment(assignment: &str) -> Result<toml::Table> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got '{assignment}'")))?;
    let raw = raw.trim();
    // TOML reads bare `inf` and `nan` as floats; limits spell infinity as a word.
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) if !matches!(raw, "inf" | "nan") => t.remove("v").expect("parsed key"),
        _ => toml::Value::String(raw.to_string()),
    };
    let mut keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("malformed key '{path}'")));
    }
    let last = keys.pop().expect("non-empty");
    let mut table = toml::Table::new();
    table.insert(last.to_string(), value);
    for k in keys.into_iter().rev() {
        let mut outer = toml::Table::new();
        outer.insert(k.to_string(), toml::Value::Table(table));
        table = outer;
    }
    Ok(table)
}

fn lookup_str<'a>(layers: &'a [&toml::Table], key: &str) -> Option<&'a str> {
    layers.iter().rev().find_map(|t| t.get(key).and_then(toml::Value::as_str))
}

/// Resolves a run configuration from layers in increasing precedence
/// (typically: config file, environment, command line). The benchmark and
/// method select the defaults the layers are applied to.
pub fn resolve_run_config(layers: &[&toml::Table]) -> Result<RunConfig> {
    let benchmark = lookup_str(layers, "benchmark")
        .ok_or_else(|| Error::config("no benchmark given"))?
        .to_string();
    let method: Method = lookup_str(layers, "method").unwrap_or("adapt-mr").parse()?;
    let defaults = RunConfig::for_benchmark(&benchmark, method)?;
    let mut table = toml::Table::try_from(&defaults)
        .map_err(|e| Error::Config(format!("cannot serialize defaults: {e}")))?;
    for layer in layers {
        merge_tables(&mut table, layer);
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a TOML file into a table.
pub fn read_config_file(path: &std::path::Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
