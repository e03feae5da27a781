use std::collections::VecDeque;
use std::time::Instant;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::benchmark::Benchmark;
use super::config::{Limit, RunConfig};
use crate::ensemble::{init_ensemble, streams, CostCounters, Ensemble, RngStream};
use crate::error::{Error, Result};
use crate::metrics::MetricSnapshot;
use crate::samplers::{
    adapt_mr_svgd_step, mr_svgd_step, sghmc_step, sgld_step, strang_step, svgd_step, ChainState,
    Method,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Budget,
    Patience,
    Nonfinite,
    Diverged,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::Patience => "patience",
            StopReason::Nonfinite => "nonfinite",
            StopReason::Diverged => "diverged",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub iteration: u64,
    pub metrics: MetricSnapshot,
    pub costs: CostCounters,
    /// Cumulative time spent stepping (evaluation excluded).
    pub wall_seconds: f64,
    /// Sampler state and every metric finite.
    pub is_finite: bool,
}

/// Checkpoints of one (benchmark, method, seed) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecords {
    pub benchmark: String,
    pub method: Method,
    pub seed: u64,
    pub records: Vec<CheckpointRecord>,
}

impl RunRecords {
    /// Index of the checkpoint with the lowest finite `monitor` value,
    /// skipping the initial checkpoint. Ties keep the earliest.
    pub fn best_index(&self, monitor: &str) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in self.records.iter().enumerate().filter(|(_, r)| r.iteration > 0) {
            if let Some(v) = r.metrics.get(monitor).filter(|v| v.is_finite()) {
                if best.is_none_or(|(_, b)| v < b) {
                    best = Some((i, v));
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Substep statistics of an adaptive run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdaptStats {
    pub steps: u64,
    pub total_substeps: u64,
    pub max_substeps: usize,
    pub reused_predictor: u64,
}

impl AdaptStats {
    pub fn mean_substeps(&self) -> f64 {
        self.total_substeps as f64 / self.steps.max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: RunConfig,
    pub monitor_key: String,
    pub trace: RunRecords,
    pub best: Option<usize>,
    pub stop_reason: StopReason,
    pub adapt: Option<AdaptStats>,
}

impl RunResult {
    pub fn records(&self) -> &[CheckpointRecord] {
        &self.trace.records
    }

    pub fn best_record(&self) -> Option<&CheckpointRecord> {
        self.best.map(|i| &self.trace.records[i])
    }

    pub fn final_record(&self) -> &CheckpointRecord {
        self.trace.records.last().expect("a run records at least the initial checkpoint")
    }

    pub fn has_finite_checkpoint(&self) -> bool {
        self.best.is_some()
    }
}

/// Patience and non-finite-streak bookkeeping over checkpoint monitor values.
#[derive(Clone, Debug)]
pub struct EarlyStopper {
    patience: Limit,
    nonfinite_limit: Limit,
    best: Option<(usize, f64)>,
    since_improvement: usize,
    nonfinite_streak: usize,
}

impl EarlyStopper {
    pub fn new(patience: Limit, nonfinite_limit: Limit) -> Self {
        Self {
            patience,
            nonfinite_limit,
            best: None,
            since_improvement: 0,
            nonfinite_streak: 0,
        }
    }

    /// Records the monitor value of checkpoint `index`. Only strictly lower
    /// finite values count as improvements.
    pub fn observe(&mut self, index: usize, value: f64) -> Option<StopReason> {
        if value.is_finite() {
            self.nonfinite_streak = 0;
            if self.best.is_none_or(|(_, b)| value < b) {
                self.best = Some((index, value));
                self.since_improvement = 0;
            } else {
                self.since_improvement += 1;
            }
        } else {
            self.nonfinite_streak += 1;
            self.since_improvement += 1;
        }
        if self.nonfinite_limit.reached(self.nonfinite_streak) {
            Some(StopReason::Nonfinite)
        } else if self.patience.reached(self.since_improvement) {
            Some(StopReason::Patience)
        } else {
            None
        }
    }

    pub fn best(&self) -> Option<usize> {
        self.best.map(|(i, _)| i)
    }
}

enum SamplerState {
    Particles(Ensemble),
    Chain {
        chain: ChainState,
        window: VecDeque<Vec<f64>>,
        capacity: usize,
        rng: ChaCha8Rng,
    },
}

impl SamplerState {
    fn is_finite(&self) -> bool {
        match self {
            SamplerState::Particles(e) => e.is_finite(),
            SamplerState::Chain { chain, .. } => chain.is_finite(),
        }
    }

    /// Metric ensemble and ESS series.
    fn view(&self) -> (Array2<f64>, Vec<f64>) {
        match self {
            SamplerState::Particles(e) => (e.particles.clone(), e.particles.column(0).to_vec()),
            SamplerState::Chain { window, .. } => {
                let d = window[0].len();
                let flat: Vec<f64> = window.iter().flatten().copied().collect();
                let m = Array2::from_shape_vec((window.len(), d), flat).expect("rectangular window");
                let series = window.iter().map(|x| x[0]).collect();
                (m, series)
            }
        }
    }
}

/// Runs one configuration to completion.
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    run_with_hook(cfg, |_, _| {})
}

/// As [`run`], calling `hook(checkpoint_index, &mut metrics)` on every
/// checkpoint before the stopping rule sees it.
pub fn run_with_hook<F>(cfg: &RunConfig, mut hook: F) -> Result<RunResult>
where
    F: FnMut(usize, &mut MetricSnapshot),
{
    cfg.validate()?;
    let bench = Benchmark::build(cfg)?;
    let d = bench.dim();
    let rng = RngStream::new(cfg.seed);
    let mut state = if cfg.method.is_chain() {
        let start = init_ensemble(1, d, &cfg.init, &rng)?;
        let position = start.row(0).to_vec();
        let chain = ChainState::new(position.clone(), cfg.chain.eta, cfg.chain.alpha, cfg.chain.beta)?
            .with_minibatch(cfg.chain.minibatch);
        let stream = if cfg.method == Method::Sgld { streams::SGLD_NOISE } else { streams::SGHMC_NOISE };
        SamplerState::Chain {
            chain,
            window: VecDeque::from([position]),
            capacity: cfg.chain.window,
            rng: rng.substream(stream),
        }
    } else {
        SamplerState::Particles(init_ensemble(cfg.n_particles, d, &cfg.init, &rng)?)
    };

    let mut ctr = CostCounters::default();
    let mut adapt = (cfg.method == Method::AdaptMr).then(AdaptStats::default);
    let mut stopper = EarlyStopper::new(cfg.patience, cfg.nonfinite_limit);
    let mut records = Vec::new();

    let mut checkpoint = |iteration: u64, snap: MetricSnapshot, finite_state: bool, ctr: &CostCounters, records: &mut Vec<CheckpointRecord>| {
        let mut snap = snap;
        hook(records.len(), &mut snap);
        let is_finite = finite_state && snap.all_finite();
        records.push(CheckpointRecord {
            iteration,
            metrics: snap,
            costs: *ctr,
            wall_seconds: ctr.wall_seconds,
            is_finite,
        });
    };

    let (m0, s0) = state.view();
    checkpoint(0, bench.evaluate(m0.view(), &s0), state.is_finite(), &ctr, &mut records);

    let mut stop_reason = StopReason::Budget;
    for it in 1..=cfg.max_iterations as u64 {
        let t0 = Instant::now();
        let stepped = step_once(&mut state, cfg, &bench, &mut ctr, adapt.as_mut());
        ctr.wall_seconds += t0.elapsed().as_secs_f64();
        match stepped {
            Ok(()) => {}
            Err(Error::Diverged(_)) => {
                checkpoint(it, bench.nan_snapshot(), false, &ctr, &mut records);
                stop_reason = StopReason::Diverged;
                break;
            }
            Err(e) => return Err(e),
        }
        if !state.is_finite() {
            checkpoint(it, bench.nan_snapshot(), false, &ctr, &mut records);
            stop_reason = StopReason::Diverged;
            break;
        }
        if it % cfg.checkpoint_every as u64 == 0 {
            let (m, s) = state.view();
            checkpoint(it, bench.evaluate(m.view(), &s), true, &ctr, &mut records);
            let idx = records.len() - 1;
            let value = records[idx].metrics.get(bench.monitor_key()).unwrap_or(f64::NAN);
            if let Some(reason) = stopper.observe(idx, value) {
                stop_reason = reason;
                break;
            }
        }
    }

    let trace = RunRecords {
        benchmark: cfg.benchmark.clone(),
        method: cfg.method,
        seed: cfg.seed,
        records,
    };
    Ok(RunResult {
        config: cfg.clone(),
        monitor_key: bench.monitor_key().to_string(),
        best: trace.best_index(bench.monitor_key()),
        trace,
        stop_reason,
        adapt,
    })
}

fn step_once(
    state: &mut SamplerState,
    cfg: &RunConfig,
    bench: &Benchmark,
    ctr: &mut CostCounters,
    adapt: Option<&mut AdaptStats>,
) -> Result<()> {
    let target = bench.target();
    match state {
        SamplerState::Particles(ens) => {
            let next = match cfg.method {
                Method::Svgd => svgd_step(ens, target, &cfg.kernel, &cfg.step, ctr)?,
                Method::Strang => strang_step(ens, target, &cfg.kernel, &cfg.step, ctr, cfg.step.half_substeps)?,
                Method::Mr => mr_svgd_step(ens, target, &cfg.kernel, &cfg.step, ctr)?,
                Method::AdaptMr => {
                    let (next, report) = adapt_mr_svgd_step(ens, target, &cfg.kernel, &cfg.step, ctr)?;
                    if let Some(a) = adapt {
                        a.steps += 1;
                        a.total_substeps += report.m_chosen as u64;
                        a.max_substeps = a.max_substeps.max(report.m_chosen);
                        a.reused_predictor += u64::from(report.reused_predictor);
                    }
                    next
                }
                Method::Sgld | Method::Sghmc => unreachable!("chain methods use chain state"),
            };
            *ens = next;
        }
        SamplerState::Chain { chain, window, capacity, rng } => {
            *chain = match cfg.method {
                Method::Sgld => sgld_step(chain, target, rng, ctr),
                _ => sghmc_step(chain, target, rng, ctr),
            };
            window.push_back(chain.position.clone());
            while window.len() > *capacity {
                window.pop_front();
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patience_trace() {
        let mut s = EarlyStopper::new(Limit::of(2), Limit::INF);
        let series = [1.0, 0.9, 0.95, 0.96, 0.97];
        let mut stopped = None;
        for (i, v) in series.iter().enumerate() {
            if let Some(r) = s.observe(i + 1, *v) {
                stopped = Some((i + 1, r));
                break;
            }
        }
        assert_eq!(stopped, Some((4, StopReason::Patience)));
        assert_eq!(s.best(), Some(2));
    }

    #[test]
    fn nonfinite_streak_resets_on_finite_value() {
        let mut s = EarlyStopper::new(Limit::INF, Limit::of(2));
        assert_eq!(s.observe(1, f64::NAN), None);
        assert_eq!(s.observe(2, 1.0), None);
        assert_eq!(s.observe(3, f64::INFINITY), None);
        assert_eq!(s.observe(4, f64::NAN), Some(StopReason::Nonfinite));
        assert_eq!(s.best(), Some(2));
    }

    #[test]
    fn nan_never_improves() {
        let mut s = EarlyStopper::new(Limit::of(3), Limit::INF);
        s.observe(1, 2.0);
        s.observe(2, f64::NAN);
        s.observe(3, f64::NEG_INFINITY);
        assert_eq!(s.best(), Some(1));
        assert_eq!(s.observe(4, 2.0), Some(StopReason::Patience));
    }

    fn small(benchmark: &str, method: Method) -> RunConfig {
        let mut cfg = RunConfig::for_benchmark(benchmark, method).unwrap();
        cfg.n_particles = 16;
        cfg.max_iterations = 100;
        cfg.patience = Limit::INF;
        cfg
    }

    #[test]
    fn checkpoint_count_with_infinite_patience() {
        let r = run(&small("gaussian", Method::Svgd)).unwrap();
        let iters: Vec<u64> = r.records().iter().map(|c| c.iteration).collect();
        assert_eq!(iters, [0, 20, 40, 60, 80, 100]);
        assert_eq!(r.stop_reason, StopReason::Budget);
        assert!(r.best.is_some_and(|b| b > 0));
    }

    #[test]
    fn costs_match_analytic_counts() {
        let n = 16u64;
        for (method, grads, kernels) in [
            (Method::Svgd, n, n * n),
            (Method::Mr, n, 6 * n * n),
            (Method::Strang, n, 3 * n * n),
        ] {
            let r = run(&small("2d-banana", method)).unwrap();
            for c in r.records() {
                assert_eq!(c.costs.grad_evals, grads * c.iteration, "{method}");
                assert_eq!(c.costs.kernel_evals, kernels * c.iteration, "{method}");
                assert_eq!(c.costs.grad_batches, c.iteration);
            }
        }
        let r = run(&small("gaussian", Method::Sgld)).unwrap();
        assert_eq!(r.final_record().costs.grad_evals, 100);
    }

    #[test]
    fn hook_injected_nan_stops_hlr() {
        let mut cfg = small("hlr-longtail", Method::Mr);
        cfg.options.hlr.n = 400;
        cfg.options.hlr.groups = 20;
        cfg.options.hlr.p = 5;
        let r = run_with_hook(&cfg, |i, snap| {
            if i == 2 || i == 3 {
                snap.insert("nll", f64::NAN);
            }
        })
        .unwrap();
        assert_eq!(r.stop_reason, StopReason::Nonfinite);
        assert_eq!(r.records().len(), 4);
        assert_eq!(r.best, Some(1));
    }

    #[test]
    fn best_ignores_accuracy() {
        // Accuracy rises while the monitor worsens: selection follows the monitor.
        let mut cfg = small("uci-synthetic", Method::Svgd);
        cfg.max_iterations = 80;
        let r = run_with_hook(&cfg, |i, snap| {
            snap.insert("val_nll", [9.0, 1.0, 2.0, 3.0, 4.0][i]);
            snap.insert("accuracy", 0.1 * i as f64);
        })
        .unwrap();
        assert_eq!(r.best, Some(1));
    }

    #[test]
    fn runs_are_deterministic() {
        for method in Method::ALL {
            let cfg = small("2d-two-moons", method);
            let a = run(&cfg).unwrap();
            let b = run(&cfg).unwrap();
            for (x, y) in a.records().iter().zip(b.records()) {
                let bits = |m: &MetricSnapshot| m.iter().map(|(k, v)| (k.to_string(), v.to_bits())).collect::<Vec<_>>();
                assert_eq!(bits(&x.metrics), bits(&y.metrics));
                assert_eq!(x.costs.grad_evals, y.costs.grad_evals);
                assert_eq!(x.costs.kernel_evals, y.costs.kernel_evals);
            }
        }
    }

    #[test]
    fn chain_window_is_bounded() {
        let mut cfg = small("gaussian", Method::Sghmc);
        cfg.chain.window = 10;
        let r = run(&cfg).unwrap();
        let ess = r.final_record().metrics.get("ess").unwrap();
        assert!((1.0..=10.0).contains(&ess));
    }

    #[test]
    fn divergence_is_a_stop_reason() {
        let mut cfg = small("gaussian", Method::Sgld);
        cfg.chain.eta = 50.0;
        cfg.max_iterations = 1000;
        cfg.init = crate::ensemble::InitSpec::gaussian(1.0);
        let r = run(&cfg).unwrap();
        assert_eq!(r.stop_reason, StopReason::Diverged);
        assert!(!r.final_record().is_finite);
    }
}
