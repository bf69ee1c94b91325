//! The slot-level simulation loop shared by every policy.

use std::io::Write;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baseline::{random_decide, GreedyBaseline};
use crate::cmdp::PolicyTable;
use crate::dpp::DppScheduler;
use crate::drl::FrozenAgent;
use crate::kernel::StateIndexer;
use crate::model::{self, clamp_to_bound, tx_cost, Action, SystemConfig, SystemState};
use crate::rng::{substream, EnvStreams, Stream};
use crate::stats::Estimate;

/// A lookup table over the bounded state space. States outside the simplex
/// are clamped before lookup.
#[derive(Debug, Clone)]
pub struct TablePolicy {
    pub table: Arc<PolicyTable>,
    indexer: Arc<StateIndexer>,
}

impl TablePolicy {
    pub fn new(table: Arc<PolicyTable>) -> Self {
        let indexer = Arc::new(StateIndexer::new(table.bound(), table.num_sources()));
        TablePolicy { table, indexer }
    }

    pub fn decide(&self, state: &SystemState) -> Action {
        let idx = match self.indexer.encode(state) {
            Some(i) => i,
            None => self
                .indexer
                .encode(&clamp_to_bound(state, self.indexer.bound()))
                .expect("clamped state lies in the simplex"),
        };
        self.table.action(idx)
    }
}

/// Any scheduler the simulator can run, with its per-run internal state.
#[derive(Debug, Clone)]
pub enum PolicyHandle {
    Table(TablePolicy),
    Dpp(DppScheduler),
    Greedy(GreedyBaseline),
    Random,
    Drl(FrozenAgent),
    Fixed(Action),
}

impl PolicyHandle {
    pub fn table(table: Arc<PolicyTable>) -> Self {
        PolicyHandle::Table(TablePolicy::new(table))
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyHandle::Table(_) => "table",
            PolicyHandle::Dpp(_) => "dpp",
            PolicyHandle::Greedy(_) => "greedy",
            PolicyHandle::Random => "random",
            PolicyHandle::Drl(_) => "drl",
            PolicyHandle::Fixed(_) => "fixed",
        }
    }

    pub fn decide(&mut self, state: &SystemState, cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> Action {
        match self {
            PolicyHandle::Table(t) => t.decide(state),
            PolicyHandle::Dpp(d) => d.decide(state, cfg),
            PolicyHandle::Greedy(g) => g.decide(state, cfg.budget()),
            PolicyHandle::Random => random_decide(rng, cfg.num_sources()),
            PolicyHandle::Drl(agent) => agent.decide(state),
            PolicyHandle::Fixed(a) => *a,
        }
    }

    /// Updates internal bookkeeping after `action` was applied.
    pub fn observe(&mut self, action: Action, cfg: &SystemConfig) {
        match self {
            PolicyHandle::Dpp(d) => d.observe(action, cfg),
            PolicyHandle::Greedy(g) => g.observe(action),
            PolicyHandle::Drl(agent) => agent.observe(action, cfg),
            _ => {}
        }
    }

    /// Virtual-queue backlog for queue-driven policies.
    pub fn queue(&self) -> Option<f64> {
        match self {
            PolicyHandle::Dpp(d) => Some(d.queue),
            PolicyHandle::Drl(agent) => Some(agent.queue),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub horizon: u64,
    pub seed: u64,
    /// Record a series point every this many slots (0 disables).
    pub series_every: u64,
    /// Also accumulate the Lagrangian cost `C + λ(D − Γmax)`.
    pub lambda: Option<f64>,
}

impl SimOptions {
    pub fn new(horizon: u64, seed: u64) -> Self {
        SimOptions {
            horizon,
            seed,
            series_every: 0,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub slot: u64,
    pub ws_aaoi_running: f64,
    pub tx_running: f64,
    /// NaN for policies without a virtual queue; written as an empty field.
    pub queue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub horizon: u64,
    /// Time average of `Σ wᵢ δᵢ(t)` over slots `0..horizon`.
    pub ws_aaoi: f64,
    pub mean_tx: f64,
    /// Averages over the final 10% of slots.
    pub window_ws_aaoi: f64,
    pub window_tx: f64,
    pub per_source_aaoi: Vec<f64>,
    pub mean_queue: Option<f64>,
    pub max_queue: Option<f64>,
    pub lagrangian: Option<f64>,
    pub series: Vec<SeriesPoint>,
}

/// Runs `policy` from the all-fresh state for `opts.horizon` slots. Each slot
/// records the cost of the state the decision is taken in and the
/// transmissions of that decision. The result depends only on the inputs.
pub fn simulate(policy: &mut PolicyHandle, cfg: &SystemConfig, opts: &SimOptions) -> RunMetrics {
    let num_sources = cfg.num_sources();
    let mut env = EnvStreams::new(opts.seed);
    let mut policy_rng = substream(opts.seed, Stream::Exploration);
    let mut state = SystemState::fresh(num_sources);
    let window_start = opts.horizon - opts.horizon / 10;
    let (mut aoi_sum, mut tx_sum, mut win_aoi, mut win_tx) = (0.0, 0.0, 0.0, 0.0);
    let mut per_source = vec![0.0; num_sources];
    let (mut queue_sum, mut queue_max) = (0.0, 0.0f64);
    let mut series = Vec::new();
    for t in 0..opts.horizon {
        let action = policy.decide(&state, cfg, &mut policy_rng);
        let cost = model::aoi_cost(&state, cfg);
        let tx = f64::from(tx_cost(action));
        for (acc, s) in per_source.iter_mut().zip(&state.sources) {
            *acc += f64::from(s.dest_aoi());
        }
        aoi_sum += cost;
        tx_sum += tx;
        if t >= window_start {
            win_aoi += cost;
            win_tx += tx;
        }
        state = model::step(&state, action, cfg, &mut env).next_state;
        policy.observe(action, cfg);
        if let Some(q) = policy.queue() {
            queue_sum += q;
            queue_max = queue_max.max(q);
        }
        if opts.series_every > 0 && (t + 1) % opts.series_every == 0 {
            let n = (t + 1) as f64;
            series.push(SeriesPoint {
                slot: t + 1,
                ws_aaoi_running: aoi_sum / n,
                tx_running: tx_sum / n,
                queue: policy.queue().unwrap_or(f64::NAN),
            });
        }
    }
    let n = opts.horizon as f64;
    let w = (opts.horizon - window_start).max(1) as f64;
    let has_queue = policy.queue().is_some();
    RunMetrics {
        horizon: opts.horizon,
        ws_aaoi: aoi_sum / n,
        mean_tx: tx_sum / n,
        window_ws_aaoi: win_aoi / w,
        window_tx: win_tx / w,
        per_source_aaoi: per_source.iter().map(|s| s / n).collect(),
        mean_queue: has_queue.then(|| queue_sum / n),
        max_queue: has_queue.then_some(queue_max),
        lagrangian: opts
            .lambda
            .map(|l| (aoi_sum + l * (tx_sum - cfg.budget() * n)) / n),
        series,
    }
}

pub const SERIES_HEADER: &str = "slot,ws_aaoi_running,tx_running,queue";

pub fn write_series<W: Write>(mut out: W, series: &[SeriesPoint]) -> std::io::Result<()> {
    writeln!(out, "{SERIES_HEADER}")?;
    for p in series {
        if p.queue.is_nan() {
            writeln!(out, "{},{},{},", p.slot, p.ws_aaoi_running, p.tx_running)?;
        } else {
            writeln!(out, "{},{},{},{}", p.slot, p.ws_aaoi_running, p.tx_running, p.queue)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Replicated {
    pub runs: Vec<RunMetrics>,
    pub ws_aaoi: Estimate,
    pub mean_tx: Estimate,
    pub per_source: Vec<Estimate>,
    pub mean_queue: Option<Estimate>,
}

/// Independent replications with seeds `seed, seed + 1, …`, run in parallel.
/// `make` builds a fresh policy for each replication.
pub fn replicate<F>(make: F, cfg: &SystemConfig, horizon: u64, replications: usize, seed: u64) -> Replicated
where
    F: Fn() -> PolicyHandle + Sync,
{
    replicate_with(make, cfg, &SimOptions::new(horizon, seed), replications)
}

/// As [`replicate`], with replication `r` using seed `opts.seed + r`. Only the
/// first replication records a series.
pub fn replicate_with<F>(make: F, cfg: &SystemConfig, opts: &SimOptions, replications: usize) -> Replicated
where
    F: Fn() -> PolicyHandle + Sync,
{
    assert!(replications > 0);
    let runs: Vec<RunMetrics> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut o = *opts;
            o.seed = opts.seed + r as u64;
            if r > 0 {
                o.series_every = 0;
            }
            simulate(&mut make(), cfg, &o)
        })
        .collect();
    summarize(runs)
}

pub fn summarize(runs: Vec<RunMetrics>) -> Replicated {
    let est = |f: &dyn Fn(&RunMetrics) -> f64| Estimate::from_samples(&runs.iter().map(f).collect::<Vec<_>>(), 0.95);
    let sources = runs[0].per_source_aaoi.len();
    let per_source = (0..sources).map(|i| est(&|r| r.per_source_aaoi[i])).collect();
    let mean_queue = runs[0].mean_queue.is_some().then(|| est(&|r| r.mean_queue.unwrap_or(f64::NAN)));
    Replicated {
        ws_aaoi: est(&|r| r.ws_aaoi),
        mean_tx: est(&|r| r.mean_tx),
        per_source,
        mean_queue,
        runs,
    }
}
