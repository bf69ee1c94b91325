//! Parameter sweeps comparing policies, written out as CSV files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::baseline::GreedyBaseline;
use crate::cmdp::{bisect, BisectionOutcome, Problem, SolverConfig};
use crate::config_file::{ExperimentSection, PolicyKind, RunConfig, SweepKind};
use crate::dpp::DppScheduler;
use crate::drl::{train, DrlConfig, FrozenAgent, Normalizer};
use crate::error::{ConfigError, Error};
use crate::kernel::{StateIndexer, TransitionKernel};
use crate::model::{AoiBound, SystemConfig};
use crate::sim::{replicate_with, write_series, PolicyHandle, SeriesPoint, SimOptions};
use crate::stats::Estimate;

/// A fully resolved experiment: base parameters plus what to vary.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub solver: SolverConfig,
    pub dpp_v: f64,
    pub drl: DrlConfig,
    pub seed: u64,
    pub section: ExperimentSection,
}

impl ExperimentSpec {
    pub fn from_run_config(cfg: &RunConfig) -> Result<Self, ConfigError> {
        let section = cfg
            .experiment
            .clone()
            .ok_or_else(|| ConfigError::MissingKey("experiment.sweep".into()))?;
        Ok(ExperimentSpec {
            base: cfg.system.clone(),
            solver: cfg.solver.clone(),
            dpp_v: cfg.dpp_v,
            drl: cfg.drl.clone(),
            seed: cfg.seed,
            section,
        })
    }
}

/// One (sweep value, policy) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub sweep_value: f64,
    pub policy: PolicyKind,
    pub ws_aaoi: Estimate,
    pub mean_tx: Estimate,
    pub per_source: Vec<Estimate>,
    /// Running averages of the first replication.
    pub series: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellError {
    pub sweep_value: f64,
    pub policy: PolicyKind,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    pub cells: Vec<CellResult>,
    pub errors: Vec<CellError>,
}

impl ExperimentResult {
    pub fn cell(&self, sweep_value: f64, policy: PolicyKind) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.sweep_value == sweep_value && c.policy == policy)
    }

    /// Cells of one policy in grid order.
    pub fn curve(&self, policy: PolicyKind) -> Vec<&CellResult> {
        self.cells.iter().filter(|c| c.policy == policy).collect()
    }
}

/// The base configuration with the swept parameter set to `value`.
pub fn cell_config(base: &SystemConfig, sweep: SweepKind, value: f64) -> Result<SystemConfig, ConfigError> {
    let mu = base.arrival_rates();
    let w = base.weights();
    let n = base.num_sources();
    let (p1, p2, budget, bound) = (base.p_relay(), base.p_dest(), base.budget(), base.bound());
    match sweep {
        SweepKind::Budget => base.with_budget(value),
        SweepKind::ArrivalRate => SystemConfig::new(vec![value; n], w.to_vec(), p1, p2, budget, bound),
        SweepKind::LinkReliability => SystemConfig::new(mu.to_vec(), w.to_vec(), value, value, budget, bound),
        SweepKind::Sources => {
            let k = value as usize;
            let cycle = |v: &[f64]| (0..k).map(|i| v[i % v.len()]).collect::<Vec<_>>();
            SystemConfig::new(cycle(mu), cycle(w), p1, p2, budget, bound)
        }
        SweepKind::Weight => {
            if n < 2 {
                return Err(ConfigError::invalid("experiment.sweep", "a weight sweep needs two sources"));
            }
            if !(value > 0.0 && value < 1.0) {
                return Err(ConfigError::invalid("experiment.grid", "weights must lie in (0, 1)"));
            }
            let rest = (1.0 - value) / (n - 1) as f64;
            let weights = (0..n).map(|i| if i == 0 { value } else { rest }).collect();
            SystemConfig::new(mu.to_vec(), weights, p1, p2, budget, bound)
        }
        SweepKind::Tradeoff => Ok(base.clone()),
    }
}

fn solve_bisection(cfg: &SystemConfig, table_bound: u32, solver: &SolverConfig) -> Result<BisectionOutcome, Error> {
    let bounded = cfg.with_bound(AoiBound::Finite(table_bound))?;
    let kernel = TransitionKernel::build(&bounded)?;
    let problem = Problem::new(&kernel, &bounded);
    Ok(bisect(&problem, solver)?)
}

/// Exact per-source destination AoI under a stationary distribution.
fn stationary_per_source(stationary: &[f64], indexer: &StateIndexer) -> Vec<f64> {
    (0..indexer.num_sources())
        .map(|i| {
            stationary
                .iter()
                .enumerate()
                .map(|(s, p)| p * f64::from(indexer.source_state(s, i).dest_aoi()))
                .sum()
        })
        .collect()
}

struct CellContext<'a> {
    spec: &'a ExperimentSpec,
    cfg: SystemConfig,
    value: f64,
    dpp_v: f64,
    drl: DrlConfig,
    bisection: Option<Result<Arc<BisectionOutcome>, String>>,
}

impl CellContext<'_> {
    fn run(&self, policy: PolicyKind) -> Result<CellResult, String> {
        let section = &self.spec.section;
        let mut opts = SimOptions::new(section.horizon, self.spec.seed);
        opts.series_every = section.series_every;
        let outcome = || -> Result<Arc<BisectionOutcome>, String> {
            self.bisection.clone().expect("bisection prepared for table policies")
        };
        let handle: PolicyHandle = match policy {
            PolicyKind::CmdpLower => {
                let out = outcome()?;
                let m = &out.minus.metrics;
                let indexer = StateIndexer::new(section.table_bound, self.cfg.num_sources());
                return Ok(CellResult {
                    sweep_value: self.value,
                    policy,
                    ws_aaoi: Estimate::exact(m.ws_aaoi),
                    mean_tx: Estimate::exact(m.mean_tx),
                    per_source: stationary_per_source(&m.stationary, &indexer)
                        .into_iter()
                        .map(Estimate::exact)
                        .collect(),
                    series: Vec::new(),
                });
            }
            PolicyKind::Cmdp => PolicyHandle::table(Arc::new(outcome()?.plus.solution.policy.clone())),
            PolicyKind::Dpp => PolicyHandle::Dpp(DppScheduler::new(self.dpp_v)),
            PolicyKind::Greedy => PolicyHandle::Greedy(GreedyBaseline::new()),
            PolicyKind::Random => PolicyHandle::Random,
            PolicyKind::Drl => {
                let trained = train(&self.cfg, &self.drl, self.spec.seed).map_err(|e| e.to_string())?;
                let net = Arc::new(trained.agent.online);
                PolicyHandle::Drl(FrozenAgent::new(net, Normalizer::new(&self.cfg, &self.drl)))
            }
        };
        let rep = replicate_with(|| handle.clone(), &self.cfg, &opts, section.replications);
        let series = rep.runs[0].series.clone();
        Ok(CellResult {
            sweep_value: self.value,
            policy,
            ws_aaoi: rep.ws_aaoi,
            mean_tx: rep.mean_tx,
            per_source: rep.per_source,
            series,
        })
    }
}

/// Runs every (grid value, policy) cell in parallel. Each cell uses the same
/// seeds, so policies see common random numbers. Failed cells are recorded
/// and the sweep continues.
pub fn run_experiment(spec: &ExperimentSpec) -> ExperimentResult {
    let section = &spec.section;
    let needs_table = section
        .policies
        .iter()
        .any(|p| matches!(p, PolicyKind::Cmdp | PolicyKind::CmdpLower));
    let contexts: Vec<Result<CellContext<'_>, String>> = section
        .grid
        .par_iter()
        .map(|&value| {
            let cfg = cell_config(&spec.base, section.sweep, value).map_err(|e| e.to_string())?;
            let (mut dpp_v, mut drl) = (spec.dpp_v, spec.drl.clone());
            if section.sweep == SweepKind::Tradeoff {
                dpp_v = value;
                drl.v = value;
            }
            let bisection = needs_table.then(|| {
                solve_bisection(&cfg, section.table_bound, &spec.solver)
                    .map(Arc::new)
                    .map_err(|e| e.to_string())
            });
            Ok(CellContext {
                spec,
                cfg,
                value,
                dpp_v,
                drl,
                bisection,
            })
        })
        .collect();

    let jobs: Vec<(usize, PolicyKind)> = (0..section.grid.len())
        .flat_map(|g| section.policies.iter().map(move |&p| (g, p)))
        .collect();
    let outcomes: Vec<Result<CellResult, CellError>> = jobs
        .par_iter()
        .map(|&(g, policy)| {
            let value = section.grid[g];
            let fail = |message: String| CellError {
                sweep_value: value,
                policy,
                message,
            };
            match &contexts[g] {
                Ok(ctx) => ctx.run(policy).map_err(fail),
                Err(e) => Err(fail(e.clone())),
            }
        })
        .collect();

    let mut result = ExperimentResult::default();
    for o in outcomes {
        match o {
            Ok(c) => result.cells.push(c),
            Err(e) => result.errors.push(e),
        }
    }
    result
}

pub const SWEEP_HEADER: &str = "sweep_value,policy,mean,ci_low,ci_high";

fn estimate_row(out: &mut String, value: f64, policy: PolicyKind, extra: Option<usize>, e: &Estimate) {
    let _ = match extra {
        Some(i) => writeln!(out, "{value},{},{i},{},{},{}", policy.name(), e.mean, e.ci_low, e.ci_high),
        None => writeln!(out, "{value},{},{},{},{}", policy.name(), e.mean, e.ci_low, e.ci_high),
    };
}

/// Writes `<name>.csv` (WS-AAoI), `<name>_tx.csv`, `<name>_sources.csv`,
/// `<name>_errors.csv` and one series file per simulated cell. Returns the
/// paths written.
pub fn write_outputs(result: &ExperimentResult, dir: &Path, name: &str) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut main = format!("{SWEEP_HEADER}\n");
    let mut tx = format!("{SWEEP_HEADER}\n");
    let mut sources = "sweep_value,policy,source,mean,ci_low,ci_high\n".to_string();
    for c in &result.cells {
        estimate_row(&mut main, c.sweep_value, c.policy, None, &c.ws_aaoi);
        estimate_row(&mut tx, c.sweep_value, c.policy, None, &c.mean_tx);
        for (i, e) in c.per_source.iter().enumerate() {
            estimate_row(&mut sources, c.sweep_value, c.policy, Some(i + 1), e);
        }
        if !c.series.is_empty() {
            let path = dir.join(format!("{name}_series_{}_{}.csv", c.policy.name(), c.sweep_value));
            write_series(std::fs::File::create(&path)?, &c.series)?;
            written.push(path);
        }
    }
    let mut errors = "sweep_value,policy,error\n".to_string();
    for e in &result.errors {
        let _ = writeln!(errors, "{},{},\"{}\"", e.sweep_value, e.policy.name(), e.message.replace('"', "'"));
    }
    for (suffix, body) in [("", main), ("_tx", tx), ("_sources", sources), ("_errors", errors)] {
        let path = dir.join(format!("{name}{suffix}.csv"));
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SystemConfig {
        SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, 1.0, AoiBound::Unbounded).unwrap()
    }

    fn spec(sweep: SweepKind, grid: Vec<f64>, policies: Vec<PolicyKind>) -> ExperimentSpec {
        ExperimentSpec {
            base: base(),
            solver: SolverConfig::default(),
            dpp_v: 10.0,
            drl: DrlConfig::desk(),
            seed: 3,
            section: ExperimentSection {
                name: "t".into(),
                sweep,
                grid,
                policies,
                horizon: 4_000,
                replications: 3,
                table_bound: 4,
                series_every: 1_000,
            },
        }
    }

    #[test]
    fn cell_configs() {
        let b = base();
        assert_eq!(cell_config(&b, SweepKind::Budget, 0.4).unwrap().budget(), 0.4);
        assert_eq!(cell_config(&b, SweepKind::ArrivalRate, 0.9).unwrap().arrival_rates(), &[0.9, 0.9]);
        let l = cell_config(&b, SweepKind::LinkReliability, 0.3).unwrap();
        assert_eq!((l.p_relay(), l.p_dest()), (0.3, 0.3));
        assert_eq!(cell_config(&b, SweepKind::Sources, 3.0).unwrap().arrival_rates(), &[0.5, 0.6, 0.5]);
        assert_eq!(cell_config(&b, SweepKind::Weight, 0.25).unwrap().weights(), &[0.25, 0.75]);
        assert!(cell_config(&b, SweepKind::Weight, 1.5).is_err());
        assert!(cell_config(&b, SweepKind::Budget, 2.5).is_err());
    }

    #[test]
    fn small_sweep_produces_every_cell() {
        let s = spec(
            SweepKind::Budget,
            vec![0.8, 1.6],
            vec![PolicyKind::Cmdp, PolicyKind::CmdpLower, PolicyKind::Dpp, PolicyKind::Greedy],
        );
        let r = run_experiment(&s);
        assert!(r.errors.is_empty(), "{:?}", r.errors);
        assert_eq!(r.cells.len(), 8);
        let lower = r.cell(0.8, PolicyKind::CmdpLower).unwrap();
        assert_eq!(lower.ws_aaoi.ci_low, lower.ws_aaoi.mean);
        assert!((lower.per_source.iter().map(|e| e.mean).sum::<f64>() - lower.ws_aaoi.mean).abs() < 1e-6);
        assert_eq!(r.cell(1.6, PolicyKind::Dpp).unwrap().series.len(), 4);

        let dir = tempfile::tempdir().unwrap();
        let files = write_outputs(&r, dir.path(), "fig").unwrap();
        let main = std::fs::read_to_string(dir.path().join("fig.csv")).unwrap();
        assert_eq!(main.lines().next().unwrap(), SWEEP_HEADER);
        assert_eq!(main.lines().count(), 9);
        assert!(files.iter().any(|p| p.ends_with("fig_series_dpp_0.8.csv")));
    }

    #[test]
    fn failures_are_recorded_per_cell() {
        // Seven sources at bound 4 exceed the kernel size limit.
        let s = spec(SweepKind::Sources, vec![1.0, 7.0], vec![PolicyKind::Cmdp, PolicyKind::Greedy]);
        let r = run_experiment(&s);
        assert_eq!(r.cells.len(), 3);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].sweep_value, 7.0);
        assert_eq!(r.errors[0].policy, PolicyKind::Cmdp);
    }

    #[test]
    fn experiments_are_deterministic() {
        let s = spec(SweepKind::Weight, vec![0.3], vec![PolicyKind::Dpp, PolicyKind::Random]);
        let a = run_experiment(&s);
        let b = run_experiment(&s);
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&a, &dir.path().join("a"), "w").unwrap();
        write_outputs(&b, &dir.path().join("b"), "w").unwrap();
        for f in ["w.csv", "w_sources.csv", "w_series_dpp_0.3.csv"] {
            let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
            let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
            assert_eq!(x, y, "{f}");
        }
    }
}
