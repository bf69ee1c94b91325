//! The `aoi-relay` command-line interface.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use crate::baseline::GreedyBaseline;
use crate::cmdp::policy_io::{read_policy, write_policy};
use crate::cmdp::{
    bisect, solve_mdp, transmitter_switching_report, verify_switching, verify_value_monotonicity, BisectionOutcome,
    PolicyTable, Problem,
};
use crate::complexity;
use crate::config_file::{PolicyKind, RunConfig};
use crate::dpp::DppScheduler;
use crate::drl::{checkpoint, train, write_training_log, FrozenAgent, Normalizer};
use crate::error::{ConfigError, Error};
use crate::experiment::{run_experiment, write_outputs, ExperimentSpec};
use crate::kernel::{check_unichain, compare_with_brute_force, monte_carlo_validate, TransitionKernel};
use crate::model::{AoiBound, SystemConfig};
use crate::rng::{substream, Stream};
use crate::sim::{replicate_with, write_series, PolicyHandle, SimOptions};

#[derive(Debug, Parser)]
#[command(name = "aoi-relay", version, about = "Age-of-information scheduling for two-hop relaying")]
pub struct Cli {
    /// Configuration file (flat `key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the transition kernel: row sums, brute-force agreement,
    /// reachability under random policies, Monte-Carlo frequencies.
    ValidateKernel(ValidateArgs),
    /// Bisection over the multiplier; writes both endpoint policies.
    Solve,
    /// Solve at fixed multipliers and check the switching structure and value
    /// monotonicity.
    Structure(StructureArgs),
    /// Simulate the configured policy.
    Simulate(SimulateArgs),
    /// Train the deep Q-learning policy.
    Train,
    /// Run the configured experiment sweep.
    Compare,
    /// Time value-iteration sweeps against state-space size.
    Complexity(ComplexityArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Monte-Carlo trials per (state, action) pair.
    #[arg(long, default_value_t = 2_000)]
    pub trials: usize,
    /// Number of sampled (state, action) pairs; 0 checks all.
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    /// Random deterministic policies checked for reachability.
    #[arg(long, default_value_t = 20)]
    pub policies: usize,
    /// Also write the kernel as `kernel.csv`.
    #[arg(long)]
    pub export: bool,
}

#[derive(Debug, Args)]
pub struct StructureArgs {
    /// Multipliers to solve at.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.25, 5.0])]
    pub lambda: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulate without the AoI bound (table policies clamp their input).
    #[arg(long)]
    pub unbounded: bool,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![3, 4, 5, 6])]
    pub bounds: Vec<u32>,
    /// Timed sweeps per bound (the median is reported).
    #[arg(long, default_value_t = 15)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Time the plain parallel sweep instead of the structure-aware one.
    #[arg(long)]
    pub unstructured: bool,
}

/// Parses `std::env::args` and runs. Exit status 1 reports failed checks,
/// 2 reports errors.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Runs one command; `Ok(false)` means a check reported violations.
pub fn run(cli: &Cli) -> Result<bool, Error> {
    std::fs::create_dir_all(&cli.out)?;
    let load = || -> Result<RunConfig, Error> {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| ConfigError::MissingKey("--config".into()))?;
        let mut cfg = RunConfig::read(path)?;
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    };
    match &cli.command {
        Command::ValidateKernel(a) => validate_kernel(&load()?, a, &cli.out),
        Command::Solve => solve(&load()?, &cli.out).map(|_| true),
        Command::Structure(a) => structure(&load()?, a, &cli.out),
        Command::Simulate(a) => simulate(&load()?, a, &cli.out).map(|_| true),
        Command::Train => train_cmd(&load()?, &cli.out).map(|_| true),
        Command::Compare => compare(&load()?, &cli.out).map(|_| true),
        Command::Complexity(a) => {
            let base = match &cli.config {
                Some(_) => load()?.system,
                None => SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, 1.0, AoiBound::Unbounded)?,
            };
            complexity_cmd(&base, a, &cli.out).map(|_| true)
        }
    }
}

fn bounded_kernel(cfg: &SystemConfig) -> Result<TransitionKernel, Error> {
    if cfg.bound() == AoiBound::Unbounded {
        return Err(ConfigError::invalid("aoi_bound", "this command needs a finite bound").into());
    }
    Ok(TransitionKernel::build(cfg)?)
}

fn validate_kernel(run: &RunConfig, a: &ValidateArgs, out: &Path) -> Result<bool, Error> {
    let cfg = &run.system;
    let kernel = bounded_kernel(cfg)?;
    let mut report = String::from("check,value,threshold,status\n");
    let mut ok = true;
    let mut line = |name: &str, value: f64, threshold: f64, pass: bool| {
        ok &= pass;
        let status = if pass { "pass" } else { "fail" };
        println!("{name:<28} {value:>12.4e}  (threshold {threshold:e})  {status}");
        let _ = writeln!(report, "{name},{value:e},{threshold:e},{status}");
    };
    let row_error = kernel.max_row_error();
    line("row_sum_error", row_error, 1e-12, row_error <= 1e-12);
    let (diff, mismatches) = compare_with_brute_force(&kernel, cfg);
    line("brute_force_max_diff", diff, 1e-12, diff <= 1e-12 && mismatches == 0);

    let mut rng = substream(run.seed, Stream::Init);
    let mut unreached = 0usize;
    for _ in 0..a.policies {
        let policy: Vec<usize> = (0..kernel.num_states())
            .map(|_| rng.gen_range(0..kernel.num_actions()))
            .collect();
        let r = check_unichain(&kernel, cfg, &policy);
        if let Some(w) = r.witness {
            eprintln!("state {w} cannot reach the accessible state {}", r.target);
        }
        unreached += r.unreached;
    }
    line("unichain_unreached_states", unreached as f64, 0.0, unreached == 0);

    let pairs = (a.pairs > 0).then_some(a.pairs);
    let mc = monte_carlo_validate(&kernel, cfg, a.trials, pairs, run.seed);
    for v in mc.violations.iter().take(10) {
        eprintln!(
            "state {} action ({}, {}) -> {}: kernel {:.5}, observed {:.5}",
            v.state, v.action.alpha, v.action.beta, v.next, v.expected, v.observed
        );
    }
    // Four standard errors leave a small false-alarm rate per branch; allow
    // one flagged branch per thousand pairs.
    let allowed = (mc.pairs_checked / 1000) as f64;
    let flagged = mc.violations.len() as f64;
    line("monte_carlo_violations", flagged, allowed, flagged <= allowed);

    std::fs::write(out.join("kernel_validation.csv"), report)?;
    if a.export {
        kernel.write_csv(BufWriter::new(File::create(out.join("kernel.csv"))?))?;
    }
    println!(
        "{} states, {} actions, {} entries: {}",
        kernel.num_states(),
        kernel.num_actions(),
        kernel.num_entries(),
        if ok { "clean" } else { "VIOLATIONS" }
    );
    Ok(ok)
}

fn solve_outcome(run: &RunConfig) -> Result<BisectionOutcome, Error> {
    let kernel = bounded_kernel(&run.system)?;
    let problem = Problem::new(&kernel, &run.system);
    Ok(bisect(&problem, &run.solver)?)
}

fn solve(run: &RunConfig, out: &Path) -> Result<BisectionOutcome, Error> {
    let outcome = solve_outcome(run)?;
    let cfg = &run.system;
    for (file, ep) in [("policy_lambda_plus.csv", &outcome.plus), ("policy_lambda_minus.csv", &outcome.minus)] {
        write_policy(BufWriter::new(File::create(out.join(file))?), &ep.solution.policy, cfg)?;
    }
    let mut metrics = String::from("endpoint,lambda,ws_aaoi,mean_tx,sweeps,bellman_residual,gain\n");
    for (name, ep) in [("plus", &outcome.plus), ("minus", &outcome.minus)] {
        let _ = writeln!(
            metrics,
            "{name},{},{},{},{},{},{}",
            ep.lambda,
            ep.metrics.ws_aaoi,
            ep.metrics.mean_tx,
            ep.solution.sweeps,
            ep.solution.policy.bellman_residual,
            ep.solution.gain
        );
    }
    std::fs::write(out.join("solve_metrics.csv"), metrics)?;
    let mut trace = String::from("lambda,ws_aaoi,mean_tx,sweeps\n");
    for t in &outcome.trace {
        let _ = writeln!(trace, "{},{},{},{}", t.lambda, t.ws_aaoi, t.mean_tx, t.sweeps);
    }
    std::fs::write(out.join("bisection_trace.csv"), trace)?;
    println!(
        "lambda+ = {:.4}: J = {:.4}, D = {:.4}\nlambda- = {:.4}: J = {:.4}, D = {:.4}\nbudget {}{}",
        outcome.plus.lambda,
        outcome.plus.metrics.ws_aaoi,
        outcome.plus.metrics.mean_tx,
        outcome.minus.lambda,
        outcome.minus.metrics.ws_aaoi,
        outcome.minus.metrics.mean_tx,
        cfg.budget(),
        if outcome.slack { " (constraint slack)" } else { "" }
    );
    Ok(outcome)
}

fn structure(run: &RunConfig, a: &StructureArgs, out: &Path) -> Result<bool, Error> {
    let cfg = &run.system;
    let kernel = bounded_kernel(cfg)?;
    let indexer = kernel.indexer();
    let problem = Problem::new(&kernel, cfg);
    let mut ok = true;
    let mut summary = String::from(
        "lambda,sweeps,switching_violations,monotonicity_violations,transmitter_violations,transmitter_checked\n",
    );
    for &lambda in &a.lambda {
        let sol = solve_mdp(&problem, lambda, &run.solver)?;
        let sw = verify_switching(&sol.policy, indexer);
        let mono = verify_value_monotonicity(&sol.values, indexer);
        let (tx_viol, tx_checked) = transmitter_switching_report(&sol.policy, indexer);
        ok &= sw.is_empty() && mono.is_empty();
        let _ = writeln!(
            summary,
            "{lambda},{},{},{},{tx_viol},{tx_checked}",
            sol.sweeps,
            sw.len(),
            mono.len()
        );
        println!(
            "lambda {lambda}: {} switching and {} monotonicity violations; transmitter side {tx_viol}/{tx_checked}",
            sw.len(),
            mono.len()
        );

        let mut header = String::from("state_index");
        for i in 1..=cfg.num_sources() {
            let _ = write!(header, ",theta_{i},x_{i},y_{i}");
        }
        header.push_str(",alpha,beta,value\n");
        let mut body = header;
        for s in 0..indexer.len() {
            let _ = write!(body, "{s}");
            for st in &indexer.decode(s).sources {
                let _ = write!(body, ",{},{},{}", st.theta, st.rel_relay, st.rel_dest);
            }
            let act = sol.policy.action(s);
            let _ = writeln!(body, ",{},{},{}", act.alpha, act.beta, sol.values[s]);
        }
        std::fs::write(out.join(format!("structure_{lambda}.csv")), body)?;
    }
    std::fs::write(out.join("structure_report.csv"), summary)?;
    Ok(ok)
}

/// The configured policy, solving or training it when no saved copy is
/// given.
fn policy_handle(run: &RunConfig) -> Result<PolicyHandle, Error> {
    let cfg = &run.system;
    Ok(match run.sim.policy {
        PolicyKind::Cmdp | PolicyKind::CmdpLower => {
            let table: PolicyTable = match &run.sim.policy_file {
                Some(path) => read_policy(BufReader::new(File::open(path)?), cfg)?,
                None => {
                    let o = solve_outcome(run)?;
                    if run.sim.policy == PolicyKind::Cmdp {
                        o.plus.solution.policy
                    } else {
                        o.minus.solution.policy
                    }
                }
            };
            PolicyHandle::table(Arc::new(table))
        }
        PolicyKind::Dpp => PolicyHandle::Dpp(DppScheduler::new(run.dpp_v)),
        PolicyKind::Greedy => PolicyHandle::Greedy(GreedyBaseline::new()),
        PolicyKind::Random => PolicyHandle::Random,
        PolicyKind::Drl => {
            let net = match &run.sim.checkpoint {
                Some(path) => checkpoint::load(BufReader::new(File::open(path)?), Some(&cfg.digest()))?.0,
                None => train(cfg, &run.drl, run.seed)?.agent.online,
            };
            PolicyHandle::Drl(FrozenAgent::new(Arc::new(net), Normalizer::new(cfg, &run.drl)))
        }
    })
}

fn simulate(run: &RunConfig, a: &SimulateArgs, out: &Path) -> Result<(), Error> {
    let handle = policy_handle(run)?;
    let cfg = if a.unbounded {
        run.system.with_bound(AoiBound::Unbounded)?
    } else {
        run.system.clone()
    };
    let mut opts = SimOptions::new(run.sim.horizon, run.seed);
    opts.series_every = run.sim.series_every;
    let rep = replicate_with(|| handle.clone(), &cfg, &opts, run.sim.replications);
    let name = run.sim.policy.name();
    let mut csv = String::from("replication,seed,ws_aaoi,mean_tx,window_ws_aaoi,window_tx,mean_queue,max_queue\n");
    for (r, m) in rep.runs.iter().enumerate() {
        let q = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{r},{},{},{},{},{},{},{}",
            run.seed + r as u64,
            m.ws_aaoi,
            m.mean_tx,
            m.window_ws_aaoi,
            m.window_tx,
            q(m.mean_queue),
            q(m.max_queue)
        );
    }
    std::fs::write(out.join(format!("simulate_{name}.csv")), csv)?;
    write_series(
        BufWriter::new(File::create(out.join(format!("series_{name}.csv")))?),
        &rep.runs[0].series,
    )?;
    println!(
        "{name}: WS-AAoI {:.4} [{:.4}, {:.4}], transmissions/slot {:.4} [{:.4}, {:.4}] over {} runs of {} slots",
        rep.ws_aaoi.mean,
        rep.ws_aaoi.ci_low,
        rep.ws_aaoi.ci_high,
        rep.mean_tx.mean,
        rep.mean_tx.ci_low,
        rep.mean_tx.ci_high,
        rep.runs.len(),
        run.sim.horizon
    );
    Ok(())
}

fn train_cmd(run: &RunConfig, out: &Path) -> Result<(), Error> {
    let outcome = train(&run.system, &run.drl, run.seed)?;
    write_training_log(BufWriter::new(File::create(out.join("training_log.csv"))?), &outcome.log)?;
    checkpoint::save(
        BufWriter::new(File::create(out.join("qnetwork.ckpt"))?),
        &outcome.agent.online,
        &run.system.digest(),
    )?;
    let tail = &outcome.log[outcome.log.len().saturating_sub(10)..];
    let n = tail.len() as f64;
    println!(
        "{} episodes; last {} episodes: transmissions/slot {:.4}, WS-AAoI {:.4}",
        outcome.log.len(),
        tail.len(),
        tail.iter().map(|e| e.mean_tx_per_slot).sum::<f64>() / n,
        tail.iter().map(|e| e.ws_aaoi).sum::<f64>() / n
    );
    Ok(())
}

fn compare(run: &RunConfig, out: &Path) -> Result<(), Error> {
    let spec = ExperimentSpec::from_run_config(run)?;
    let result = run_experiment(&spec);
    let files = write_outputs(&result, out, &spec.section.name)?;
    for c in &result.cells {
        println!(
            "{:>8} {:<10} WS-AAoI {:.4} [{:.4}, {:.4}]  tx {:.4}",
            c.sweep_value,
            c.policy.name(),
            c.ws_aaoi.mean,
            c.ws_aaoi.ci_low,
            c.ws_aaoi.ci_high,
            c.mean_tx.mean
        );
    }
    for e in &result.errors {
        eprintln!("cell {} / {} failed: {}", e.sweep_value, e.policy.name(), e.message);
    }
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn complexity_cmd(base: &SystemConfig, a: &ComplexityArgs, out: &Path) -> Result<(), Error> {
    let points = complexity::measure(base, &a.bounds, a.lambda, !a.unstructured, 2, a.sweeps)?;
    complexity::write_csv(BufWriter::new(File::create(out.join("complexity.csv"))?), &points)?;
    for p in &points {
        println!(
            "N={:>2} |S|={:>9} |S||A|={:>10} entries={:>10} sweep {:.3e} s",
            p.bound,
            p.states,
            p.states * p.actions,
            p.entries,
            p.sweep_seconds
        );
    }
    if points.len() >= 2 {
        println!("log-log slope of sweep time against |S||A|: {:.3}", complexity::fitted_slope(&points));
    }
    Ok(())
}
