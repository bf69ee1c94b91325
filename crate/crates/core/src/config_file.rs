//! Flat `key = value` configuration files with dotted keys.
//!
//! ```text
//! # two sources, paper parameters
//! sources = 2
//! aoi_bound = 6
//! mu = 0.5, 0.6
//! p1 = 0.7
//! p2 = 0.8
//! budget = 1.0
//! solver.zeta = 0.1
//! ```
//!
//! `mu` and `weight` take one value per source or a single value shared by
//! all; `source.<i>.mu` and `source.<i>.weight` (1-based) override single
//! entries. Unknown and repeated keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cmdp::SolverConfig;
use crate::drl::DrlConfig;
use crate::error::{ConfigError, Error};
use crate::model::{AoiBound, SystemConfig};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed key/value pairs before interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.trim().to_string(),
                });
            };
            let key = key.trim().to_string();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.trim().to_string(),
                });
            }
            if entries.contains_key(&key) {
                return Err(ConfigError::DuplicateKey { key, line });
            }
            entries.insert(
                key,
                Entry {
                    value: value.trim().to_string(),
                    line,
                },
            );
        }
        Ok(RawConfig { entries })
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        Ok(Self::parse(&std::fs::read_to_string(path)?)?)
    }

    /// Sets or replaces a key, as a command-line override would.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: 0,
            },
        );
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get_str(key).map(|v| parse_value(key, v)).transpose()
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        self.get_str(key).map(|v| parse_list(key, v)).transpose()
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError::invalid(key, format!("cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(ConfigError::invalid(key, "empty list"));
    }
    items.into_iter().map(|s| parse_value(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(ConfigError::invalid(key, format!("expected true or false, got `{other}`"))),
    }
}

/// Which scheduler `simulate` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// The feasible bisection endpoint.
    Cmdp,
    /// The infeasible endpoint; evaluated exactly, never simulated in sweeps.
    CmdpLower,
    Dpp,
    Greedy,
    Random,
    Drl,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Cmdp,
        PolicyKind::CmdpLower,
        PolicyKind::Dpp,
        PolicyKind::Greedy,
        PolicyKind::Random,
        PolicyKind::Drl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Cmdp => "cmdp",
            PolicyKind::CmdpLower => "cmdp_lower",
            PolicyKind::Dpp => "dpp",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Random => "random",
            PolicyKind::Drl => "drl",
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

/// The parameter an experiment varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Budget,
    /// Every arrival rate set to the grid value.
    ArrivalRate,
    /// Both link success probabilities set to the grid value.
    LinkReliability,
    /// Number of sources; per-source lists are cycled to the new length.
    Sources,
    /// `w₁` set to the grid value, the rest share `1 − w₁` equally.
    Weight,
    /// The drift-plus-penalty and reward weight `V`.
    Tradeoff,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Budget => "budget",
            SweepKind::ArrivalRate => "arrival_rate",
            SweepKind::LinkReliability => "link_reliability",
            SweepKind::Sources => "sources",
            SweepKind::Weight => "weight",
            SweepKind::Tradeoff => "tradeoff",
        }
    }
}

impl FromStr for SweepKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [
            SweepKind::Budget,
            SweepKind::ArrivalRate,
            SweepKind::LinkReliability,
            SweepKind::Sources,
            SweepKind::Weight,
            SweepKind::Tradeoff,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown sweep `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSection {
    pub horizon: u64,
    pub replications: usize,
    pub policy: PolicyKind,
    /// A saved table for `policy = cmdp`; solved from scratch when absent.
    pub policy_file: Option<PathBuf>,
    /// A saved network for `policy = drl`; trained from scratch when absent.
    pub checkpoint: Option<PathBuf>,
    pub series_every: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            horizon: 100_000,
            replications: 5,
            policy: PolicyKind::Dpp,
            policy_file: None,
            checkpoint: None,
            series_every: 1_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub name: String,
    pub sweep: SweepKind,
    pub grid: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    pub horizon: u64,
    pub replications: usize,
    /// AoI bound of the state space the constrained solver works on.
    pub table_bound: u32,
    pub series_every: u64,
}

/// Everything a configuration file can specify.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub seed: u64,
    pub solver: SolverConfig,
    pub dpp_v: f64,
    pub drl: DrlConfig,
    pub sim: SimSection,
    pub experiment: Option<ExperimentSection>,
}

const SOLVER_KEYS: [&str; 10] = [
    "solver.zeta",
    "solver.epsilon",
    "solver.lambda_minus",
    "solver.lambda_plus",
    "solver.max_sweeps",
    "solver.max_bisections",
    "solver.max_expansions",
    "solver.stationary_tol",
    "solver.max_power_iterations",
    "solver.use_structure",
];

const DRL_KEYS: [&str; 19] = [
    "drl.preset",
    "drl.v",
    "drl.gamma",
    "drl.hidden",
    "drl.learning_rate",
    "drl.rms_decay",
    "drl.batch_size",
    "drl.replay_capacity",
    "drl.min_fill",
    "drl.train_every",
    "drl.target_sync",
    "drl.eps_start",
    "drl.eps_end",
    "drl.eps_decay_fraction",
    "drl.steps_per_episode",
    "drl.episodes",
    "drl.state_scale",
    "drl.grad_clip",
    "drl.reward_scale",
];

const OTHER_KEYS: [&str; 24] = [
    "sources",
    "aoi_bound",
    "mu",
    "weight",
    "p1",
    "p2",
    "budget",
    "seed",
    "dpp.v",
    "sim.horizon",
    "sim.replications",
    "sim.policy",
    "sim.policy_file",
    "sim.checkpoint",
    "sim.series_every",
    "experiment.name",
    "experiment.sweep",
    "experiment.grid",
    "experiment.policies",
    "experiment.horizon",
    "experiment.replications",
    "experiment.table_bound",
    "experiment.series_every",
    "experiment.seed",
];

fn is_known(key: &str) -> bool {
    if SOLVER_KEYS.contains(&key) || DRL_KEYS.contains(&key) || OTHER_KEYS.contains(&key) {
        return true;
    }
    let parts: Vec<&str> = key.split('.').collect();
    matches!(parts.as_slice(), ["source", i, "mu" | "weight"] if i.parse::<usize>().is_ok())
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self, Error> {
        Ok(Self::from_raw(&RawConfig::read(path)?)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        if let Some(key) = raw.keys().find(|k| !is_known(k)) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                line: raw.line_of(key),
            });
        }
        let system = system_from(raw)?;
        let seed = raw.get("seed")?.unwrap_or(1);
        let solver = solver_from(raw)?;
        let dpp_v = raw.get("dpp.v")?.unwrap_or(100.0);
        if !(dpp_v >= 0.0) {
            return Err(ConfigError::invalid("dpp.v", "must be nonnegative"));
        }
        let drl = drl_from(raw)?;
        let sim = sim_from(raw)?;
        let experiment = experiment_from(raw, &sim)?;
        Ok(RunConfig {
            system,
            seed,
            solver,
            dpp_v,
            drl,
            sim,
            experiment,
        })
    }
}

fn system_from(raw: &RawConfig) -> Result<SystemConfig, ConfigError> {
    let mu_list: Option<Vec<f64>> = raw.get_list("mu")?;
    let w_list: Option<Vec<f64>> = raw.get_list("weight")?;
    let sources: usize = match raw.get("sources")? {
        Some(n) => n,
        None => mu_list
            .as_ref()
            .map(Vec::len)
            .ok_or_else(|| ConfigError::MissingKey("sources".into()))?,
    };
    if sources == 0 {
        return Err(ConfigError::invalid("sources", "must be positive"));
    }
    let expand = |key: &str, list: Option<Vec<f64>>, default: Option<f64>| -> Result<Vec<f64>, ConfigError> {
        let mut v = match list {
            Some(l) if l.len() == 1 => vec![l[0]; sources],
            Some(l) if l.len() == sources => l,
            Some(l) => {
                return Err(ConfigError::invalid(
                    key,
                    format!("{} values given for {sources} sources", l.len()),
                ))
            }
            None => vec![default.unwrap_or(f64::NAN); sources],
        };
        for (i, slot) in v.iter_mut().enumerate() {
            let k = format!("source.{}.{key}", i + 1);
            if let Some(x) = raw.get(&k)? {
                *slot = x;
            }
        }
        if let Some(i) = v.iter().position(|x| x.is_nan()) {
            return Err(ConfigError::MissingKey(format!("source.{}.{key}", i + 1)));
        }
        Ok(v)
    };
    for key in raw.keys().filter(|k| k.starts_with("source.")) {
        let i: usize = key.split('.').nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
        if i == 0 || i > sources {
            return Err(ConfigError::invalid(key, format!("source index must lie in 1..={sources}")));
        }
    }
    let mu = expand("mu", mu_list, None)?;
    let weights = expand("weight", w_list, Some(1.0))?;
    let need = |k: &str| -> Result<f64, ConfigError> { raw.get(k)?.ok_or_else(|| ConfigError::MissingKey(k.into())) };
    let bound = match raw.get_str("aoi_bound") {
        None => return Err(ConfigError::MissingKey("aoi_bound".into())),
        Some("unbounded") => AoiBound::Unbounded,
        Some(v) => AoiBound::Finite(parse_value("aoi_bound", v)?),
    };
    SystemConfig::new(mu, weights, need("p1")?, need("p2")?, need("budget")?, bound)
}

fn solver_from(raw: &RawConfig) -> Result<SolverConfig, ConfigError> {
    let mut s = SolverConfig::default();
    macro_rules! set {
        ($field:ident, $key:literal) => {
            if let Some(v) = raw.get($key)? {
                s.$field = v;
            }
        };
    }
    set!(zeta, "solver.zeta");
    set!(epsilon, "solver.epsilon");
    set!(lambda_minus, "solver.lambda_minus");
    set!(lambda_plus, "solver.lambda_plus");
    set!(max_sweeps, "solver.max_sweeps");
    set!(max_bisections, "solver.max_bisections");
    set!(max_expansions, "solver.max_expansions");
    set!(stationary_tol, "solver.stationary_tol");
    set!(max_power_iterations, "solver.max_power_iterations");
    if let Some(v) = raw.get_str("solver.use_structure") {
        s.use_structure = parse_bool("solver.use_structure", v)?;
    }
    s.validate()
        .map_err(|e| ConfigError::invalid("solver", e.to_string()))?;
    Ok(s)
}

fn drl_from(raw: &RawConfig) -> Result<DrlConfig, ConfigError> {
    let mut d = match raw.get_str("drl.preset") {
        None | Some("desk") => DrlConfig::desk(),
        Some("paper") => DrlConfig::default(),
        Some(other) => {
            return Err(ConfigError::invalid(
                "drl.preset",
                format!("expected `desk` or `paper`, got `{other}`"),
            ))
        }
    };
    macro_rules! set {
        ($field:ident, $key:literal) => {
            if let Some(v) = raw.get($key)? {
                d.$field = v;
            }
        };
    }
    set!(v, "drl.v");
    set!(gamma, "drl.gamma");
    set!(learning_rate, "drl.learning_rate");
    set!(rms_decay, "drl.rms_decay");
    set!(batch_size, "drl.batch_size");
    set!(replay_capacity, "drl.replay_capacity");
    set!(min_fill, "drl.min_fill");
    set!(train_every, "drl.train_every");
    set!(target_sync, "drl.target_sync");
    set!(eps_start, "drl.eps_start");
    set!(eps_end, "drl.eps_end");
    set!(eps_decay_fraction, "drl.eps_decay_fraction");
    set!(steps_per_episode, "drl.steps_per_episode");
    set!(episodes, "drl.episodes");
    set!(state_scale, "drl.state_scale");
    set!(grad_clip, "drl.grad_clip");
    set!(reward_scale, "drl.reward_scale");
    if let Some(h) = raw.get_list("drl.hidden")? {
        d.hidden = h;
    }
    d.validate().map_err(|e| ConfigError::invalid("drl", e.to_string()))?;
    Ok(d)
}

fn sim_from(raw: &RawConfig) -> Result<SimSection, ConfigError> {
    let mut s = SimSection::default();
    if let Some(v) = raw.get("sim.horizon")? {
        s.horizon = v;
    }
    if let Some(v) = raw.get("sim.replications")? {
        s.replications = v;
    }
    if let Some(v) = raw.get_str("sim.policy") {
        s.policy = v.parse().map_err(|e: String| ConfigError::invalid("sim.policy", e))?;
    }
    s.policy_file = raw.get_str("sim.policy_file").map(PathBuf::from);
    s.checkpoint = raw.get_str("sim.checkpoint").map(PathBuf::from);
    if let Some(v) = raw.get("sim.series_every")? {
        s.series_every = v;
    }
    if s.horizon == 0 {
        return Err(ConfigError::invalid("sim.horizon", "must be positive"));
    }
    if s.replications == 0 {
        return Err(ConfigError::invalid("sim.replications", "must be positive"));
    }
    Ok(s)
}

fn experiment_from(raw: &RawConfig, sim: &SimSection) -> Result<Option<ExperimentSection>, ConfigError> {
    let Some(sweep) = raw.get_str("experiment.sweep") else {
        if let Some(k) = raw.keys().find(|k| k.starts_with("experiment.")) {
            return Err(ConfigError::MissingKey(format!("experiment.sweep (required by `{k}`)")));
        }
        return Ok(None);
    };
    let sweep: SweepKind = sweep
        .parse()
        .map_err(|e: String| ConfigError::invalid("experiment.sweep", e))?;
    let grid: Vec<f64> = raw
        .get_list("experiment.grid")?
        .ok_or_else(|| ConfigError::MissingKey("experiment.grid".into()))?;
    if sweep == SweepKind::Sources && grid.iter().any(|g| g.fract() != 0.0 || *g < 1.0) {
        return Err(ConfigError::invalid("experiment.grid", "source counts must be positive integers"));
    }
    let policies = match raw.get_str("experiment.policies") {
        Some(v) => v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e: String| ConfigError::invalid("experiment.policies", e)))
            .collect::<Result<Vec<PolicyKind>, _>>()?,
        None => vec![PolicyKind::Cmdp, PolicyKind::Dpp, PolicyKind::Greedy],
    };
    if policies.is_empty() {
        return Err(ConfigError::invalid("experiment.policies", "empty list"));
    }
    let e = ExperimentSection {
        name: raw.get_str("experiment.name").unwrap_or(sweep.name()).to_string(),
        sweep,
        grid,
        policies,
        horizon: raw.get("experiment.horizon")?.unwrap_or(sim.horizon),
        replications: raw.get("experiment.replications")?.unwrap_or(sim.replications),
        table_bound: raw.get("experiment.table_bound")?.unwrap_or(10),
        series_every: raw.get("experiment.series_every")?.unwrap_or(sim.series_every),
    };
    if e.horizon == 0 || e.replications == 0 {
        return Err(ConfigError::invalid("experiment", "horizon and replications must be positive"));
    }
    if e.table_bound < 2 {
        return Err(ConfigError::invalid("experiment.table_bound", "must be at least 2"));
    }
    Ok(Some(e))
}
