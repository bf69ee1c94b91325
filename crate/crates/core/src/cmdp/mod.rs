//! Lagrangian relaxation of the constrained problem and its solution by
//! relative value iteration plus bisection over the multiplier.

mod bisection;
mod evaluate;
pub mod policy_io;
mod rvia;
mod structure;

pub use bisection::{bisect, BisectionOutcome, Endpoint, TraceEntry};
pub use evaluate::{
    evaluate_policy, evaluate_policy_from, stationary_distribution, stationary_distribution_from, PolicyMetrics,
};
pub use rvia::{extract_policy, rvia_sweep, solve_mdp, solve_mdp_from, MdpSolution, RviaWorkspace};
pub use structure::{
    transmitter_switching_report, verify_switching, verify_value_monotonicity, MonotonicityViolation,
    SwitchingViolation,
};

use crate::error::SolverError;
use crate::kernel::{StateIndexer, TransitionKernel};
use crate::model::{aoi_cost, tx_cost, Action, SystemConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Bisection stops once `λ⁺ − λ⁻ < zeta`.
    pub zeta: f64,
    /// RVIA stops once `max |h − h_old| ≤ epsilon`.
    pub epsilon: f64,
    pub lambda_minus: f64,
    /// First trial value for the upper end; doubled until feasible.
    pub lambda_plus: f64,
    pub max_sweeps: usize,
    pub max_bisections: usize,
    pub max_expansions: usize,
    pub stationary_tol: f64,
    pub max_power_iterations: usize,
    pub use_structure: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            zeta: 0.1,
            epsilon: 1e-3,
            lambda_minus: 0.0,
            lambda_plus: 1.0,
            max_sweeps: 200_000,
            max_bisections: 200,
            max_expansions: 40,
            stationary_tol: 1e-10,
            max_power_iterations: 2_000_000,
            use_structure: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str| Err(SolverError::InvalidConfig(what.to_string()));
        if !(self.zeta > 0.0) {
            return bad("zeta must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.lambda_minus >= 0.0 && self.lambda_minus < self.lambda_plus) {
            return bad("need 0 <= lambda_minus < lambda_plus");
        }
        if !(self.stationary_tol > 0.0) {
            return bad("stationary tolerance must be positive");
        }
        if self.max_sweeps == 0 || self.max_power_iterations == 0 {
            return bad("iteration limits must be positive");
        }
        Ok(())
    }
}

/// `C(s) + λ (D(a) − Γmax)`.
pub fn lagrangian_cost(aoi: f64, action: Action, lambda: f64, budget: f64) -> f64 {
    aoi + lambda * (f64::from(tx_cost(action)) - budget)
}

/// `C(s)` for every state of the kernel.
pub fn state_costs(indexer: &StateIndexer, cfg: &SystemConfig) -> Vec<f64> {
    (0..indexer.len()).map(|s| aoi_cost(&indexer.decode(s), cfg)).collect()
}

/// A deterministic stationary policy over the bounded state space.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    num_sources: usize,
    bound: u32,
    actions: Vec<u16>,
    pub lambda: f64,
    pub sweeps: usize,
    pub bellman_residual: f64,
    pub reference_state: usize,
}

impl PolicyTable {
    pub fn new(num_sources: usize, bound: u32, actions: Vec<u16>) -> Self {
        PolicyTable {
            num_sources,
            bound,
            actions,
            lambda: f64::NAN,
            sweeps: 0,
            bellman_residual: f64::NAN,
            reference_state: 0,
        }
    }

    /// The same action in every state.
    pub fn constant(indexer: &StateIndexer, action: Action) -> Self {
        let a = action.index(indexer.num_sources()) as u16;
        Self::new(indexer.num_sources(), indexer.bound(), vec![a; indexer.len()])
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }
    pub fn bound(&self) -> u32 {
        self.bound
    }
    pub fn len(&self) -> usize {
        self.actions.len()
    }
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn action(&self, state: usize) -> Action {
        Action::from_index(self.actions[state] as usize, self.num_sources)
    }

    pub fn action_index(&self, state: usize) -> usize {
        self.actions[state] as usize
    }

    pub fn action_indices(&self) -> &[u16] {
        &self.actions
    }

    pub fn indices_usize(&self) -> Vec<usize> {
        self.actions.iter().map(|&a| a as usize).collect()
    }

    /// Number of states where the two tables choose different actions.
    pub fn differences(&self, other: &PolicyTable) -> usize {
        self.actions.iter().zip(&other.actions).filter(|(a, b)| a != b).count()
    }
}

/// Shared handle to a kernel together with the configuration it was built for.
pub struct Problem<'a> {
    pub kernel: &'a TransitionKernel,
    pub cfg: &'a SystemConfig,
    pub costs: Vec<f64>,
}

impl<'a> Problem<'a> {
    pub fn new(kernel: &'a TransitionKernel, cfg: &'a SystemConfig) -> Self {
        let costs = state_costs(kernel.indexer(), cfg);
        Problem { kernel, cfg, costs }
    }
}
