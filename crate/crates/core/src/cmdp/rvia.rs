use rayon::prelude::*;

use super::{PolicyTable, Problem, SolverConfig};
use crate::error::SolverError;
use crate::model::{tx_cost, Action};

/// Value buffers of relative value iteration. `h = V − V(s_ref)` with the
/// reference state at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RviaWorkspace {
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    pub h_old: Vec<f64>,
}

impl RviaWorkspace {
    pub fn new(num_states: usize) -> Self {
        RviaWorkspace {
            v: vec![0.0; num_states],
            h: vec![0.0; num_states],
            h_old: vec![1.0; num_states],
        }
    }

    /// `max_s |h(s) − h_old(s)|`.
    pub fn span(&self) -> f64 {
        self.h
            .iter()
            .zip(&self.h_old)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub const REFERENCE_STATE: usize = 0;

#[derive(Debug, Clone)]
pub struct MdpSolution {
    pub policy: PolicyTable,
    /// `V(s_ref)`, the estimate of the optimal Lagrangian average cost.
    pub gain: f64,
    /// One Bellman backup of the final relative values.
    pub values: Vec<f64>,
    pub relative: Vec<f64>,
    pub sweeps: usize,
    pub span: f64,
}

fn minimize(
    problem: &Problem<'_>,
    s: usize,
    lambda: f64,
    h: &[f64],
    action_tx: &[f64],
    forced_beta: Option<usize>,
) -> (u16, f64) {
    let kernel = problem.kernel;
    let num_sources = problem.cfg.num_sources();
    let base = problem.costs[s] - lambda * problem.cfg.budget();
    let mut q = [f64::INFINITY; 64];
    let mut best = f64::INFINITY;
    for a in 0..kernel.num_actions() {
        if let Some(beta) = forced_beta {
            if a % (num_sources + 1) != beta {
                continue;
            }
        }
        let value = base + lambda * action_tx[a] + kernel.expectation(s, a, h);
        q[a] = value;
        best = best.min(value);
    }
    let tol = 1e-9 * (1.0 + best.abs());
    let chosen = (0..kernel.num_actions())
        .find(|&a| q[a] <= best + tol)
        .expect("at least one action evaluated");
    (chosen as u16, best)
}

/// Applies `min_a {L(s,a;λ) + Σ P h}` at every state and returns the greedy
/// actions together with the backed-up values.
///
/// With `structured`, states are visited in increasing index order, which is
/// increasing `y_i` along every source's axis. Once a state has chosen `β = i`,
/// every state above it along `y_i` only searches `α` with `β = i` fixed. If
/// several sources carry that mark at once the full action set is searched.
fn bellman_pass(problem: &Problem<'_>, lambda: f64, h: &[f64], structured: bool) -> (Vec<u16>, Vec<f64>) {
    let kernel = problem.kernel;
    let num_sources = problem.cfg.num_sources();
    assert!(kernel.num_actions() <= 64, "too many actions for the solver");
    let action_tx: Vec<f64> = (0..kernel.num_actions())
        .map(|a| f64::from(tx_cost(Action::from_index(a, num_sources))))
        .collect();
    let n = kernel.num_states();
    if !structured {
        return (0..n)
            .into_par_iter()
            .map(|s| minimize(problem, s, lambda, h, &action_tx, None))
            .unzip();
    }

    let indexer = kernel.indexer();
    let mut actions = vec![0u16; n];
    let mut values = vec![0.0; n];
    let mut marks = vec![0u32; n];
    for s in 0..n {
        let mut mark = 0u32;
        for i in 0..num_sources {
            if indexer.source_state(s, i).rel_dest == 0 {
                continue;
            }
            let below = s - indexer.stride(i);
            let beta_below = actions[below] as usize % (num_sources + 1);
            if marks[below] >> i & 1 == 1 || beta_below == i + 1 {
                mark |= 1 << i;
            }
        }
        marks[s] = mark;
        let forced = (mark.count_ones() == 1).then(|| mark.trailing_zeros() as usize + 1);
        let (a, v) = minimize(problem, s, lambda, h, &action_tx, forced);
        actions[s] = a;
        values[s] = v;
    }
    (actions, values)
}

/// One Jacobi sweep: `V ← T h`, `h_old ← h`, `h ← V − V(s_ref)`. Returns the
/// greedy actions used in the backup.
pub fn rvia_sweep(ws: &mut RviaWorkspace, problem: &Problem<'_>, lambda: f64, structured: bool) -> Vec<u16> {
    let (actions, values) = bellman_pass(problem, lambda, &ws.h, structured);
    let reference = values[REFERENCE_STATE];
    ws.v = values;
    std::mem::swap(&mut ws.h, &mut ws.h_old);
    for (h, v) in ws.h.iter_mut().zip(&ws.v) {
        *h = v - reference;
    }
    actions
}

/// Greedy policy with respect to `h`, the backed-up values `T h`, and the
/// Bellman residual `max_s |T h(s) − T h(s_ref) − h(s)|`.
pub fn extract_policy(problem: &Problem<'_>, lambda: f64, h: &[f64], structured: bool) -> (Vec<u16>, Vec<f64>, f64) {
    let (actions, values) = bellman_pass(problem, lambda, h, structured);
    let gain = values[REFERENCE_STATE];
    let residual = values
        .iter()
        .zip(h)
        .map(|(v, hs)| (v - gain - hs).abs())
        .fold(0.0, f64::max);
    (actions, values, residual)
}

/// Runs RVIA from `V = 0` until the span of successive relative values drops
/// to `epsilon`, then extracts the greedy policy.
pub fn solve_mdp(problem: &Problem<'_>, lambda: f64, solver: &SolverConfig) -> Result<MdpSolution, SolverError> {
    solve_mdp_from(problem, lambda, solver, None)
}

/// As [`solve_mdp`], starting from the relative values `initial` when given
/// (for instance those of a nearby multiplier).
pub fn solve_mdp_from(
    problem: &Problem<'_>,
    lambda: f64,
    solver: &SolverConfig,
    initial: Option<&[f64]>,
) -> Result<MdpSolution, SolverError> {
    let n = problem.kernel.num_states();
    let mut ws = RviaWorkspace::new(n);
    if let Some(h) = initial {
        assert_eq!(h.len(), n, "initial values sized for another kernel");
        ws.h.copy_from_slice(h);
    }
    let mut sweeps = 0;
    let mut span;
    loop {
        rvia_sweep(&mut ws, problem, lambda, solver.use_structure);
        sweeps += 1;
        span = ws.span();
        if span <= solver.epsilon {
            break;
        }
        if sweeps >= solver.max_sweeps {
            return Err(SolverError::NotConverged { sweeps, span });
        }
    }
    let (actions, values, residual) = extract_policy(problem, lambda, &ws.h, solver.use_structure);
    let indexer = problem.kernel.indexer();
    let mut policy = PolicyTable::new(indexer.num_sources(), indexer.bound(), actions);
    policy.lambda = lambda;
    policy.sweeps = sweeps;
    policy.bellman_residual = residual;
    policy.reference_state = REFERENCE_STATE;
    Ok(MdpSolution {
        gain: values[REFERENCE_STATE],
        policy,
        values,
        relative: ws.h,
        sweeps,
        span,
    })
}
