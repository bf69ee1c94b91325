use rayon::prelude::*;

use super::{PolicyTable, Problem};
use crate::error::SolverError;
use crate::model::tx_cost;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMetrics {
    /// Weighted-sum average AoI at the destination.
    pub ws_aaoi: f64,
    /// Average number of transmissions per slot.
    pub mean_tx: f64,
    pub stationary: Vec<f64>,
    pub iterations: usize,
}

/// Stationary distribution of a row-stochastic sparse chain by power
/// iteration from the uniform distribution, stopping once
/// `‖μP − μ‖₁ ≤ tol`.
///
/// If the plain iteration has not settled after a quarter of the budget, the
/// lazy chain `(I + P)/2` is iterated instead; it has the same stationary
/// distribution and cannot oscillate.
pub fn stationary_distribution<'a, F>(
    num_states: usize,
    row: F,
    tol: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, usize), SolverError>
where
    F: Fn(usize) -> (&'a [u32], &'a [f64]) + Sync,
{
    stationary_distribution_from(num_states, row, tol, max_iterations, None)
}

/// As [`stationary_distribution`], starting from `initial` when given.
pub fn stationary_distribution_from<'a, F>(
    num_states: usize,
    row: F,
    tol: f64,
    max_iterations: usize,
    initial: Option<&[f64]>,
) -> Result<(Vec<f64>, usize), SolverError>
where
    F: Fn(usize) -> (&'a [u32], &'a [f64]) + Sync,
{
    // Pull formulation: predecessors of every state, built once.
    let mut counts = vec![0usize; num_states + 1];
    for s in 0..num_states {
        for &n in row(s).0 {
            counts[n as usize + 1] += 1;
        }
    }
    for k in 0..num_states {
        counts[k + 1] += counts[k];
    }
    let mut fill = counts.clone();
    let mut pred = vec![0u32; counts[num_states]];
    let mut weight = vec![0.0f64; counts[num_states]];
    for s in 0..num_states {
        let (next, prob) = row(s);
        for (&n, &p) in next.iter().zip(prob) {
            let slot = &mut fill[n as usize];
            pred[*slot] = s as u32;
            weight[*slot] = p;
            *slot += 1;
        }
    }

    let mut mu = match initial {
        Some(init) => {
            assert_eq!(init.len(), num_states, "initial distribution sized for another chain");
            let total: f64 = init.iter().sum();
            init.iter().map(|p| p / total).collect()
        }
        None => vec![1.0 / num_states as f64; num_states],
    };
    let mut next = vec![0.0; num_states];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iterations {
        let lazy = it > max_iterations / 4;
        next.par_iter_mut().enumerate().for_each(|(t, out)| {
            let (lo, hi) = (counts[t], counts[t + 1]);
            let mut acc = 0.0;
            for k in lo..hi {
                acc += mu[pred[k] as usize] * weight[k];
            }
            *out = if lazy { 0.5 * (acc + mu[t]) } else { acc };
        });
        let total: f64 = next.iter().sum();
        residual = 0.0;
        for (n, m) in next.iter_mut().zip(&mu) {
            *n /= total;
            residual += (*n - m).abs();
        }
        std::mem::swap(&mut mu, &mut next);
        if residual <= tol {
            return Ok((mu, it));
        }
    }
    Err(SolverError::StationaryNotConverged {
        iterations: max_iterations,
        residual,
    })
}

/// Long-run average AoI and transmission costs of a deterministic policy,
/// computed from the stationary distribution of the chain it induces.
pub fn evaluate_policy(
    problem: &Problem<'_>,
    policy: &PolicyTable,
    tol: f64,
    max_iterations: usize,
) -> Result<PolicyMetrics, SolverError> {
    evaluate_policy_from(problem, policy, tol, max_iterations, None)
}

/// As [`evaluate_policy`], with power iteration started from `initial`.
pub fn evaluate_policy_from(
    problem: &Problem<'_>,
    policy: &PolicyTable,
    tol: f64,
    max_iterations: usize,
    initial: Option<&[f64]>,
) -> Result<PolicyMetrics, SolverError> {
    let kernel = problem.kernel;
    let (stationary, iterations) = stationary_distribution_from(
        kernel.num_states(),
        |s| kernel.row(s, policy.action_index(s)),
        tol,
        max_iterations,
        initial,
    )?;
    let mut ws_aaoi = 0.0;
    let mut mean_tx = 0.0;
    for (s, &m) in stationary.iter().enumerate() {
        ws_aaoi += m * problem.costs[s];
        mean_tx += m * f64::from(tx_cost(policy.action(s)));
    }
    Ok(PolicyMetrics {
        ws_aaoi,
        mean_tx,
        stationary,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::TransitionKernel;
    use crate::model::{Action, AoiBound, SystemConfig};

    #[test]
    fn two_state_uniform_chain() {
        let next: Vec<u32> = vec![0, 1];
        let prob = vec![0.5, 0.5];
        let (mu, _) = stationary_distribution(2, |_| (&next[..], &prob[..]), 1e-12, 1000).unwrap();
        assert!((mu[0] - 0.5).abs() < 1e-12 && (mu[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn periodic_chain_still_converges() {
        let rows: Vec<(Vec<u32>, Vec<f64>)> = vec![(vec![1], vec![1.0]), (vec![0], vec![1.0]), (vec![0], vec![1.0])];
        let (mu, _) =
            stationary_distribution(3, |s| (&rows[s].0[..], &rows[s].1[..]), 1e-10, 10_000).unwrap();
        assert!((mu[0] - 0.5).abs() < 1e-9 && mu[2].abs() < 1e-9);
    }

    #[test]
    fn all_idle_has_no_transmissions() {
        let cfg = SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, 1.0, AoiBound::Finite(3)).unwrap();
        let kernel = TransitionKernel::build(&cfg).unwrap();
        let problem = Problem::new(&kernel, &cfg);
        let idle = PolicyTable::constant(kernel.indexer(), Action::IDLE);
        let m = evaluate_policy(&problem, &idle, 1e-10, 1_000_000).unwrap();
        assert_eq!(m.mean_tx, 0.0);
        assert!((m.stationary.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // Nothing is ever delivered, so both sources sit at the cap.
        assert!((m.ws_aaoi - 6.0).abs() < 1e-6);
    }
}
