use super::PolicyTable;
use crate::kernel::StateIndexer;
use crate::model::SourceState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchingViolation {
    /// State where the relay forwards `source`.
    pub state: usize,
    /// 1-based source index.
    pub source: usize,
    /// The same state with `y_source` one higher, where it does not.
    pub above: usize,
    pub beta_above: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation {
    pub state: usize,
    pub source: usize,
    /// 0 for `θ`, 1 for `x`, 2 for `y`.
    pub coordinate: usize,
    pub neighbor: usize,
    pub decrease: f64,
}

/// The state with one coordinate of one source incremented, if it stays in
/// the simplex.
fn bump(indexer: &StateIndexer, state: usize, source: usize, coordinate: usize) -> Option<usize> {
    let s = indexer.source_state(state, source);
    if s.dest_aoi() >= indexer.bound() {
        return None;
    }
    let up = match coordinate {
        0 => SourceState::new(s.theta + 1, s.rel_relay, s.rel_dest),
        1 => SourceState::new(s.theta, s.rel_relay + 1, s.rel_dest),
        _ => SourceState::new(s.theta, s.rel_relay, s.rel_dest + 1),
    };
    let old = indexer.local_of(state, source);
    let new = indexer.local_index(up)?;
    Some(state - old * indexer.stride(source) + new * indexer.stride(source))
}

/// Checks the switching structure of the relay decision: if the relay
/// forwards source `i` in some state, it still does after `y_i` grows.
pub fn verify_switching(policy: &PolicyTable, indexer: &StateIndexer) -> Vec<SwitchingViolation> {
    let mut out = Vec::new();
    for s in 0..indexer.len() {
        let beta = policy.action(s).beta;
        if beta == 0 {
            continue;
        }
        if let Some(above) = bump(indexer, s, beta - 1, 2) {
            let beta_above = policy.action(above).beta;
            if beta_above != beta {
                out.push(SwitchingViolation {
                    state: s,
                    source: beta,
                    above,
                    beta_above,
                });
            }
        }
    }
    out
}

/// The same check for the transmitter decision along `x_i`. The solver only
/// guarantees the relay-side structure; this is reported, not enforced.
/// Returns `(violations, states checked)`.
pub fn transmitter_switching_report(policy: &PolicyTable, indexer: &StateIndexer) -> (usize, usize) {
    let mut violations = 0;
    let mut checked = 0;
    for s in 0..indexer.len() {
        let alpha = policy.action(s).alpha;
        if alpha == 0 {
            continue;
        }
        if let Some(above) = bump(indexer, s, alpha - 1, 1) {
            checked += 1;
            if policy.action(above).alpha != alpha {
                violations += 1;
            }
        }
    }
    (violations, checked)
}

/// Checks that `values` does not decrease (beyond `1e−8`) when any single
/// coordinate of any source is incremented within the simplex.
pub fn verify_value_monotonicity(values: &[f64], indexer: &StateIndexer) -> Vec<MonotonicityViolation> {
    let mut out = Vec::new();
    for s in 0..indexer.len() {
        for source in 0..indexer.num_sources() {
            for coordinate in 0..3 {
                if let Some(n) = bump(indexer, s, source, coordinate) {
                    let decrease = values[s] - values[n];
                    if decrease > 1e-8 {
                        out.push(MonotonicityViolation {
                            state: s,
                            source: source + 1,
                            coordinate,
                            neighbor: n,
                            decrease,
                        });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmdp::{solve_mdp, Problem, SolverConfig};
    use crate::kernel::TransitionKernel;
    use crate::model::{aoi_cost, Action, AoiBound, SystemConfig};
    use rand::{Rng, SeedableRng};

    #[test]
    fn solved_policy_has_structure() {
        let cfg = SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, 1.0, AoiBound::Finite(4)).unwrap();
        let kernel = TransitionKernel::build(&cfg).unwrap();
        let problem = Problem::new(&kernel, &cfg);
        let sol = solve_mdp(&problem, 1.25, &SolverConfig::default()).unwrap();
        assert!(verify_switching(&sol.policy, kernel.indexer()).is_empty());
        assert!(verify_value_monotonicity(&sol.values, kernel.indexer()).is_empty());
    }

    #[test]
    fn random_policy_is_caught() {
        let idx = StateIndexer::new(4, 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let actions = (0..idx.len()).map(|_| rng.gen_range(0..9u16)).collect();
        let p = PolicyTable::new(2, 4, actions);
        assert!(!verify_switching(&p, &idx).is_empty());
    }

    #[test]
    fn idle_relay_imposes_nothing() {
        let idx = StateIndexer::new(3, 2);
        let p = PolicyTable::constant(&idx, Action::new(1, 0));
        assert!(verify_switching(&p, &idx).is_empty());
    }

    #[test]
    fn monotonicity_controls() {
        let idx = StateIndexer::new(3, 2);
        assert!(verify_value_monotonicity(&vec![1.0; idx.len()], &idx).is_empty());
        let cfg = SystemConfig::unweighted(vec![0.5, 0.5], 0.5, 0.5, 1.0, AoiBound::Finite(3)).unwrap();
        let negated: Vec<f64> = (0..idx.len()).map(|s| -aoi_cost(&idx.decode(s), &cfg)).collect();
        assert!(!verify_value_monotonicity(&negated, &idx).is_empty());
    }
}
