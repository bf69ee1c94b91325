//! Comparison anchors: the budget-gated greedy baseline and a uniformly
//! random scheduler.

use rand::Rng;

use crate::model::{tx_cost, Action, SystemState};

/// Greedy scheduling gated by the running transmission average.
///
/// While the average number of transmissions so far is within the budget,
/// each link serves the source with the largest relative AoI on that link
/// (unweighted, lowest index on ties, idle if all are zero). Otherwise both
/// links idle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GreedyBaseline {
    transmissions: u64,
    slots: u64,
}

impl GreedyBaseline {
    pub fn new() -> Self {
        Self::default()
    }

    /// `D̄_t`, zero before the first slot.
    pub fn running_mean(&self) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            self.transmissions as f64 / self.slots as f64
        }
    }

    pub fn decide(&self, state: &SystemState, budget: f64) -> Action {
        greedy_decide(state, self.running_mean(), budget)
    }

    pub fn observe(&mut self, action: Action) {
        self.transmissions += u64::from(tx_cost(action));
        self.slots += 1;
    }
}

fn argmax_positive(values: impl Iterator<Item = u32>) -> usize {
    let mut best = (0, 0);
    for (k, v) in values.enumerate() {
        if v > best.1 {
            best = (k + 1, v);
        }
    }
    best.0
}

pub fn greedy_decide(state: &SystemState, running_mean: f64, budget: f64) -> Action {
    if running_mean > budget {
        return Action::IDLE;
    }
    Action::new(
        argmax_positive(state.sources.iter().map(|s| s.rel_relay)),
        argmax_positive(state.sources.iter().map(|s| s.rel_dest)),
    )
}

/// Both decisions uniform on `{0, …, I}`, independently.
pub fn random_decide<R: Rng + ?Sized>(rng: &mut R, num_sources: usize) -> Action {
    Action::new(rng.gen_range(0..=num_sources), rng.gen_range(0..=num_sources))
}
