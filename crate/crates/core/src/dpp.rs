//! Drift-plus-penalty scheduling with a virtual queue for the transmission
//! budget.
//!
//! The queue `H` accumulates budget overshoot, `H' = max(H − Γmax + D(a), 0)`.
//! Each slot the transmitter (relay) sends the source maximizing
//! `V p₁ wᵢ xᵢ` (`V p₂ wᵢ yᵢ`) provided that score reaches `H`.

use crate::model::{tx_cost, Action, SystemConfig, SystemState};

/// `max(H − Γmax + D(a), 0)`.
pub fn queue_update(h: f64, action: Action, budget: f64) -> f64 {
    (h - budget + f64::from(tx_cost(action))).max(0.0)
}

/// Index (1-based) and value of the best positive score, lowest index first.
fn best_source(scores: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, score) in scores.enumerate() {
        if score > 0.0 && best.map_or(true, |(_, b)| score > b) {
            best = Some((k + 1, score));
        }
    }
    best
}

/// The per-slot rule. Works on bounded and unbounded states alike.
pub fn decide(state: &SystemState, h: f64, cfg: &SystemConfig, v: f64) -> Action {
    let weights = cfg.weights();
    let relay = best_source(
        state
            .sources
            .iter()
            .zip(weights)
            .map(|(s, w)| v * cfg.p_relay() * w * f64::from(s.rel_relay)),
    );
    let dest = best_source(
        state
            .sources
            .iter()
            .zip(weights)
            .map(|(s, w)| v * cfg.p_dest() * w * f64::from(s.rel_dest)),
    );
    let pick = |best: Option<(usize, f64)>| match best {
        Some((i, score)) if score >= h => i,
        _ => 0,
    };
    Action::new(pick(relay), pick(dest))
}

/// Upper bound on the time-average queue backlog,
/// `(B + Ṽ)/Γmax` with `B = Γmax²/2 + 2` and `Ṽ = V (5N + 4) Σ wᵢ`.
pub fn stability_bound(cfg: &SystemConfig, v: f64, bound: u32) -> f64 {
    let budget = cfg.budget();
    let b = 0.5 * budget * budget + 2.0;
    let w: f64 = cfg.weights().iter().sum();
    let v_tilde = v * (5.0 * f64::from(bound) + 4.0) * w;
    (b + v_tilde) / budget
}

/// DPP-SP as a stateful scheduler: the tradeoff `V` and the queue.
#[derive(Debug, Clone, PartialEq)]
pub struct DppScheduler {
    pub v: f64,
    pub queue: f64,
}

impl DppScheduler {
    pub fn new(v: f64) -> Self {
        DppScheduler { v, queue: 0.0 }
    }

    pub fn decide(&self, state: &SystemState, cfg: &SystemConfig) -> Action {
        decide(state, self.queue, cfg, self.v)
    }

    pub fn observe(&mut self, action: Action, cfg: &SystemConfig) {
        self.queue = queue_update(self.queue, action, cfg.budget());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AoiBound;

    fn cfg(budget: f64) -> SystemConfig {
        SystemConfig::unweighted(vec![0.5, 0.7], 0.7, 0.8, budget, AoiBound::Unbounded).unwrap()
    }

    #[test]
    fn queue_examples() {
        assert!((queue_update(2.5, Action::IDLE, 1.2) - 1.3).abs() < 1e-12);
        assert!((queue_update(0.0, Action::new(1, 2), 1.2) - 0.8).abs() < 1e-12);
        assert!((queue_update(0.5, Action::new(0, 1), 1.2) - 0.3).abs() < 1e-12);
        assert_eq!(queue_update(0.1, Action::IDLE, 1.2), 0.0);
    }

    #[test]
    fn rule_examples() {
        let c = cfg(1.2);
        let s = SystemState::from_triples(&[(0, 2, 0), (0, 5, 0)]);
        assert_eq!(decide(&s, 300.0, &c, 100.0).alpha, 2);
        assert_eq!(decide(&s, 351.0, &c, 100.0).alpha, 0);
        let s = SystemState::from_triples(&[(0, 0, 1), (0, 0, 0)]);
        assert_eq!(decide(&s, 100.0, &c, 100.0).beta, 0);
        assert_eq!(decide(&s, 80.0, &c, 100.0).beta, 1);
        assert_eq!(decide(&SystemState::fresh(2), 0.0, &c, 100.0), Action::IDLE);
    }

    #[test]
    fn lowest_index_on_ties() {
        let s = SystemState::from_triples(&[(0, 3, 2), (0, 3, 2)]);
        assert_eq!(decide(&s, 0.0, &cfg(1.0), 1.0), Action::new(1, 1));
    }

    #[test]
    fn bound_examples() {
        let c = cfg(1.2);
        assert!((stability_bound(&c, 0.0, 10) - 2.72 / 1.2).abs() < 1e-12);
        assert!((stability_bound(&c, 1.0, 10) - 110.72 / 1.2).abs() < 1e-9);
        assert!((stability_bound(&c, 1.0, 10) - 92.27).abs() < 0.01);
    }
}
