//! System parameters, state and action types, one-slot dynamics and costs.
//!
//! Each source `i` is described by the triple `(θ, x, y)`: the AoI at the
//! transmitter, the relative AoI at the relay `x = ψ − θ` and the relative AoI
//! at the destination `y = δ − ψ`. The destination AoI is `θ + x + y`.
//!
//! Two dynamics are provided. With a finite bound `N` every AoI is capped at
//! `N` and the per-source state lives in the simplex `θ + x + y ≤ N`; this is
//! the finite model the CMDP solver works on. Without a bound the compact
//! relative-AoI recursions are applied as is.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::ConfigError;
use crate::rng::EnvStreams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoiBound {
    Finite(u32),
    Unbounded,
}

impl AoiBound {
    pub fn finite(self) -> Option<u32> {
        match self {
            AoiBound::Finite(n) => Some(n),
            AoiBound::Unbounded => None,
        }
    }
}

impl fmt::Display for AoiBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AoiBound::Finite(n) => write!(f, "{n}"),
            AoiBound::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// Environment parameters shared by every policy and solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    arrival_rates: Vec<f64>,
    weights: Vec<f64>,
    p_relay: f64,
    p_dest: f64,
    budget: f64,
    bound: AoiBound,
}

impl SystemConfig {
    pub fn new(
        arrival_rates: Vec<f64>,
        weights: Vec<f64>,
        p_relay: f64,
        p_dest: f64,
        budget: f64,
        bound: AoiBound,
    ) -> Result<Self, ConfigError> {
        if arrival_rates.is_empty() {
            return Err(ConfigError::invalid("sources", "at least one source is required"));
        }
        if weights.len() != arrival_rates.len() {
            return Err(ConfigError::invalid(
                "weight",
                format!(
                    "{} weights given for {} sources",
                    weights.len(),
                    arrival_rates.len()
                ),
            ));
        }
        for (i, &mu) in arrival_rates.iter().enumerate() {
            if !(mu > 0.0 && mu <= 1.0) {
                return Err(ConfigError::invalid(
                    format!("source.{}.mu", i + 1),
                    format!("{mu} is outside (0, 1]"),
                ));
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(ConfigError::invalid(
                    format!("source.{}.weight", i + 1),
                    format!("{w} must be positive"),
                ));
            }
        }
        for (key, p) in [("p1", p_relay), ("p2", p_dest)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(ConfigError::invalid(key, format!("{p} is outside (0, 1]")));
            }
        }
        if !(budget > 0.0 && budget <= 2.0) {
            return Err(ConfigError::invalid("budget", format!("{budget} is outside (0, 2]")));
        }
        if let AoiBound::Finite(n) = bound {
            if n < 2 {
                return Err(ConfigError::invalid("aoi_bound", format!("{n} must be at least 2")));
            }
        }
        Ok(SystemConfig {
            arrival_rates,
            weights,
            p_relay,
            p_dest,
            budget,
            bound,
        })
    }

    /// Equal weights of one for every source.
    pub fn unweighted(
        arrival_rates: Vec<f64>,
        p_relay: f64,
        p_dest: f64,
        budget: f64,
        bound: AoiBound,
    ) -> Result<Self, ConfigError> {
        let weights = vec![1.0; arrival_rates.len()];
        Self::new(arrival_rates, weights, p_relay, p_dest, budget, bound)
    }

    pub fn num_sources(&self) -> usize {
        self.arrival_rates.len()
    }
    pub fn arrival_rates(&self) -> &[f64] {
        &self.arrival_rates
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn p_relay(&self) -> f64 {
        self.p_relay
    }
    pub fn p_dest(&self) -> f64 {
        self.p_dest
    }
    pub fn budget(&self) -> f64 {
        self.budget
    }
    pub fn bound(&self) -> AoiBound {
        self.bound
    }

    pub fn num_actions(&self) -> usize {
        (self.num_sources() + 1).pow(2)
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self, ConfigError> {
        Self::new(
            self.arrival_rates.clone(),
            self.weights.clone(),
            self.p_relay,
            self.p_dest,
            budget,
            self.bound,
        )
    }

    pub fn with_bound(&self, bound: AoiBound) -> Result<Self, ConfigError> {
        Self::new(
            self.arrival_rates.clone(),
            self.weights.clone(),
            self.p_relay,
            self.p_dest,
            self.budget,
            bound,
        )
    }

    /// Stable textual form used for digests.
    pub fn canonical(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        format!(
            "sources={};aoi_bound={};mu={};weight={};p1={:?};p2={:?};budget={:?}",
            self.num_sources(),
            self.bound,
            list(&self.arrival_rates),
            list(&self.weights),
            self.p_relay,
            self.p_dest,
            self.budget
        )
    }

    /// Hex SHA-256 prefix of [`canonical`](Self::canonical).
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&hash[..16])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct SourceState {
    /// AoI at the transmitter.
    pub theta: u32,
    /// Relay AoI minus transmitter AoI.
    pub rel_relay: u32,
    /// Destination AoI minus relay AoI.
    pub rel_dest: u32,
}

impl SourceState {
    pub const fn new(theta: u32, rel_relay: u32, rel_dest: u32) -> Self {
        SourceState {
            theta,
            rel_relay,
            rel_dest,
        }
    }

    pub fn relay_aoi(&self) -> u32 {
        self.theta.saturating_add(self.rel_relay)
    }

    pub fn dest_aoi(&self) -> u32 {
        self.relay_aoi().saturating_add(self.rel_dest)
    }

    fn from_ages(theta: u32, relay: u32, dest: u32) -> Self {
        debug_assert!(theta <= relay && relay <= dest);
        SourceState::new(theta, relay - theta, dest - relay)
    }
}

impl fmt::Display for SourceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.theta, self.rel_relay, self.rel_dest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SystemState {
    pub sources: Vec<SourceState>,
}

impl SystemState {
    /// Every source fresh everywhere: `(0, 0, 0)`.
    pub fn fresh(num_sources: usize) -> Self {
        SystemState {
            sources: vec![SourceState::default(); num_sources],
        }
    }

    pub fn from_triples(triples: &[(u32, u32, u32)]) -> Self {
        SystemState {
            sources: triples
                .iter()
                .map(|&(t, x, y)| SourceState::new(t, x, y))
                .collect(),
        }
    }

    pub fn is_within(&self, bound: u32) -> bool {
        self.sources.iter().all(|s| s.dest_aoi() <= bound)
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sources.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Transmitter decision `alpha` and relay decision `beta`; `0` idles the link,
/// `i >= 1` transmits source `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Action {
    pub alpha: usize,
    pub beta: usize,
}

impl Action {
    pub const IDLE: Action = Action { alpha: 0, beta: 0 };

    pub const fn new(alpha: usize, beta: usize) -> Self {
        Action { alpha, beta }
    }

    /// Dense index `alpha * (I + 1) + beta`, lexicographic in `(alpha, beta)`.
    pub fn index(&self, num_sources: usize) -> usize {
        self.alpha * (num_sources + 1) + self.beta
    }

    pub fn from_index(index: usize, num_sources: usize) -> Self {
        Action::new(index / (num_sources + 1), index % (num_sources + 1))
    }

    pub fn is_valid(&self, num_sources: usize) -> bool {
        self.alpha <= num_sources && self.beta <= num_sources
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.alpha, self.beta)
    }
}

/// Realized randomness of one slot. Link indicators are only meaningful when
/// the corresponding link was used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotRandomness {
    pub arrivals: Vec<bool>,
    pub relay_success: bool,
    pub dest_success: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub arrivals: Vec<bool>,
    pub relay_success: bool,
    pub dest_success: bool,
    pub next_state: SystemState,
    pub tx_cost: u32,
}

/// `(θ̃, x̃, ỹ)`: the capped one-slot aging of a source before any reset.
pub fn tilde_triplet(s: SourceState, bound: u32) -> (u32, u32, u32) {
    let t = (s.theta + 1).min(bound);
    let r = (s.theta + s.rel_relay + 1).min(bound);
    let d = (s.theta + s.rel_relay + s.rel_dest + 1).min(bound);
    (t, r - t, d - r)
}

/// Applies one slot of dynamics for a given realization of the randomness.
pub fn advance(
    state: &SystemState,
    action: Action,
    outcome: &SlotRandomness,
    cfg: &SystemConfig,
) -> SystemState {
    let sources = state
        .sources
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let i = k + 1;
            let arrival = outcome.arrivals[k];
            let relay_hit = action.alpha == i && outcome.relay_success;
            let dest_hit = action.beta == i && outcome.dest_success;
            match cfg.bound {
                AoiBound::Finite(n) => capped_source_step(s, arrival, relay_hit, dest_hit, n),
                AoiBound::Unbounded => compact_source_step(s, arrival, relay_hit, dest_hit),
            }
        })
        .collect();
    SystemState { sources }
}

/// Capped recursions on the absolute ages `(θ, ψ, δ)`. The relay forwards the
/// packet it held at the start of the slot.
fn capped_source_step(
    s: SourceState,
    arrival: bool,
    relay_hit: bool,
    dest_hit: bool,
    n: u32,
) -> SourceState {
    let (theta, relay, dest) = (s.theta, s.relay_aoi(), s.dest_aoi());
    let theta_next = if arrival { 0 } else { (theta + 1).min(n) };
    let relay_next = if relay_hit {
        (theta + 1).min(n)
    } else {
        (relay + 1).min(n)
    };
    let dest_next = if dest_hit {
        (relay + 1).min(n)
    } else {
        (dest + 1).min(n)
    };
    SourceState::from_ages(theta_next, relay_next, dest_next)
}

/// Uncapped recursions written directly on `(θ, x, y)`.
fn compact_source_step(s: SourceState, arrival: bool, relay_hit: bool, dest_hit: bool) -> SourceState {
    let aged = s.theta.saturating_add(1);
    let theta = if arrival { 0 } else { aged };
    let mut rel_relay = if relay_hit { 0 } else { s.rel_relay };
    if arrival {
        rel_relay = rel_relay.saturating_add(aged);
    }
    let mut rel_dest = if dest_hit { 0 } else { s.rel_dest };
    if relay_hit {
        rel_dest = rel_dest.saturating_add(s.rel_relay);
    }
    SourceState::new(theta, rel_relay, rel_dest)
}

/// Draws arrivals and link outcomes, then advances the state. Idle links do
/// not consume randomness.
pub fn step(
    state: &SystemState,
    action: Action,
    cfg: &SystemConfig,
    streams: &mut EnvStreams,
) -> StepOutcome {
    let arrivals: Vec<bool> = cfg.arrival_rates.iter().map(|&mu| streams.arrival(mu)).collect();
    let relay_success = action.alpha != 0 && streams.relay_success(cfg.p_relay);
    let dest_success = action.beta != 0 && streams.dest_success(cfg.p_dest);
    let randomness = SlotRandomness {
        arrivals,
        relay_success,
        dest_success,
    };
    let next_state = advance(state, action, &randomness, cfg);
    StepOutcome {
        arrivals: randomness.arrivals,
        relay_success,
        dest_success,
        next_state,
        tx_cost: tx_cost(action),
    }
}

/// Weighted sum of destination AoIs.
pub fn aoi_cost(state: &SystemState, cfg: &SystemConfig) -> f64 {
    state
        .sources
        .iter()
        .zip(&cfg.weights)
        .map(|(s, w)| w * f64::from(s.dest_aoi()))
        .sum()
}

pub fn tx_cost(action: Action) -> u32 {
    u32::from(action.alpha != 0) + u32::from(action.beta != 0)
}

/// Caps every source at destination AoI `bound`, dropping the oldest
/// information first (`y`, then `x`, then `θ`).
pub fn clamp_to_bound(state: &SystemState, bound: u32) -> SystemState {
    let sources = state
        .sources
        .iter()
        .map(|s| {
            let theta = s.theta.min(bound);
            let rel_relay = s.rel_relay.min(bound - theta);
            let rel_dest = s.rel_dest.min(bound - theta - rel_relay);
            SourceState::new(theta, rel_relay, rel_dest)
        })
        .collect();
    SystemState { sources }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(bound: AoiBound) -> SystemConfig {
        SystemConfig::unweighted(vec![0.5, 0.5], 0.7, 0.8, 1.0, bound).unwrap()
    }

    fn one(s: (u32, u32, u32)) -> SourceState {
        SourceState::new(s.0, s.1, s.2)
    }

    #[test]
    fn tilde_examples() {
        assert_eq!(tilde_triplet(one((2, 3, 1)), 10), (3, 3, 1));
        assert_eq!(tilde_triplet(one((10, 0, 0)), 10), (10, 0, 0));
        assert_eq!(tilde_triplet(one((2, 3, 1)), 5), (3, 2, 0));
    }

    #[test]
    fn compact_dynamics_examples() {
        let c = SystemConfig::unweighted(vec![0.5], 0.7, 0.8, 1.0, AoiBound::Unbounded).unwrap();
        let s = SystemState::from_triples(&[(3, 2, 4)]);
        let r = SlotRandomness {
            arrivals: vec![false],
            relay_success: true,
            dest_success: false,
        };
        let next = advance(&s, Action::new(1, 0), &r, &c);
        assert_eq!(next.sources[0], one((4, 0, 6)));

        let s = SystemState::from_triples(&[(3, 0, 5)]);
        let r = SlotRandomness {
            arrivals: vec![true],
            relay_success: false,
            dest_success: true,
        };
        let next = advance(&s, Action::new(0, 1), &r, &c);
        assert_eq!(next.sources[0], one((0, 4, 0)));
    }

    #[test]
    fn saturated_idle_fixed_point() {
        let c = SystemConfig::unweighted(vec![0.5], 0.7, 0.8, 1.0, AoiBound::Finite(10)).unwrap();
        let s = SystemState::from_triples(&[(10, 0, 0)]);
        let r = SlotRandomness {
            arrivals: vec![false],
            relay_success: false,
            dest_success: false,
        };
        assert_eq!(advance(&s, Action::IDLE, &r, &c), s);
    }

    #[test]
    fn simultaneous_success_matches_first_transition_row() {
        // Both links serve source 1 and succeed, with a fresh arrival:
        // next state is (0, θ̃, x̃).
        let c = cfg(AoiBound::Finite(10));
        let s = SystemState::from_triples(&[(2, 3, 1), (0, 0, 0)]);
        let r = SlotRandomness {
            arrivals: vec![true, false],
            relay_success: true,
            dest_success: true,
        };
        let next = advance(&s, Action::new(1, 1), &r, &c);
        let (t, x, _) = tilde_triplet(s.sources[0], 10);
        assert_eq!(next.sources[0], SourceState::new(0, t, x));
    }

    #[test]
    fn costs() {
        let c = cfg(AoiBound::Unbounded);
        let s = SystemState::from_triples(&[(1, 2, 3), (0, 1, 1)]);
        assert_eq!(aoi_cost(&s, &c), 8.0);
        assert_eq!(aoi_cost(&SystemState::fresh(2), &c), 0.0);
        let w = SystemConfig::new(vec![0.5, 0.5], vec![2.0, 1.0], 0.7, 0.8, 1.0, AoiBound::Unbounded).unwrap();
        let s = SystemState::from_triples(&[(1, 0, 0), (0, 0, 3)]);
        assert_eq!(aoi_cost(&s, &w), 5.0);

        assert_eq!(tx_cost(Action::new(0, 0)), 0);
        assert_eq!(tx_cost(Action::new(2, 0)), 1);
        assert_eq!(tx_cost(Action::new(1, 2)), 2);
    }

    #[test]
    fn clamp_examples() {
        let s = SystemState::from_triples(&[(3, 2, 4)]);
        assert_eq!(clamp_to_bound(&s, 12), s);
        assert_eq!(clamp_to_bound(&s, 7).sources[0], one((3, 2, 2)));
        let s = SystemState::from_triples(&[(9, 5, 0)]);
        assert_eq!(clamp_to_bound(&s, 10).sources[0], one((9, 1, 0)));
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::unweighted(vec![0.0], 0.5, 0.5, 1.0, AoiBound::Unbounded).is_err());
        assert!(SystemConfig::unweighted(vec![0.5], 1.5, 0.5, 1.0, AoiBound::Unbounded).is_err());
        assert!(SystemConfig::unweighted(vec![0.5], 0.5, 0.5, 2.5, AoiBound::Unbounded).is_err());
        assert!(SystemConfig::unweighted(vec![0.5], 0.5, 0.5, 1.0, AoiBound::Finite(1)).is_err());
        let err = SystemConfig::new(vec![0.5], vec![-1.0], 0.5, 0.5, 1.0, AoiBound::Unbounded).unwrap_err();
        assert!(err.to_string().contains("source.1.weight"));
    }

    #[test]
    fn action_index_roundtrip() {
        for i in 0..16 {
            assert_eq!(Action::from_index(i, 3).index(3), i);
        }
        assert_eq!(Action::new(1, 2).index(2), 5);
    }

    #[test]
    fn digest_tracks_parameters() {
        let a = cfg(AoiBound::Finite(6));
        let b = a.with_budget(1.2).unwrap();
        assert_eq!(a.digest(), cfg(AoiBound::Finite(6)).digest());
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 32);
    }
}
