//! The bounded state space and its exact transition kernel.
//!
//! Per source, the reachable triples form the simplex `θ + x + y ≤ N` with
//! `(N+1)(N+2)(N+3)/6` points; the joint space is the `I`-fold product. The
//! kernel factorizes across sources, so each `(state, action)` row is the
//! product of at most 8 per-source branches.

use std::collections::VecDeque;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::KernelError;
use crate::model::{self, tilde_triplet, Action, AoiBound, SourceState, SystemConfig, SystemState};
use crate::rng::{substream, EnvStreams, Stream};

/// Dense indexing of the bounded state space.
///
/// Per source, triples are numbered lexicographically in `(θ, x, y)` with `y`
/// fastest, so decrementing `y` decrements the local index by one. The joint
/// index is mixed radix with source 1 most significant; index 0 is the all-
/// fresh state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateIndexer {
    bound: u32,
    num_sources: usize,
    local_states: Vec<SourceState>,
    local_lookup: Vec<u32>,
    strides: Vec<usize>,
    total: usize,
}

const NO_INDEX: u32 = u32::MAX;

impl StateIndexer {
    pub fn new(bound: u32, num_sources: usize) -> Self {
        let side = (bound + 1) as usize;
        let mut local_lookup = vec![NO_INDEX; side * side * side];
        let mut local_states = Vec::new();
        for theta in 0..=bound {
            for x in 0..=bound - theta {
                for y in 0..=bound - theta - x {
                    let s = SourceState::new(theta, x, y);
                    local_lookup[Self::cube(side, s)] = local_states.len() as u32;
                    local_states.push(s);
                }
            }
        }
        let per_source = local_states.len();
        let mut strides = vec![1usize; num_sources];
        for i in (0..num_sources.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1].saturating_mul(per_source);
        }
        let total = per_source.checked_pow(num_sources as u32).unwrap_or(usize::MAX);
        StateIndexer {
            bound,
            num_sources,
            local_states,
            local_lookup,
            strides,
            total,
        }
    }

    /// Rejects unbounded configurations.
    pub fn for_config(cfg: &SystemConfig) -> Result<Self, KernelError> {
        match cfg.bound() {
            AoiBound::Finite(n) => Ok(Self::new(n, cfg.num_sources())),
            AoiBound::Unbounded => Err(KernelError::Unbounded),
        }
    }

    fn cube(side: usize, s: SourceState) -> usize {
        (s.theta as usize * side + s.rel_relay as usize) * side + s.rel_dest as usize
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }
    pub fn num_sources(&self) -> usize {
        self.num_sources
    }
    pub fn len(&self) -> usize {
        self.total
    }
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
    pub fn per_source_len(&self) -> usize {
        self.local_states.len()
    }
    /// Index offset of a unit step in source `i`'s local index (`i` is 0-based).
    pub fn stride(&self, source: usize) -> usize {
        self.strides[source]
    }

    pub fn local_index(&self, s: SourceState) -> Option<usize> {
        if s.dest_aoi() > self.bound {
            return None;
        }
        let side = (self.bound + 1) as usize;
        match self.local_lookup[Self::cube(side, s)] {
            NO_INDEX => None,
            k => Some(k as usize),
        }
    }

    pub fn local_state(&self, local: usize) -> SourceState {
        self.local_states[local]
    }

    /// Local index of source `source` (0-based) within joint index `index`.
    pub fn local_of(&self, index: usize, source: usize) -> usize {
        (index / self.strides[source]) % self.local_states.len()
    }

    pub fn source_state(&self, index: usize, source: usize) -> SourceState {
        self.local_states[self.local_of(index, source)]
    }

    pub fn encode(&self, state: &SystemState) -> Option<usize> {
        if state.sources.len() != self.num_sources {
            return None;
        }
        let mut index = 0;
        for (i, &s) in state.sources.iter().enumerate() {
            index += self.local_index(s)? * self.strides[i];
        }
        Some(index)
    }

    pub fn decode(&self, index: usize) -> SystemState {
        SystemState {
            sources: (0..self.num_sources)
                .map(|i| self.source_state(index, i))
                .collect(),
        }
    }

    /// The state reachable from everywhere under any deterministic policy:
    /// `(0, N, 0)` for sources that always have fresh arrivals, `(N, 0, 0)`
    /// otherwise.
    pub fn accessible_state(&self, cfg: &SystemConfig) -> usize {
        let state = SystemState {
            sources: cfg
                .arrival_rates()
                .iter()
                .map(|&mu| {
                    if mu >= 1.0 {
                        SourceState::new(0, self.bound, 0)
                    } else {
                        SourceState::new(self.bound, 0, 0)
                    }
                })
                .collect(),
        };
        self.encode(&state).expect("accessible state lies in the simplex")
    }
}

/// Number of `(θ, x, y)` triples with `θ + x + y ≤ N`.
pub fn simplex_size(bound: u32) -> usize {
    let n = bound as usize;
    (n + 1) * (n + 2) * (n + 3) / 6
}

/// Nonzero rows of the per-source transition law for one addressing pattern.
///
/// `relay_addressed` is `α = i` and `dest_addressed` is `β = i`. Rows that
/// coincide after capping are merged by adding their probabilities.
pub fn per_source_branches(
    s: SourceState,
    relay_addressed: bool,
    dest_addressed: bool,
    arrival_rate: f64,
    p_relay: f64,
    p_dest: f64,
    bound: u32,
) -> Vec<(SourceState, f64)> {
    let (t, x, y) = tilde_triplet(s, bound);
    let mut rows: Vec<(SourceState, f64)> = Vec::with_capacity(8);
    let arrival_cases = [(true, arrival_rate), (false, 1.0 - arrival_rate)];
    let relay_cases: &[(bool, f64)] = if relay_addressed {
        &[(true, p_relay), (false, 1.0 - p_relay)]
    } else {
        &[(false, 1.0)]
    };
    let dest_cases: &[(bool, f64)] = if dest_addressed {
        &[(true, p_dest), (false, 1.0 - p_dest)]
    } else {
        &[(false, 1.0)]
    };
    for &(arrival, pa) in &arrival_cases {
        for &(relay_ok, pr) in relay_cases {
            for &(dest_ok, pd) in dest_cases {
                let prob = pa * pr * pd;
                if prob <= 0.0 {
                    continue;
                }
                let theta = if arrival { 0 } else { t };
                let rel_relay = match (arrival, relay_ok) {
                    (true, true) => t,
                    (true, false) => x + t,
                    (false, true) => 0,
                    (false, false) => x,
                };
                let rel_dest = match (relay_ok, dest_ok) {
                    (true, true) => x,
                    (false, true) => 0,
                    (true, false) => y + x,
                    (false, false) => y,
                };
                let next = SourceState::new(theta, rel_relay, rel_dest);
                debug_assert!(next.dest_aoi() <= bound);
                match rows.iter_mut().find(|(st, _)| *st == next) {
                    Some(row) => row.1 += prob,
                    None => rows.push((next, prob)),
                }
            }
        }
    }
    rows
}

/// Sparse kernel: for every `(state, action)` a list of `(next, probability)`.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    indexer: StateIndexer,
    num_actions: usize,
    offsets: Vec<usize>,
    next: Vec<u32>,
    prob: Vec<f64>,
}

/// Upper limit on stored successor entries (about 1.2 GB).
const MAX_ENTRIES: usize = 100_000_000;

impl TransitionKernel {
    pub fn build(cfg: &SystemConfig) -> Result<Self, KernelError> {
        let indexer = StateIndexer::for_config(cfg)?;
        let num_sources = cfg.num_sources();
        let num_actions = cfg.num_actions();
        let estimate = indexer.len().saturating_mul(num_actions).saturating_mul(8);
        if indexer.len() > u32::MAX as usize || estimate / 8 * 2usize.pow(num_sources as u32).min(8) > MAX_ENTRIES {
            return Err(KernelError::TooLarge {
                states: indexer.len(),
                actions: num_actions,
            });
        }

        // branches[local][pattern] with pattern = relay_addressed | dest_addressed << 1
        let bound = indexer.bound();
        let per_source: Vec<Vec<Vec<Vec<(usize, f64)>>>> = (0..num_sources)
            .map(|i| {
                (0..indexer.per_source_len())
                    .map(|local| {
                        let s = indexer.local_state(local);
                        (0..4)
                            .map(|pattern| {
                                per_source_branches(
                                    s,
                                    pattern & 1 == 1,
                                    pattern & 2 == 2,
                                    cfg.arrival_rates()[i],
                                    cfg.p_relay(),
                                    cfg.p_dest(),
                                    bound,
                                )
                                .into_iter()
                                .map(|(st, p)| (indexer.local_index(st).expect("branch in simplex"), p))
                                .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let rows: Vec<(Vec<usize>, Vec<u32>, Vec<f64>)> = (0..indexer.len())
            .into_par_iter()
            .map(|s| {
                let mut lens = Vec::with_capacity(num_actions);
                let mut next = Vec::new();
                let mut prob = Vec::new();
                let locals: Vec<usize> = (0..num_sources).map(|i| indexer.local_of(s, i)).collect();
                let mut scratch: Vec<(usize, f64)> = Vec::new();
                for a in 0..num_actions {
                    let action = Action::from_index(a, num_sources);
                    scratch.clear();
                    scratch.push((0, 1.0));
                    for (i, &local) in locals.iter().enumerate() {
                        let pattern = usize::from(action.alpha == i + 1) | (usize::from(action.beta == i + 1) << 1);
                        let branches = &per_source[i][local][pattern];
                        let stride = indexer.stride(i);
                        let mut expanded = Vec::with_capacity(scratch.len() * branches.len());
                        for &(partial, pp) in &scratch {
                            for &(l, p) in branches {
                                expanded.push((partial + l * stride, pp * p));
                            }
                        }
                        scratch = expanded;
                    }
                    scratch.sort_unstable_by_key(|e| e.0);
                    let start = next.len();
                    for &(idx, p) in &scratch {
                        if next.len() > start && *next.last().unwrap() as usize == idx {
                            *prob.last_mut().unwrap() += p;
                        } else {
                            next.push(idx as u32);
                            prob.push(p);
                        }
                    }
                    lens.push(next.len() - start);
                }
                (lens, next, prob)
            })
            .collect();

        let total: usize = rows.iter().map(|r| r.1.len()).sum();
        let mut offsets = Vec::with_capacity(indexer.len() * num_actions + 1);
        let mut next = Vec::with_capacity(total);
        let mut prob = Vec::with_capacity(total);
        offsets.push(0);
        for (lens, n, p) in rows {
            let mut acc = next.len();
            for len in lens {
                acc += len;
                offsets.push(acc);
            }
            next.extend_from_slice(&n);
            prob.extend_from_slice(&p);
        }
        Ok(TransitionKernel {
            indexer,
            num_actions,
            offsets,
            next,
            prob,
        })
    }

    pub fn indexer(&self) -> &StateIndexer {
        &self.indexer
    }
    pub fn num_states(&self) -> usize {
        self.indexer.len()
    }
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
    pub fn num_entries(&self) -> usize {
        self.next.len()
    }

    /// Successor indices and probabilities for `(state, action index)`.
    #[inline]
    pub fn row(&self, state: usize, action: usize) -> (&[u32], &[f64]) {
        let k = state * self.num_actions + action;
        let (lo, hi) = (self.offsets[k], self.offsets[k + 1]);
        (&self.next[lo..hi], &self.prob[lo..hi])
    }

    /// `Σ P(s'|s,a) f(s')`.
    #[inline]
    pub fn expectation(&self, state: usize, action: usize, f: &[f64]) -> f64 {
        let (next, prob) = self.row(state, action);
        next.iter().zip(prob).map(|(&n, &p)| p * f[n as usize]).sum()
    }

    pub fn max_branches(&self) -> usize {
        self.offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_error(&self) -> f64 {
        (0..self.num_states() * self.num_actions)
            .map(|k| {
                let sum: f64 = self.prob[self.offsets[k]..self.offsets[k + 1]].iter().sum();
                (sum - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Diagnostic dump: `s_index,action_alpha,action_beta,next_index,prob`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s_index,action_alpha,action_beta,next_index,prob")?;
        let sources = self.indexer.num_sources();
        for s in 0..self.num_states() {
            for a in 0..self.num_actions {
                let action = Action::from_index(a, sources);
                let (next, prob) = self.row(s, a);
                for (n, p) in next.iter().zip(prob) {
                    writeln!(out, "{s},{},{},{n},{p:?}", action.alpha, action.beta)?;
                }
            }
        }
        Ok(())
    }
}

/// Outcome of a reachability check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnichainReport {
    pub target: usize,
    pub unichain: bool,
    /// A state from which the target is unreachable, if any.
    pub witness: Option<usize>,
    pub unreached: usize,
}

/// Reverse breadth-first search: returns the states that cannot reach
/// `target` along positive-probability edges.
pub fn unreachable_from<'a, F>(num_states: usize, successors: F, target: usize) -> Vec<usize>
where
    F: Fn(usize) -> &'a [u32],
{
    let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); num_states];
    for s in 0..num_states {
        for &n in successors(s) {
            reverse[n as usize].push(s as u32);
        }
    }
    let mut seen = vec![false; num_states];
    let mut queue = VecDeque::from([target]);
    seen[target] = true;
    while let Some(s) = queue.pop_front() {
        for &p in &reverse[s] {
            if !seen[p as usize] {
                seen[p as usize] = true;
                queue.push_back(p as usize);
            }
        }
    }
    (0..num_states).filter(|&s| !seen[s]).collect()
}

/// Checks that the accessible state is reachable from every state in the
/// chain induced by `policy` (one action index per state).
pub fn check_unichain(kernel: &TransitionKernel, cfg: &SystemConfig, policy: &[usize]) -> UnichainReport {
    let target = kernel.indexer().accessible_state(cfg);
    let missing = unreachable_from(kernel.num_states(), |s| kernel.row(s, policy[s]).0, target);
    UnichainReport {
        target,
        unichain: missing.is_empty(),
        witness: missing.first().copied(),
        unreached: missing.len(),
    }
}

/// Successors of `(state, action)` obtained by pushing every combination of
/// arrivals and link outcomes through the simulator's capped dynamics.
/// Independent of [`per_source_branches`].
pub fn brute_force_row(
    indexer: &StateIndexer,
    cfg: &SystemConfig,
    state: usize,
    action: Action,
) -> Vec<(usize, f64)> {
    let num_sources = cfg.num_sources();
    let current = indexer.decode(state);
    let relay_cases: &[bool] = if action.alpha == 0 { &[false] } else { &[true, false] };
    let dest_cases: &[bool] = if action.beta == 0 { &[false] } else { &[true, false] };
    let mut out: Vec<(usize, f64)> = Vec::new();
    for mask in 0..(1usize << num_sources) {
        let arrivals: Vec<bool> = (0..num_sources).map(|i| mask >> i & 1 == 1).collect();
        let pa: f64 = arrivals
            .iter()
            .zip(cfg.arrival_rates())
            .map(|(&u, &mu)| if u { mu } else { 1.0 - mu })
            .product();
        for &relay_success in relay_cases {
            for &dest_success in dest_cases {
                let pr = match (action.alpha, relay_success) {
                    (0, _) => 1.0,
                    (_, true) => cfg.p_relay(),
                    (_, false) => 1.0 - cfg.p_relay(),
                };
                let pd = match (action.beta, dest_success) {
                    (0, _) => 1.0,
                    (_, true) => cfg.p_dest(),
                    (_, false) => 1.0 - cfg.p_dest(),
                };
                let p = pa * pr * pd;
                if p <= 0.0 {
                    continue;
                }
                let randomness = model::SlotRandomness {
                    arrivals: arrivals.clone(),
                    relay_success,
                    dest_success,
                };
                let next = model::advance(&current, action, &randomness, cfg);
                let idx = indexer.encode(&next).expect("capped dynamics stay in the simplex");
                match out.iter_mut().find(|e| e.0 == idx) {
                    Some(e) => e.1 += p,
                    None => out.push((idx, p)),
                }
            }
        }
    }
    out.sort_by_key(|e| e.0);
    out
}

/// Largest absolute probability difference between the kernel and
/// [`brute_force_row`] over every state and action, plus the number of rows
/// whose support differs.
pub fn compare_with_brute_force(kernel: &TransitionKernel, cfg: &SystemConfig) -> (f64, usize) {
    let sources = cfg.num_sources();
    (0..kernel.num_states())
        .into_par_iter()
        .map(|s| {
            let mut max_diff = 0.0f64;
            let mut support_mismatch = 0;
            for a in 0..kernel.num_actions() {
                let oracle = brute_force_row(kernel.indexer(), cfg, s, Action::from_index(a, sources));
                let (next, prob) = kernel.row(s, a);
                if oracle.len() != next.len() || oracle.iter().zip(next).any(|(o, &n)| o.0 != n as usize) {
                    support_mismatch += 1;
                    continue;
                }
                for (o, &p) in oracle.iter().zip(prob) {
                    max_diff = max_diff.max((o.1 - p).abs());
                }
            }
            (max_diff, support_mismatch)
        })
        .reduce(|| (0.0, 0), |a, b| (a.0.max(b.0), a.1 + b.1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct McViolation {
    pub state: usize,
    pub action: Action,
    pub next: usize,
    pub expected: f64,
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub pairs_checked: usize,
    pub trials_per_pair: usize,
    pub violations: Vec<McViolation>,
}

/// Compares empirical one-step frequencies of [`model::step`] against the
/// kernel. A branch is flagged when its frequency is more than four binomial
/// standard errors from the kernel probability (exact match for certain
/// branches), or when the simulator reaches a state the kernel excludes.
///
/// `max_pairs` limits the check to a seeded sample of `(state, action)`
/// pairs; `None` checks all of them.
pub fn monte_carlo_validate(
    kernel: &TransitionKernel,
    cfg: &SystemConfig,
    trials_per_pair: usize,
    max_pairs: Option<usize>,
    seed: u64,
) -> McReport {
    let sources = cfg.num_sources();
    let mut pairs: Vec<(usize, usize)> = (0..kernel.num_states())
        .flat_map(|s| (0..kernel.num_actions()).map(move |a| (s, a)))
        .collect();
    if let Some(limit) = max_pairs {
        if limit < pairs.len() {
            let mut rng = substream(seed, Stream::Init);
            pairs.shuffle(&mut rng);
            pairs.truncate(limit);
            pairs.sort_unstable();
        }
    }
    let violations: Vec<McViolation> = pairs
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, &(s, a))| {
            let action = Action::from_index(a, sources);
            let state = kernel.indexer().decode(s);
            let mut streams = EnvStreams::new(seed.wrapping_add(k as u64 + 1));
            let mut counts: Vec<(usize, usize)> = Vec::new();
            for _ in 0..trials_per_pair {
                let out = model::step(&state, action, cfg, &mut streams);
                let idx = kernel.indexer().encode(&out.next_state).unwrap_or(usize::MAX);
                match counts.iter_mut().find(|c| c.0 == idx) {
                    Some(c) => c.1 += 1,
                    None => counts.push((idx, 1)),
                }
            }
            let (next, prob) = kernel.row(s, a);
            let n = trials_per_pair as f64;
            let mut found = Vec::new();
            for (&ns, &p) in next.iter().zip(prob) {
                let observed = counts.iter().find(|c| c.0 == ns as usize).map_or(0, |c| c.1) as f64 / n;
                let se = (p * (1.0 - p) / n).sqrt();
                let ok = if se == 0.0 {
                    observed == p
                } else {
                    (observed - p).abs() <= 4.0 * se
                };
                if !ok {
                    found.push(McViolation {
                        state: s,
                        action,
                        next: ns as usize,
                        expected: p,
                        observed,
                    });
                }
            }
            for &(idx, c) in &counts {
                if !next.iter().any(|&ns| ns as usize == idx) {
                    found.push(McViolation {
                        state: s,
                        action,
                        next: idx,
                        expected: 0.0,
                        observed: c as f64 / n,
                    });
                }
            }
            found
        })
        .collect();
    McReport {
        pairs_checked: pairs.len(),
        trials_per_pair,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mu: Vec<f64>, bound: u32) -> SystemConfig {
        SystemConfig::unweighted(mu, 0.7, 0.8, 1.0, AoiBound::Finite(bound)).unwrap()
    }

    #[test]
    fn state_counts_by_enumeration() {
        let brute = |n: u32| {
            let mut c = 0;
            for t in 0..=n {
                for x in 0..=n {
                    for y in 0..=n {
                        if t + x + y <= n {
                            c += 1;
                        }
                    }
                }
            }
            c
        };
        assert_eq!(StateIndexer::new(3, 1).len(), 20);
        assert_eq!(brute(3), 20);
        assert_eq!(StateIndexer::new(10, 2).len(), 81_796);
        assert_eq!(brute(10) * brute(10), 81_796);
        for n in 2..8 {
            assert_eq!(simplex_size(n), brute(n));
        }
    }

    #[test]
    fn encode_decode_roundtrip() {
        let idx = StateIndexer::new(2, 1);
        for k in 0..idx.len() {
            assert_eq!(idx.encode(&idx.decode(k)), Some(k));
        }
        let idx = StateIndexer::new(3, 2);
        for k in 0..idx.len() {
            assert_eq!(idx.encode(&idx.decode(k)), Some(k));
        }
        assert_eq!(idx.encode(&SystemState::from_triples(&[(3, 1, 0), (0, 0, 0)])), None);
    }

    #[test]
    fn decrementing_y_precedes() {
        let idx = StateIndexer::new(4, 2);
        for k in 0..idx.len() {
            let st = idx.decode(k);
            for i in 0..2 {
                if st.sources[i].rel_dest > 0 {
                    let mut lower = st.clone();
                    lower.sources[i].rel_dest -= 1;
                    assert_eq!(idx.encode(&lower), Some(k - idx.stride(i)));
                }
            }
        }
    }

    #[test]
    fn both_links_first_row() {
        let rows = per_source_branches(SourceState::new(2, 3, 1), true, true, 0.5, 0.7, 0.8, 10);
        assert_eq!(rows.len(), 8);
        let (_, p) = rows.iter().find(|(s, _)| *s == SourceState::new(0, 3, 3)).unwrap();
        assert!((p - 0.28).abs() < 1e-15);
    }

    #[test]
    fn certain_arrival_unaddressed() {
        let s = SourceState::new(2, 3, 1);
        let rows = per_source_branches(s, false, false, 1.0, 0.7, 0.8, 10);
        let (t, x, y) = tilde_triplet(s, 10);
        assert_eq!(rows, vec![(SourceState::new(0, x + t, y), 1.0)]);
    }

    #[test]
    fn unaddressed_two_branches() {
        let rows = per_source_branches(SourceState::new(2, 3, 1), false, false, 0.5, 0.7, 0.8, 10);
        assert_eq!(
            rows,
            vec![(SourceState::new(0, 6, 1), 0.5), (SourceState::new(3, 3, 1), 0.5)]
        );
    }

    #[test]
    fn branch_counts_and_row_sums() {
        let c = cfg(vec![0.5, 0.6], 4);
        let k = TransitionKernel::build(&c).unwrap();
        assert!(k.max_row_error() < 1e-12);
        for s in 0..k.num_states() {
            assert!(k.row(s, Action::new(1, 1).index(2)).0.len() <= 16);
            assert!(k.row(s, Action::new(0, 0).index(2)).0.len() <= 4);
        }
        assert!(k.max_branches() <= 16);
    }

    #[test]
    fn saturated_state_with_certain_arrival() {
        let c = cfg(vec![1.0], 2);
        let k = TransitionKernel::build(&c).unwrap();
        let s = k.indexer().encode(&SystemState::from_triples(&[(2, 0, 0)])).unwrap();
        let (next, prob) = k.row(s, 0);
        assert_eq!(prob, &[1.0]);
        assert_eq!(k.indexer().decode(next[0] as usize), SystemState::from_triples(&[(0, 2, 0)]));
    }

    #[test]
    fn kernel_matches_brute_force_small() {
        let c = cfg(vec![0.5, 1.0], 3);
        let k = TransitionKernel::build(&c).unwrap();
        let (diff, mismatch) = compare_with_brute_force(&k, &c);
        assert_eq!(mismatch, 0);
        assert!(diff < 1e-14);
    }

    #[test]
    fn unbounded_rejected() {
        let c = SystemConfig::unweighted(vec![0.5], 0.7, 0.8, 1.0, AoiBound::Unbounded).unwrap();
        assert_eq!(TransitionKernel::build(&c).unwrap_err(), KernelError::Unbounded);
    }

    #[test]
    fn unichain_small_instances() {
        for mu in [0.5, 1.0] {
            let c = cfg(vec![mu], 2);
            let k = TransitionKernel::build(&c).unwrap();
            let expected = if mu < 1.0 { (2, 0, 0) } else { (0, 2, 0) };
            assert_eq!(
                k.indexer().decode(k.indexer().accessible_state(&c)),
                SystemState::from_triples(&[expected])
            );
            for a in 0..k.num_actions() {
                let policy = vec![a; k.num_states()];
                assert!(check_unichain(&k, &c, &policy).unichain);
            }
        }
    }

    #[test]
    fn checker_detects_two_absorbing_states() {
        // 0 -> 0, 1 -> 1, 2 -> {0, 1}
        let succ: Vec<Vec<u32>> = vec![vec![0], vec![1], vec![0, 1]];
        let missing = unreachable_from(3, |s| succ[s].as_slice(), 0);
        assert_eq!(missing, vec![1]);
    }

    #[test]
    fn monte_carlo_exact_branch_and_tolerance() {
        let c = cfg(vec![1.0], 2);
        let k = TransitionKernel::build(&c).unwrap();
        let report = monte_carlo_validate(&k, &c, 200, None, 3);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        // binomial standard error for the 0.28 branch at 10k trials
        let tol: f64 = 4.0 * (0.28f64 * 0.72 / 10_000.0).sqrt();
        assert!((tol - 0.018).abs() < 5e-4);
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let c = cfg(vec![0.5], 2);
        let k = TransitionKernel::build(&c).unwrap();
        let mut buf = Vec::new();
        k.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("s_index,action_alpha,action_beta,next_index,prob"));
        assert_eq!(lines.count(), k.num_entries());
    }
}
