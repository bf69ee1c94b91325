//! Deep reinforcement learning on the Lyapunov-shaped reward.
//!
//! The agent observes the augmented state `(s, H)` where `H` is the virtual
//! queue of the drift-plus-penalty scheduler, and receives
//! `r = −(½H'² − ½H² + V Σ wᵢ δᵢ')`. A dueling network with double Q-learning
//! targets is trained from experience replay with RMSProp.

pub mod checkpoint;
pub mod network;
pub mod optimizer;
pub mod replay;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dpp::queue_update;
use crate::error::DrlError;
use crate::model::{self, tx_cost, Action, SystemConfig, SystemState};
use crate::rng::{substream, EnvStreams, Stream};
use network::{argmax, QNetwork};
use optimizer::{clip_gradient, RmsProp};
use replay::{ReplayBuffer, Transition};

#[derive(Debug, Clone, PartialEq)]
pub struct DrlConfig {
    /// Penalty weight `V` in the reward.
    pub v: f64,
    pub gamma: f64,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Transitions collected before the first update.
    pub min_fill: usize,
    /// Environment steps between gradient updates.
    pub train_every: usize,
    pub target_sync: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of all training steps over which ε decays linearly.
    pub eps_decay_fraction: f64,
    pub steps_per_episode: usize,
    pub episodes: usize,
    /// AoI features are divided by this, the queue by `Γmax` times this.
    pub state_scale: f64,
    pub grad_clip: f64,
    /// Multiplies every reward before it enters the replay buffer.
    pub reward_scale: f64,
}

impl Default for DrlConfig {
    /// The published training setup.
    fn default() -> Self {
        DrlConfig {
            v: 100.0,
            gamma: 0.99,
            hidden: vec![512, 256],
            learning_rate: 1e-4,
            rms_decay: 0.99,
            batch_size: 64,
            replay_capacity: 100_000,
            min_fill: 1_000,
            train_every: 1,
            target_sync: 1_000,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_fraction: 0.2,
            steps_per_episode: 600,
            episodes: 500,
            state_scale: 50.0,
            grad_clip: 10.0,
            reward_scale: 1.0,
        }
    }
}

impl DrlConfig {
    /// A smaller network and a shorter run that train in about a minute on
    /// one core.
    pub fn desk() -> Self {
        DrlConfig {
            gamma: 0.9,
            hidden: vec![64, 64],
            learning_rate: 5e-4,
            replay_capacity: 50_000,
            train_every: 2,
            episodes: 150,
            reward_scale: 1e-3,
            ..DrlConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), DrlError> {
        let bad = |m: &str| Err(DrlError::InvalidConfig(m.to_string()));
        if !(self.v >= 0.0) {
            return bad("v must be nonnegative");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden sizes must be positive");
        }
        if !(self.learning_rate > 0.0) || !(self.state_scale > 0.0) || !(self.grad_clip > 0.0) {
            return bad("learning_rate, state_scale and grad_clip must be positive");
        }
        if !(0.0..1.0).contains(&self.rms_decay) {
            return bad("rms_decay must lie in [0, 1)");
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return bad("need 0 < batch_size <= replay_capacity");
        }
        if self.train_every == 0 || self.target_sync == 0 || self.steps_per_episode == 0 {
            return bad("step periods must be positive");
        }
        if !(self.eps_start >= self.eps_end && self.eps_end >= 0.0 && self.eps_start <= 1.0) {
            return bad("need 1 >= eps_start >= eps_end >= 0");
        }
        if !(self.reward_scale > 0.0) {
            return bad("reward_scale must be positive");
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.episodes * self.steps_per_episode
    }

    /// Linear decay from `eps_start` to `eps_end`, then constant.
    pub fn epsilon(&self, step: usize) -> f64 {
        let horizon = (self.eps_decay_fraction * self.total_steps() as f64).max(1.0);
        let frac = (step as f64 / horizon).min(1.0);
        self.eps_start + frac * (self.eps_end - self.eps_start)
    }
}

/// `−(½H'² − ½H² + V Σ wᵢ δᵢ')`.
pub fn reward(h: f64, h_next: f64, weighted_dest_aoi: f64, v: f64) -> f64 {
    -(0.5 * h_next * h_next - 0.5 * h * h + v * weighted_dest_aoi)
}

/// `r + γ Q_target(s', argmax_a Q_online(s', a))`.
pub fn double_q_target(r: f64, gamma: f64, online_next: &[f64], target_next: &[f64]) -> f64 {
    r + gamma * target_next[argmax(online_next)]
}

/// Maps `(s, H)` to the network input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub aoi_scale: f64,
    pub queue_scale: f64,
}

impl Normalizer {
    pub fn new(cfg: &SystemConfig, drl: &DrlConfig) -> Self {
        Normalizer {
            aoi_scale: drl.state_scale,
            queue_scale: cfg.budget() * drl.state_scale,
        }
    }

    pub fn features(&self, state: &SystemState, queue: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * state.sources.len() + 1);
        for s in &state.sources {
            out.push(f64::from(s.theta) / self.aoi_scale);
            out.push(f64::from(s.rel_relay) / self.aoi_scale);
            out.push(f64::from(s.rel_dest) / self.aoi_scale);
        }
        out.push(queue / self.queue_scale);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossStats {
    pub loss: f64,
    pub grad_norm: f64,
    pub max_abs_q: f64,
}

/// Online and target networks, optimizer and replay memory.
#[derive(Debug, Clone)]
pub struct D3qnAgent {
    pub online: QNetwork,
    pub target: QNetwork,
    pub optimizer: RmsProp,
    pub replay: ReplayBuffer,
    pub gamma: f64,
    pub batch_size: usize,
    pub grad_clip: f64,
    pub updates: usize,
    replay_rng: ChaCha8Rng,
}

impl D3qnAgent {
    pub fn new(inputs: usize, actions: usize, drl: &DrlConfig, seed: u64) -> Self {
        let mut init = substream(seed, Stream::Init);
        let online = QNetwork::new(inputs, &drl.hidden, actions, &mut init);
        D3qnAgent {
            target: online.clone(),
            optimizer: RmsProp::new(&online, drl.learning_rate, drl.rms_decay, 1e-8),
            online,
            replay: ReplayBuffer::new(drl.replay_capacity),
            gamma: drl.gamma,
            batch_size: drl.batch_size,
            grad_clip: drl.grad_clip,
            updates: 0,
            replay_rng: substream(seed, Stream::Replay),
        }
    }

    pub fn greedy_action(&self, features: &[f64]) -> usize {
        argmax(&self.online.forward(features))
    }

    pub fn sync_target(&mut self) {
        self.target.copy_from(&self.online);
    }

    /// One update on a uniformly drawn minibatch. The loss is
    /// `(1/B) Σ ½ (Q(s,a) − y)²` with double-Q targets `y`.
    pub fn train_step(&mut self) -> Result<LossStats, DrlError> {
        let indices = self.replay.sample_indices(&mut self.replay_rng, self.batch_size);
        let batch: Vec<Transition> = indices.iter().map(|&i| self.replay.get(i).clone()).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        self.train_on(&refs)
    }

    /// Gradient step on an explicit batch.
    pub fn train_on(&mut self, batch: &[&Transition]) -> Result<LossStats, DrlError> {
        let mut grad = self.online.zeros_like();
        let n = batch.len() as f64;
        let mut loss = 0.0;
        let mut max_abs_q = 0.0f64;
        for t in batch {
            let online_next = self.online.forward(&t.next_state);
            let target_next = self.target.forward(&t.next_state);
            let y = double_q_target(t.reward, self.gamma, &online_next, &target_next);
            let trace = self.online.trace(&t.state);
            let err = trace.q[t.action] - y;
            loss += 0.5 * err * err / n;
            max_abs_q = trace.q.iter().fold(max_abs_q, |m, q| m.max(q.abs()));
            let mut dq = vec![0.0; trace.q.len()];
            dq[t.action] = err / n;
            self.online.backward(&trace, &dq, &mut grad);
        }
        if !loss.is_finite() {
            return Err(DrlError::NonFiniteLoss {
                step: self.updates,
                loss,
                max_q: max_abs_q,
            });
        }
        let grad_norm = clip_gradient(&mut grad, self.grad_clip);
        self.optimizer.step(&mut self.online, &mut grad);
        self.updates += 1;
        Ok(LossStats {
            loss,
            grad_norm,
            max_abs_q,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Sum of unscaled rewards.
    pub episodic_reward: f64,
    pub mean_tx_per_slot: f64,
    /// Mean of `Σ wᵢ δᵢ` over the episode's post-transition states.
    pub ws_aaoi: f64,
    pub mean_queue: f64,
    pub epsilon: f64,
    pub mean_loss: f64,
}

pub const TRAINING_LOG_HEADER: &str = "episode,episodic_reward,mean_tx_per_slot,ws_aaoi";

pub fn write_training_log<W: std::io::Write>(mut out: W, log: &[EpisodeLog]) -> std::io::Result<()> {
    writeln!(out, "{TRAINING_LOG_HEADER}")?;
    for e in log {
        writeln!(out, "{},{},{},{}", e.episode, e.episodic_reward, e.mean_tx_per_slot, e.ws_aaoi)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub agent: D3qnAgent,
    pub log: Vec<EpisodeLog>,
}

/// ε-greedy training against the simulator with unbounded AoIs. Each episode
/// restarts from the fresh state with an empty virtual queue.
pub fn train(cfg: &SystemConfig, drl: &DrlConfig, seed: u64) -> Result<TrainingOutcome, DrlError> {
    drl.validate()?;
    let env_cfg = cfg
        .with_bound(model::AoiBound::Unbounded)
        .expect("relaxing the bound keeps the configuration valid");
    let num_sources = cfg.num_sources();
    let actions = cfg.num_actions();
    let norm = Normalizer::new(cfg, drl);
    let mut agent = D3qnAgent::new(3 * num_sources + 1, actions, drl, seed);
    let mut env = EnvStreams::new(seed);
    let mut explore = substream(seed, Stream::Exploration);
    let mut log = Vec::with_capacity(drl.episodes);
    let mut step = 0usize;

    for episode in 0..drl.episodes {
        let mut state = SystemState::fresh(num_sources);
        let mut queue = 0.0;
        let mut features = norm.features(&state, queue);
        let (mut total_reward, mut tx, mut aoi, mut queue_sum) = (0.0, 0.0, 0.0, 0.0);
        let (mut loss_sum, mut losses) = (0.0, 0usize);
        let epsilon_start = drl.epsilon(step);
        for _ in 0..drl.steps_per_episode {
            let a = if explore.gen::<f64>() < drl.epsilon(step) {
                explore.gen_range(0..actions)
            } else {
                agent.greedy_action(&features)
            };
            let action = Action::from_index(a, num_sources);
            let out = model::step(&state, action, &env_cfg, &mut env);
            let next_queue = queue_update(queue, action, cfg.budget());
            let weighted = model::aoi_cost(&out.next_state, cfg);
            let r = reward(queue, next_queue, weighted, drl.v);
            let next_features = norm.features(&out.next_state, next_queue);
            agent.replay.push(Transition {
                state: features,
                action: a,
                reward: r * drl.reward_scale,
                next_state: next_features.clone(),
            });
            total_reward += r;
            tx += f64::from(tx_cost(action));
            aoi += weighted;
            queue_sum += next_queue;

            step += 1;
            if agent.replay.len() >= drl.min_fill.max(drl.batch_size) && step % drl.train_every == 0 {
                let stats = agent.train_step()?;
                loss_sum += stats.loss;
                losses += 1;
            }
            if step % drl.target_sync == 0 {
                agent.sync_target();
            }
            state = out.next_state;
            queue = next_queue;
            features = next_features;
        }
        let n = drl.steps_per_episode as f64;
        log.push(EpisodeLog {
            episode,
            episodic_reward: total_reward,
            mean_tx_per_slot: tx / n,
            ws_aaoi: aoi / n,
            mean_queue: queue_sum / n,
            epsilon: epsilon_start,
            mean_loss: if losses > 0 { loss_sum / losses as f64 } else { f64::NAN },
        });
    }
    Ok(TrainingOutcome { agent, log })
}

/// A trained network acting greedily, with its own virtual queue.
#[derive(Debug, Clone)]
pub struct FrozenAgent {
    pub net: std::sync::Arc<QNetwork>,
    pub normalizer: Normalizer,
    pub queue: f64,
}

impl FrozenAgent {
    pub fn new(net: std::sync::Arc<QNetwork>, normalizer: Normalizer) -> Self {
        FrozenAgent {
            net,
            normalizer,
            queue: 0.0,
        }
    }

    pub fn decide(&self, state: &SystemState) -> Action {
        let q = self.net.forward(&self.normalizer.features(state, self.queue));
        Action::from_index(argmax(&q), state.sources.len())
    }

    pub fn observe(&mut self, action: Action, cfg: &SystemConfig) {
        self.queue = queue_update(self.queue, action, cfg.budget());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn reward_examples() {
        assert_eq!(reward(1.0, 2.0, 7.0, 10.0), -71.5);
        assert_eq!(reward(3.0, 3.0, 5.0, 0.0), 0.0);
        assert_eq!(reward(0.0, 0.0, 3.0, 1.0), -3.0);
    }

    #[test]
    fn double_target_examples() {
        assert!((double_q_target(1.0, 0.99, &[2.0, 5.0], &[0.0, 3.0]) - 3.97).abs() < 1e-12);
        assert_eq!(double_q_target(1.0, 0.0, &[2.0, 5.0], &[0.0, 3.0]), 1.0);
        let q = [4.0, 1.0];
        assert_eq!(double_q_target(0.5, 0.5, &q, &q), 0.5 + 0.5 * 4.0);
    }

    #[test]
    fn epsilon_schedule() {
        let d = DrlConfig {
            episodes: 10,
            steps_per_episode: 100,
            ..DrlConfig::default()
        };
        assert_eq!(d.epsilon(0), 1.0);
        assert!((d.epsilon(100) - 0.525).abs() < 1e-12);
        assert!((d.epsilon(200) - 0.05).abs() < 1e-12);
        assert!((d.epsilon(900) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn normalized_features() {
        let cfg = SystemConfig::unweighted(vec![0.5, 0.5], 0.5, 0.5, 1.2, model::AoiBound::Unbounded).unwrap();
        let n = Normalizer::new(&cfg, &DrlConfig::default());
        let f = n.features(&SystemState::from_triples(&[(50, 0, 25), (0, 5, 0)]), 60.0);
        assert_eq!(f, vec![1.0, 0.0, 0.5, 0.0, 0.1, 0.0, 1.0]);
    }

    #[test]
    fn config_validation() {
        assert!(DrlConfig::default().validate().is_ok());
        assert!(DrlConfig::desk().validate().is_ok());
        let bad = DrlConfig {
            gamma: 1.0,
            ..DrlConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = DrlConfig {
            eps_start: 0.01,
            ..DrlConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_transition_overfits() {
        let drl = DrlConfig {
            hidden: vec![8],
            learning_rate: 1e-2,
            ..DrlConfig::default()
        };
        let mut agent = D3qnAgent::new(3, 4, &drl, 1);
        agent.gamma = 0.0;
        let t = Transition {
            state: vec![0.1, 0.2, 0.3],
            action: 2,
            reward: 1.5,
            next_state: vec![0.0; 3],
        };
        let first = agent.train_on(&[&t]).unwrap().loss;
        let mut last = first;
        for _ in 0..500 {
            last = agent.train_on(&[&t]).unwrap().loss;
        }
        assert!(last < 1e-4 * first.max(1e-12) || last < 1e-8, "{first} -> {last}");
    }

    #[test]
    fn sync_leaves_online_unchanged_and_target_stale_between_syncs() {
        let drl = DrlConfig {
            hidden: vec![4],
            ..DrlConfig::default()
        };
        let mut agent = D3qnAgent::new(2, 3, &drl, 2);
        let t = Transition {
            state: vec![0.5, 0.1],
            action: 1,
            reward: -1.0,
            next_state: vec![0.2, 0.2],
        };
        let probe = [0.3, 0.7];
        let before = agent.target.forward(&probe);
        agent.train_on(&[&t]).unwrap();
        assert_eq!(agent.target.forward(&probe), before);
        let online = agent.online.clone();
        agent.sync_target();
        assert_eq!(agent.online, online);
        assert_eq!(agent.target, online);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for hidden in [vec![], vec![2], vec![3, 2], vec![4, 3, 2]] {
            let mut net = QNetwork::new(3, &hidden, 4, &mut rng);
            // Random biases keep every pre-activation away from the ReLU kink.
            let params: Vec<f64> = (0..net.num_parameters()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            net.set_flat_parameters(&params);
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // loss = Σ w_a Q_a
            let loss = |n: &QNetwork| n.forward(&x).iter().zip(&w).map(|(q, c)| q * c).sum::<f64>();
            let mut grad = net.zeros_like();
            net.backward(&net.trace(&x), &w, &mut grad);
            let analytic = grad.flat_parameters();
            let base = net.flat_parameters();
            let mut probe = net.clone();
            let h = 1e-6;
            for k in 0..base.len() {
                let mut p = base.clone();
                p[k] = base[k] + h;
                probe.set_flat_parameters(&p);
                let up = loss(&probe);
                p[k] = base[k] - h;
                probe.set_flat_parameters(&p);
                let down = loss(&probe);
                let numeric = (up - down) / (2.0 * h);
                let a = analytic[k];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                assert!(rel < 1e-4, "hidden {hidden:?} param {k}: analytic {a}, numeric {numeric}");
            }
        }
    }
}
