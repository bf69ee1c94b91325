//! Trains the dueling double Q-network for a few episodes and evaluates the
//! greedy policy. Pass `--full` for the full desk-scale schedule.

use std::sync::Arc;

use aoi_relay::drl::{train, DrlConfig, FrozenAgent, Normalizer};
use aoi_relay::sim::{replicate, PolicyHandle};
use aoi_relay::{AoiBound, SystemConfig};

fn main() -> Result<(), aoi_relay::Error> {
    let cfg = SystemConfig::unweighted(vec![0.6, 0.8], 0.4, 0.5, 1.0, AoiBound::Unbounded)?;
    let mut drl = DrlConfig::desk();
    if !std::env::args().any(|a| a == "--full") {
        drl.episodes = 20;
    }
    let outcome = train(&cfg, &drl, 1)?;
    for e in outcome.log.iter().step_by((drl.episodes / 10).max(1)) {
        println!(
            "episode {:>4}: reward {:>12.1}  tx/slot {:.3}  WS-AAoI {:.2}  epsilon {:.2}",
            e.episode, e.episodic_reward, e.mean_tx_per_slot, e.ws_aaoi, e.epsilon
        );
    }
    let agent = FrozenAgent::new(Arc::new(outcome.agent.online), Normalizer::new(&cfg, &drl));
    let trained = replicate(|| PolicyHandle::Drl(agent.clone()), &cfg, 50_000, 3, 100);
    let random = replicate(|| PolicyHandle::Random, &cfg, 50_000, 3, 100);
    if drl.episodes < DrlConfig::desk().episodes {
        println!("short schedule; rerun with --full for a trained policy");
    }
    println!(
        "greedy evaluation: WS-AAoI {:.3}, tx/slot {:.4}; random policy WS-AAoI {:.3}",
        trained.ws_aaoi.mean, trained.mean_tx.mean, random.ws_aaoi.mean
    );
    Ok(())
}
