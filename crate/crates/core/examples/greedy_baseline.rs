//! Compares the budget-gated greedy baseline with the drift-plus-penalty
//! scheduler and a uniform random policy at a tight budget.

use aoi_relay::baseline::GreedyBaseline;
use aoi_relay::dpp::DppScheduler;
use aoi_relay::sim::{replicate, PolicyHandle};
use aoi_relay::{AoiBound, SystemConfig};

fn main() -> Result<(), aoi_relay::Error> {
    for budget in [0.4, 1.0] {
        let cfg = SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, budget, AoiBound::Unbounded)?;
        let greedy = replicate(|| PolicyHandle::Greedy(GreedyBaseline::new()), &cfg, 50_000, 3, 1);
        let dpp = replicate(|| PolicyHandle::Dpp(DppScheduler::new(100.0)), &cfg, 50_000, 3, 1);
        let random = replicate(|| PolicyHandle::Random, &cfg, 50_000, 3, 1);
        println!("budget {budget}");
        for (name, r) in [("greedy", &greedy), ("dpp", &dpp), ("random", &random)] {
            println!(
                "  {name:<7} WS-AAoI {:>7.3} [{:.3}, {:.3}]  tx/slot {:.4}",
                r.ws_aaoi.mean, r.ws_aaoi.ci_low, r.ws_aaoi.ci_high, r.mean_tx.mean
            );
        }
    }
    Ok(())
}
