//! Solves the constrained problem by bisection on the Lagrange multiplier and
//! prints both endpoints of the final bracket.

use aoi_relay::cmdp::{bisect, Problem, SolverConfig};
use aoi_relay::kernel::TransitionKernel;
use aoi_relay::{AoiBound, SystemConfig};

fn main() -> Result<(), aoi_relay::Error> {
    let cfg = SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, 1.0, AoiBound::Finite(6))?;
    let kernel = TransitionKernel::build(&cfg)?;
    let out = bisect(&Problem::new(&kernel, &cfg), &SolverConfig::default())?;
    println!("lambda        WS-AAoI   tx/slot");
    for t in out.sorted_trace() {
        println!("{:<12.5} {:>9.4} {:>9.4}", t.lambda, t.ws_aaoi, t.mean_tx);
    }
    for (name, ep) in [("feasible", &out.plus), ("infeasible", &out.minus)] {
        println!(
            "{name:>10}: lambda {:.4}, WS-AAoI {:.4}, tx/slot {:.4}",
            ep.lambda, ep.metrics.ws_aaoi, ep.metrics.mean_tx
        );
    }
    if out.slack {
        println!("the budget is slack: the unconstrained optimum already satisfies it");
    }
    Ok(())
}
