//! Solves the relaxed problem at a few multipliers and checks the threshold
//! structure of the relay decision and the monotonicity of the relative values.

use aoi_relay::cmdp::{
    solve_mdp, transmitter_switching_report, verify_switching, verify_value_monotonicity, Problem, SolverConfig,
};
use aoi_relay::kernel::TransitionKernel;
use aoi_relay::{AoiBound, SystemConfig};

fn main() -> Result<(), aoi_relay::Error> {
    let cfg = SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, 1.0, AoiBound::Finite(5))?;
    let kernel = TransitionKernel::build(&cfg)?;
    let problem = Problem::new(&kernel, &cfg);
    for lambda in [0.5, 1.25, 5.0] {
        let sol = solve_mdp(&problem, lambda, &SolverConfig::default())?;
        let switching = verify_switching(&sol.policy, kernel.indexer());
        let monotone = verify_value_monotonicity(&sol.values, kernel.indexer());
        let (irregular, checked) = transmitter_switching_report(&sol.policy, kernel.indexer());
        println!(
            "lambda {lambda}: {} sweeps, relay switching violations {}, value monotonicity violations {}, transmitter irregularities {irregular}/{checked}",
            sol.policy.sweeps,
            switching.len(),
            monotone.len()
        );
    }

    // Relay decision for source 1 along y, with source 2 fixed at (0, 1, 0).
    let sol = solve_mdp(&problem, 1.25, &SolverConfig::default())?;
    let idx = kernel.indexer();
    for x in 0..=2 {
        let row: Vec<String> = (0..=5 - x)
            .map(|y| {
                let s = aoi_relay::SystemState::from_triples(&[(0, x, y), (0, 1, 0)]);
                sol.policy.action(idx.encode(&s).unwrap()).beta.to_string()
            })
            .collect();
        println!("theta=0 x={x}: beta along y = {}", row.join(" "));
    }
    Ok(())
}
