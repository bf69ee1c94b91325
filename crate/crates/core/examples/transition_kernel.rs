//! Builds the bounded transition kernel for two sources and checks it three
//! ways: row sums, a brute-force enumeration of the randomness, and
//! Monte-Carlo frequencies.

use aoi_relay::kernel::{compare_with_brute_force, monte_carlo_validate, TransitionKernel};
use aoi_relay::{Action, AoiBound, SystemConfig, SystemState};

fn main() -> Result<(), aoi_relay::Error> {
    let cfg = SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, 1.0, AoiBound::Finite(4))?;
    let kernel = TransitionKernel::build(&cfg)?;
    println!(
        "|S| = {}, |A| = {}, stored transitions = {}, widest row = {}",
        kernel.num_states(),
        kernel.num_actions(),
        kernel.num_entries(),
        kernel.max_branches()
    );
    println!("max |row sum - 1| = {:.2e}", kernel.max_row_error());
    let (diff, mismatches) = compare_with_brute_force(&kernel, &cfg);
    println!("brute force: max diff {diff:.2e}, support mismatches {mismatches}");

    let s = SystemState::from_triples(&[(1, 2, 0), (0, 1, 1)]);
    let idx = kernel.indexer().encode(&s).unwrap();
    let a = Action::new(1, 2);
    let (next, probs) = kernel.row(idx, a.index(2));
    println!("successors of {s} under {a}:");
    for (j, p) in next.iter().zip(probs) {
        println!("  {}  {p:.4}", kernel.indexer().decode(*j as usize));
    }

    let mc = monte_carlo_validate(&kernel, &cfg, 5_000, Some(50), 7);
    println!("Monte-Carlo: {} flagged branches", mc.violations.len());
    Ok(())
}
