//! Sweeps the transmission budget for the constrained-MDP table, the
//! drift-plus-penalty scheduler and the greedy baseline, and writes the CSVs
//! to the directory given as the first argument (default `out`).

use aoi_relay::cmdp::SolverConfig;
use aoi_relay::config_file::{ExperimentSection, PolicyKind, SweepKind};
use aoi_relay::drl::DrlConfig;
use aoi_relay::experiment::{run_experiment, write_outputs, ExperimentSpec};
use aoi_relay::{AoiBound, SystemConfig};

fn main() -> Result<(), aoi_relay::Error> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "out".into());
    let policies = vec![PolicyKind::Cmdp, PolicyKind::Dpp, PolicyKind::Greedy];
    let spec = ExperimentSpec {
        base: SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, 1.0, AoiBound::Unbounded)?,
        solver: SolverConfig::default(),
        dpp_v: 100.0,
        drl: DrlConfig::desk(),
        seed: 1,
        section: ExperimentSection {
            name: "budget_sweep".into(),
            sweep: SweepKind::Budget,
            grid: vec![0.6, 1.0, 1.4, 1.8],
            policies: policies.clone(),
            horizon: 30_000,
            replications: 3,
            table_bound: 6,
            series_every: 0,
        },
    };
    let result = run_experiment(&spec);
    for p in policies {
        let curve: Vec<String> = result.curve(p).iter().map(|c| format!("{:.3}", c.ws_aaoi.mean)).collect();
        println!("{:<7} {}", p.name(), curve.join("  "));
    }
    std::fs::create_dir_all(&dir)?;
    for path in write_outputs(&result, dir.as_ref(), &spec.section.name)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
