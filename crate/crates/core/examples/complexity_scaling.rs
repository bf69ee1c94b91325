//! Times relative value iteration sweeps as the AoI bound grows and fits the
//! log-log slope against `|S|·|A|`.

use aoi_relay::complexity::{fitted_slope, measure};
use aoi_relay::{AoiBound, SystemConfig};

fn main() -> Result<(), aoi_relay::Error> {
    let base = SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, 1.0, AoiBound::Unbounded)?;
    let points = measure(&base, &[3, 4, 5, 6, 7], 1.0, true, 2, 9)?;
    println!("N   |S|      |S||A|     sweep (s)");
    for p in &points {
        println!("{:<3} {:<8} {:<10} {:.3e}", p.bound, p.states, p.work(), p.sweep_seconds);
    }
    println!("fitted slope {:.3}", fitted_slope(&points));
    Ok(())
}
