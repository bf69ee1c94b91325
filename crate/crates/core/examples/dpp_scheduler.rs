//! Runs the drift-plus-penalty scheduler for several tradeoff values and shows
//! the budget being met while the virtual queue grows with V.

use aoi_relay::dpp::DppScheduler;
use aoi_relay::sim::{simulate, PolicyHandle, SimOptions};
use aoi_relay::{AoiBound, SystemConfig};

fn main() -> Result<(), aoi_relay::Error> {
    let cfg = SystemConfig::unweighted(vec![0.5, 0.7], 0.3, 0.4, 1.2, AoiBound::Unbounded)?;
    println!("V       WS-AAoI  tx/slot  mean H");
    for v in [1.0, 10.0, 100.0, 1000.0] {
        let run = simulate(&mut PolicyHandle::Dpp(DppScheduler::new(v)), &cfg, &SimOptions::new(100_000, 1));
        println!(
            "{v:<7} {:>7.3} {:>8.4} {:>7.1}",
            run.ws_aaoi,
            run.mean_tx,
            run.mean_queue.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
