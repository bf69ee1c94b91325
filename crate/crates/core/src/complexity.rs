//! Wall-clock cost of one relative value iteration sweep as the state space
//! grows.

use std::io::Write;
use std::time::Instant;

use crate::cmdp::{rvia_sweep, Problem, RviaWorkspace};
use crate::error::Error;
use crate::kernel::TransitionKernel;
use crate::model::{AoiBound, SystemConfig};
use crate::stats::slope;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityPoint {
    pub num_sources: usize,
    pub bound: u32,
    pub states: usize,
    pub actions: usize,
    pub entries: usize,
    pub max_branches: usize,
    pub build_seconds: f64,
    /// Median over the timed sweeps.
    pub sweep_seconds: f64,
}

impl ComplexityPoint {
    /// `|S|·|A|`.
    pub fn work(&self) -> f64 {
        (self.states * self.actions) as f64
    }
}

/// Builds the kernel for every bound in `bounds` (with `base`'s other
/// parameters) and times `sweeps` RVIA sweeps after `warmup` untimed ones.
pub fn measure(
    base: &SystemConfig,
    bounds: &[u32],
    lambda: f64,
    structured: bool,
    warmup: usize,
    sweeps: usize,
) -> Result<Vec<ComplexityPoint>, Error> {
    assert!(sweeps > 0);
    let mut out = Vec::with_capacity(bounds.len());
    for &n in bounds {
        let cfg = base.with_bound(AoiBound::Finite(n))?;
        let start = Instant::now();
        let kernel = TransitionKernel::build(&cfg)?;
        let build_seconds = start.elapsed().as_secs_f64();
        let problem = Problem::new(&kernel, &cfg);
        let mut ws = RviaWorkspace::new(kernel.num_states());
        for _ in 0..warmup {
            rvia_sweep(&mut ws, &problem, lambda, structured);
        }
        let mut times: Vec<f64> = (0..sweeps)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(rvia_sweep(&mut ws, &problem, lambda, structured));
                t.elapsed().as_secs_f64()
            })
            .collect();
        times.sort_by(f64::total_cmp);
        out.push(ComplexityPoint {
            num_sources: cfg.num_sources(),
            bound: n,
            states: kernel.num_states(),
            actions: kernel.num_actions(),
            entries: kernel.num_entries(),
            max_branches: kernel.max_branches(),
            build_seconds,
            sweep_seconds: times[times.len() / 2],
        });
    }
    Ok(out)
}

/// Log-log least-squares slope of sweep time against `|S|·|A|`.
pub fn fitted_slope(points: &[ComplexityPoint]) -> f64 {
    let x: Vec<f64> = points.iter().map(|p| p.work().ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.sweep_seconds.ln()).collect();
    slope(&x, &y)
}

pub const COMPLEXITY_HEADER: &str = "num_sources,bound,states,actions,entries,max_branches,build_seconds,sweep_seconds";

pub fn write_csv<W: Write>(mut out: W, points: &[ComplexityPoint]) -> std::io::Result<()> {
    writeln!(out, "{COMPLEXITY_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.num_sources, p.bound, p.states, p.actions, p.entries, p.max_branches, p.build_seconds, p.sweep_seconds
        )?;
    }
    Ok(())
}
