//! Scheduling policies for minimizing the weighted-sum average Age of
//! Information (AoI) in a multi-source, two-hop relaying status-update system
//! operating under an average transmission budget.
//!
//! The crate is organized around the three policy families and the machinery
//! they share:
//!
//! - [`model`]: system parameters, per-source `(θ, x, y)` state, the exact
//!   one-slot dynamics and the cost functions.
//! - [`kernel`]: enumeration of the bounded state space, the sparse transition
//!   kernel and its structural diagnostics.
//! - [`cmdp`]: Lagrangian relaxation, structure-aware relative value iteration,
//!   stationary policy evaluation and the bisection over the multiplier.
//! - [`dpp`]: the drift-plus-penalty scheduler and its virtual queue.
//! - [`baseline`]: the budget-gated greedy baseline and a uniform random policy.
//! - [`drl`]: a dueling double deep Q-network trained on a Lyapunov-shaped
//!   reward, written against plain `Vec<f64>` buffers.
//! - [`sim`], [`experiment`], [`complexity`]: the simulation engine, sweep
//!   recipes that emit CSV artifacts, and timing measurements.
//!
//! See the runnable programs under `examples/` for one walkthrough per
//! capability.

pub mod baseline;
pub mod cli;
pub mod cmdp;
pub mod complexity;
pub mod config_file;
pub mod dpp;
pub mod drl;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod model;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use model::{Action, AoiBound, SourceState, SystemConfig, SystemState};
