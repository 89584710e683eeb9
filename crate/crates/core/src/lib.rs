//! Agent-based evaluation of vehicular reputation schemes against attackers
//! that adapt their deception intensity, plus a deterministic replicator
//! integrator for the analytical side of the same game.
//!
//! The simulation is split by concern: [`road`] (grid, motion, sensing),
//! [`trust`] (the reputation server), [`evolution`] (strategies, utilities,
//! replacement), [`world`] (the tick loop tying them together), [`metrics`]
//! (observables and CSV export) and [`experiment`] (runs and sweeps).

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod metrics;
pub mod replicator;
pub mod rng;
pub mod road;
pub mod trust;
pub mod world;

pub use config::{parse_config, SimConfig, SweepSpec};
pub use error::{Error, Result};
pub use evolution::{Mode, Strategy};
pub use experiment::{run_replicate, run_simulate, run_sweep, simulate, RunOutcome};
pub use metrics::{ConvergenceReport, MetricsRow};
pub use world::World;
