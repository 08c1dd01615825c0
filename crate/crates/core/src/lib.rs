//! Deterministic discrete-event simulator of a container cluster running
//! deep-learning training jobs under two placement policies: a progress-aware
//! speculative scheduler and a fixed-placement baseline.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: identifiers, per-container and per-worker state, cluster state.
//! - [`workload`]: synthetic loss curves and submission schedules.
//! - [`rng`]: named, independent random streams derived from one root seed.
//! - [`engine`]: event queue, processor-sharing CPU model, migration mechanics and the event loop.
//! - [`monitor`]: per-worker growth tracking and the progressing/watching/converged state machine.
//! - [`scheduler`]: weighted worker scoring, target selection and initial placement.
//! - [`rebalancer`]: balance-factor driven redistribution of converged containers.
//! - [`harness`]: scenario configs, run/compare/sweep orchestration and CSV reports.

pub mod engine;
pub mod error;
pub mod harness;
pub mod model;
pub mod monitor;
pub mod rebalancer;
pub mod rng;
pub mod scheduler;
pub mod workload;

pub use error::{Error, Result};
