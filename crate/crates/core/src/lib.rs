//! Resilient multi-agent consensus with event-based communication.
//!
//! Discrete-time agents on a directed graph run MSR-style updates: each
//! regular agent discards the `F` largest and `F` smallest neighbor values
//! relative to its own reference, averages the rest, and broadcasts its new
//! state only when an event-triggering threshold is exceeded. Up to `F`
//! malicious nodes may broadcast arbitrary scripted values. The crate
//! provides:
//!
//! - [`graph`]: directed graphs, (r,s)-robustness checking, topology builders
//! - [`msr`]: filtering, weight assignment, the update rules, the trigger
//! - [`adversary`]: deterministic scripts for malicious nodes
//! - [`engine`]: the round-based simulator and Monte Carlo batch runner
//! - [`bounds`]: closed-form links between the trigger offset `c0` and the
//!   achievable consensus error level `c`
//!
//! Batch runs and robustness enumeration are data-parallel via rayon when
//! the `parallel` feature (default) is enabled; disabling it falls back to
//! sequential execution with identical results.

pub mod adversary;
pub mod bounds;
pub mod engine;
pub mod export;
pub mod graph;
pub mod msr;

pub use engine::{run, run_batch, CommMode, RunSummary, RunTrace, Scenario};
pub use graph::DirectedGraph;
pub use msr::{ProtocolKind, TriggerParams, WeightPolicy};
