//! Stable text encodings of run artifacts.
//!
//! The CSV column order and JSON field names are part of the public
//! contract: downstream plotting and analysis read these files, so the
//! layouts are golden-file tested and must not drift.

use std::fmt::Write as _;

use crate::engine::{BatchSummary, RunSummary, RunTrace};

/// Per-step trace as CSV with columns `k,node,x,xhat,fired,malicious`.
pub fn trace_to_csv(trace: &RunTrace) -> String {
    let mut out = String::from("k,node,x,xhat,fired,malicious\n");
    for (k, step) in trace.steps.iter().enumerate() {
        for node in 0..trace.node_count() {
            let _ = writeln!(
                out,
                "{k},{node},{},{},{},{}",
                step.x[node], step.xhat[node], step.fired[node], trace.malicious[node]
            );
        }
    }
    out
}

/// Run summary as pretty-printed JSON with a trailing newline.
pub fn summary_to_json(summary: &RunSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

/// Batch summary as pretty-printed JSON with a trailing newline.
pub fn batch_summary_to_json(summary: &BatchSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("batch summary serializes");
    s.push('\n');
    s
}
