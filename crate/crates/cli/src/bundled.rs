//! Scenarios and graphs shipped inside the binary.
//!
//! Every bundled scenario is embedded at compile time so `emsr simulate
//! --scenario seven-node-p1` works from any directory; the same files live
//! under `crates/cli/assets/` for reading and copying.

use emsr_core::graph::{DirectedGraph, GraphError};

macro_rules! scenario_asset {
    ($name:literal) => {
        ($name, include_str!(concat!("../assets/scenarios/", $name, ".json")))
    };
}

/// Name/content pairs of all bundled scenarios.
pub const BUNDLED_SCENARIOS: &[(&str, &str)] = &[
    scenario_asset!("seven-node-p1"),
    scenario_asset!("seven-node-p2"),
    scenario_asset!("seven-node-p1-exact"),
    scenario_asset!("seven-node-p2-exact"),
    scenario_asset!("seven-node-p1-time"),
    scenario_asset!("seven-node-p2-time"),
    scenario_asset!("worst-case-n4"),
    scenario_asset!("k10-batch"),
    scenario_asset!("k10-batch-p2"),
    scenario_asset!("k50-batch"),
    scenario_asset!("k50-batch-p2"),
    scenario_asset!("k100-batch"),
    scenario_asset!("k100-batch-p2"),
    scenario_asset!("k10-batch-time"),
    scenario_asset!("k10-batch-p2-time"),
    scenario_asset!("k50-batch-time"),
    scenario_asset!("k50-batch-p2-time"),
    scenario_asset!("k100-batch-time"),
    scenario_asset!("k100-batch-p2-time"),
];

/// Bundled graphs in edge-list format, usable wherever a graph path is
/// expected.
pub const BUNDLED_GRAPHS: &[(&str, &str)] =
    &[("seven-node", include_str!("../assets/graphs/seven_node.txt"))];

pub fn bundled_scenario(name: &str) -> Option<&'static str> {
    BUNDLED_SCENARIOS.iter().find(|(n, _)| *n == name).map(|&(_, text)| text)
}

pub fn bundled_graph(name: &str) -> Option<&'static str> {
    BUNDLED_GRAPHS.iter().find(|(n, _)| *n == name).map(|&(_, text)| text)
}

/// Resolves a graph argument: a bundled name, `complete:<n>`, `chain:<n>`,
/// or a path to an edge-list file. Returns `None` for missing files so the
/// caller can report the path.
pub fn resolve_graph_arg(arg: &str) -> Result<DirectedGraph, GraphArgError> {
    if let Some(text) = bundled_graph(arg) {
        return Ok(DirectedGraph::parse_edge_list(text)?);
    }
    if let Some(n) = arg.strip_prefix("complete:") {
        let n = n.parse().map_err(|_| GraphArgError::BadCount(arg.to_string()))?;
        return Ok(DirectedGraph::complete(n)?);
    }
    if let Some(n) = arg.strip_prefix("chain:") {
        let n = n.parse().map_err(|_| GraphArgError::BadCount(arg.to_string()))?;
        return Ok(DirectedGraph::worst_case_chain(n)?.0);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|source| GraphArgError::Io { path: arg.to_string(), source })?;
    Ok(DirectedGraph::parse_edge_list(&text)?)
}

#[derive(Debug, thiserror::Error)]
pub enum GraphArgError {
    #[error("invalid node count in `{0}`")]
    BadCount(String),
    #[error("cannot read graph file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Graph(#[from] GraphError),
}
