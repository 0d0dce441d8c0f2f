//! Scenario file schema and loader.
//!
//! Scenario files are JSON documents validated strictly: unknown keys are
//! rejected and every engine-level invariant is re-checked on load. The
//! schema is documented in the repository README; `xhat0` defaults to `x0`
//! and `comm_mode` defaults to `"event"`.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use emsr_core::adversary::{
    AdversaryScript, AdversarySet, BroadcastSchedule, ScriptedAdversary,
};
use emsr_core::engine::{CommMode, Scenario, ScenarioError};
use emsr_core::graph::{DirectedGraph, GraphError};
use emsr_core::msr::{ProtocolKind, TriggerParams, WeightPolicy, WeightTable};

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

fn invalid(msg: impl Into<String>) -> ScenarioFileError {
    ScenarioFileError::Invalid(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    graph: GraphField,
    protocol: String,
    f: usize,
    gamma: f64,
    weight_policy: WeightPolicyField,
    #[serde(default)]
    trigger: Option<TriggerField>,
    #[serde(default)]
    comm_mode: Option<String>,
    #[serde(default)]
    adversaries: Vec<AdversaryField>,
    x0: Vec<f64>,
    #[serde(default)]
    xhat0: Option<Vec<f64>>,
    horizon: usize,
    seed: u64,
    #[serde(default)]
    stop_on_error_below: Option<f64>,
}

/// Exactly one of: inline (`n` + `edges`), `file`, `complete`, or `chain`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphField {
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    edges: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    file: Option<String>,
    #[serde(default)]
    complete: Option<usize>,
    #[serde(default)]
    chain: Option<usize>,
}

impl GraphField {
    fn resolve(&self, base_dir: Option<&Path>) -> Result<DirectedGraph, ScenarioFileError> {
        let inline = self.n.is_some() || self.edges.is_some();
        let picked =
            usize::from(inline) + [self.file.is_some(), self.complete.is_some(), self.chain.is_some()]
                .iter()
                .filter(|&&b| b)
                .count();
        if picked != 1 {
            return Err(invalid(
                "graph must be exactly one of: inline {n, edges}, {file}, {complete}, {chain}",
            ));
        }
        if inline {
            let (Some(n), Some(edges)) = (self.n, self.edges.as_ref()) else {
                return Err(invalid("inline graph needs both `n` and `edges`"));
            };
            return Ok(DirectedGraph::from_edges(n, edges.iter().copied())?);
        }
        if let Some(path) = &self.file {
            let full = match base_dir {
                Some(dir) => dir.join(path),
                None => path.into(),
            };
            let text = std::fs::read_to_string(&full).map_err(|source| ScenarioFileError::Io {
                path: full.display().to_string(),
                source,
            })?;
            return Ok(DirectedGraph::parse_edge_list(&text)?);
        }
        if let Some(n) = self.complete {
            return Ok(DirectedGraph::complete(n)?);
        }
        let n = self.chain.expect("one field is set");
        Ok(DirectedGraph::worst_case_chain(n)?.0)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TriggerField {
    c0: f64,
    c1: f64,
    alpha: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightPolicyField {
    kind: String,
    #[serde(default)]
    weights: Option<Vec<WeightEntryField>>,
    #[serde(default)]
    relaxed_self: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightEntryField {
    from: usize,
    to: usize,
    w: f64,
}

impl WeightPolicyField {
    fn resolve(&self, gamma: f64) -> Result<WeightPolicy, ScenarioFileError> {
        match self.kind.as_str() {
            "equal-with-self" | "floor-gamma" => {
                if self.weights.is_some() || self.relaxed_self.is_some() {
                    return Err(invalid(format!(
                        "weight policy `{}` takes no `weights` or `relaxed_self`",
                        self.kind
                    )));
                }
                Ok(if self.kind == "equal-with-self" {
                    WeightPolicy::equal_with_self(gamma)
                } else {
                    WeightPolicy::floor_gamma(gamma)
                })
            }
            "explicit-table" => {
                let Some(entries) = &self.weights else {
                    return Err(invalid("weight policy `explicit-table` needs `weights`"));
                };
                let table = WeightTable::from_triples(
                    entries.iter().map(|e| (e.from, e.to, e.w)),
                    self.relaxed_self.unwrap_or(false),
                );
                Ok(WeightPolicy::explicit(table, gamma))
            }
            other => Err(invalid(format!(
                "unknown weight policy kind `{other}` (expected equal-with-self, floor-gamma, \
                 or explicit-table)"
            ))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdversaryField {
    node: usize,
    script: ScriptField,
    #[serde(default)]
    schedule: Option<ScheduleField>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptField {
    kind: String,
    #[serde(default)]
    level: Option<f64>,
    #[serde(default)]
    low: Option<f64>,
    #[serde(default)]
    high: Option<f64>,
    #[serde(default)]
    period: Option<u64>,
    #[serde(default)]
    amplitude: Option<f64>,
    #[serde(default)]
    frequency: Option<f64>,
    #[serde(default)]
    offset: Option<f64>,
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default)]
    step_size: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    start: Option<f64>,
}

impl ScriptField {
    fn resolve(&self) -> Result<AdversaryScript, ScenarioFileError> {
        let mut free: Vec<&str> = Vec::new();
        macro_rules! claim {
            ($field:ident) => {{
                self.$field
                    .clone()
                    .ok_or_else(|| invalid(format!(
                        "script `{}` needs field `{}`",
                        self.kind,
                        stringify!($field)
                    )))
            }};
        }
        macro_rules! forbid {
            ($($field:ident),*) => {
                $(if self.$field.is_some() { free.push(stringify!($field)); })*
            };
        }
        let script = match self.kind.as_str() {
            "constant" => {
                forbid!(low, high, period, amplitude, frequency, offset, values, step_size, seed, start);
                AdversaryScript::Constant { level: claim!(level)? }
            }
            "square-wave" => {
                forbid!(level, amplitude, frequency, offset, values, step_size, seed, start);
                AdversaryScript::SquareWave {
                    low: claim!(low)?,
                    high: claim!(high)?,
                    period: claim!(period)?,
                }
            }
            "sinusoid" => {
                forbid!(level, low, high, period, values, step_size, seed, start);
                AdversaryScript::Sinusoid {
                    amplitude: claim!(amplitude)?,
                    frequency: claim!(frequency)?,
                    offset: claim!(offset)?,
                }
            }
            "replay" => {
                forbid!(level, low, high, period, amplitude, frequency, offset, step_size, seed, start);
                AdversaryScript::Replay { values: claim!(values)? }
            }
            "seeded-random-walk" => {
                forbid!(level, low, high, period, amplitude, frequency, offset, values);
                AdversaryScript::SeededRandomWalk {
                    start: self.start.unwrap_or(0.0),
                    step_size: claim!(step_size)?,
                    seed: claim!(seed)?,
                }
            }
            other => {
                return Err(invalid(format!(
                    "unknown script kind `{other}` (expected constant, square-wave, sinusoid, \
                     replay, or seeded-random-walk)"
                )))
            }
        };
        if !free.is_empty() {
            return Err(invalid(format!(
                "script `{}` does not take field(s): {}",
                self.kind,
                free.join(", ")
            )));
        }
        Ok(script)
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScheduleField {
    Name(String),
    Steps(Vec<u64>),
}

impl ScheduleField {
    fn resolve(&self) -> Result<BroadcastSchedule, ScenarioFileError> {
        match self {
            ScheduleField::Name(name) if name == "every-step" => Ok(BroadcastSchedule::EveryStep),
            ScheduleField::Name(name) => Err(invalid(format!(
                "unknown schedule `{name}` (expected \"every-step\" or a step array)"
            ))),
            ScheduleField::Steps(steps) => Ok(BroadcastSchedule::at_steps(steps.iter().copied())),
        }
    }
}

fn parse_comm_mode(text: &str) -> Result<CommMode, ScenarioFileError> {
    if text == "event" {
        return Ok(CommMode::EventTriggered);
    }
    if let Some(period) = text.strip_prefix("time:") {
        let period: u64 = period
            .parse()
            .map_err(|_| invalid(format!("invalid time-triggered period `{period}`")))?;
        return Ok(CommMode::TimeTriggered { period });
    }
    Err(invalid(format!(
        "unknown comm_mode `{text}` (expected \"event\" or \"time:<period>\")"
    )))
}

/// Parses and validates a scenario document. `base_dir` anchors relative
/// graph file references (usually the scenario file's directory).
pub fn parse_scenario(text: &str, base_dir: Option<&Path>) -> Result<Scenario, ScenarioFileError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioFileError::Json {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;

    let graph = file.graph.resolve(base_dir)?;
    let protocol: ProtocolKind = file
        .protocol
        .parse()
        .map_err(|e| invalid(format!("{e}")))?;
    let weight_policy = file.weight_policy.resolve(file.gamma)?;
    let trigger = match (&file.trigger, file.comm_mode.as_deref()) {
        (Some(t), _) => TriggerParams { c0: t.c0, c1: t.c1, alpha: t.alpha },
        // Time-triggered runs never evaluate the trigger, so it may be omitted.
        (None, Some(mode)) if mode.starts_with("time:") => {
            TriggerParams { c0: 0.0, c1: 0.0, alpha: 1.0 }
        }
        (None, _) => return Err(invalid("event-triggered scenarios need a `trigger` section")),
    };
    let comm_mode = match file.comm_mode.as_deref() {
        None => CommMode::EventTriggered,
        Some(text) => parse_comm_mode(text)?,
    };
    let adversaries = AdversarySet::from_entries(
        file.adversaries
            .iter()
            .map(|a| {
                let script = a.script.resolve()?;
                let schedule = match &a.schedule {
                    None => BroadcastSchedule::EveryStep,
                    Some(s) => s.resolve()?,
                };
                Ok((a.node, ScriptedAdversary { script, schedule }))
            })
            .collect::<Result<Vec<_>, ScenarioFileError>>()?,
    )
    .map_err(ScenarioError::from)?;

    let xhat0 = file.xhat0.unwrap_or_else(|| file.x0.clone());
    let scenario = Scenario {
        graph,
        protocol,
        f_total: file.f,
        weight_policy,
        trigger,
        comm_mode,
        adversaries,
        x0: file.x0,
        xhat0,
        horizon: file.horizon,
        seed: file.seed,
        stop_on_error_below: file.stop_on_error_below,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Loads a scenario from disk, resolving graph file references relative to
/// the scenario's own directory.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text, path.parent())
}
