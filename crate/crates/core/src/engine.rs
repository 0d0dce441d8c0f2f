//! Synchronous round-based simulator.
//!
//! Every round reads an immutable snapshot of all broadcast values, steps
//! each regular agent through filter / weigh / update / trigger / commit,
//! overwrites malicious agents from their scripts, and records the new
//! state. A single run is deterministic; Monte Carlo batches fan runs out
//! in parallel (feature `parallel`) with order-independent aggregation.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::adversary::{AdversaryError, AdversarySet};
use crate::graph::DirectedGraph;
use crate::msr::{
    assign_weights, commit_broadcast, filter_reference, msr_filter, step, trigger_eval,
    AgentState, MsrError, ProtocolKind, TriggerParams, WeightPolicy, WeightPolicyKind,
};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("x0 has {got} entries for {expected} nodes")]
    X0Length { expected: usize, got: usize },
    #[error("xhat0 has {got} entries for {expected} nodes")]
    Xhat0Length { expected: usize, got: usize },
    #[error("initial state of node {0} is not finite")]
    NonFiniteState(usize),
    #[error("horizon must be >= 1")]
    HorizonZero,
    #[error("time-triggered period must be >= 1")]
    ZeroPeriod,
    #[error("stop threshold must be finite and >= 0, got {0}")]
    BadStopThreshold(f64),
    #[error("scenario has no regular nodes")]
    NoRegularNodes,
    #[error("weight table lists edge ({from}, {to}) that is not in the graph")]
    TableUnknownEdge { from: usize, to: usize },
    #[error("weight table is missing graph edge ({from}, {to})")]
    TableMissingEdge { from: usize, to: usize },
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Msr(#[from] MsrError),
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("round {step}, node {node}: {source}")]
    Step { step: u64, node: usize, source: MsrError },
    #[error("batch run {run}: {source}")]
    BatchRun { run: usize, source: Box<EngineError> },
    #[error("batch template needs stop_on_error_below")]
    BatchNeedsStopThreshold,
    #[error("batch needs runs >= 1")]
    BatchNeedsRuns,
    #[error("batch initial range [{lo}, {hi}] is not a finite nonempty interval")]
    BadInitRange { lo: f64, hi: f64 },
}

/// How broadcasts are released: on trigger events, or periodically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommMode {
    EventTriggered,
    TimeTriggered { period: u64 },
}

/// A complete experiment description. Runs are pure functions of this value.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: DirectedGraph,
    pub protocol: ProtocolKind,
    /// Bound on the number of malicious nodes; also the per-side trim depth
    /// of the filter.
    pub f_total: usize,
    pub weight_policy: WeightPolicy,
    pub trigger: TriggerParams,
    pub comm_mode: CommMode,
    pub adversaries: AdversarySet,
    pub x0: Vec<f64>,
    pub xhat0: Vec<f64>,
    pub horizon: usize,
    pub seed: u64,
    /// Stop as soon as the regular-node consensus error drops to this value.
    pub stop_on_error_below: Option<f64>,
}

impl Scenario {
    /// Weight floor the policy is evaluated against; also the value the
    /// closed-form trigger bounds are quoted at.
    pub fn gamma(&self) -> f64 {
        self.weight_policy.gamma
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn regular_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| !self.adversaries.contains(i)).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.node_count();
        if self.x0.len() != n {
            return Err(ScenarioError::X0Length { expected: n, got: self.x0.len() });
        }
        if self.xhat0.len() != n {
            return Err(ScenarioError::Xhat0Length { expected: n, got: self.xhat0.len() });
        }
        for i in 0..n {
            if !self.x0[i].is_finite() || !self.xhat0[i].is_finite() {
                return Err(ScenarioError::NonFiniteState(i));
            }
        }
        if self.horizon == 0 {
            return Err(ScenarioError::HorizonZero);
        }
        if let CommMode::TimeTriggered { period } = self.comm_mode {
            if period == 0 {
                return Err(ScenarioError::ZeroPeriod);
            }
        }
        if let Some(thr) = self.stop_on_error_below {
            if !thr.is_finite() || thr < 0.0 {
                return Err(ScenarioError::BadStopThreshold(thr));
            }
        }
        self.weight_policy.validate()?;
        self.trigger.validate()?;
        self.adversaries.validate(self.f_total, n)?;
        if self.adversaries.len() >= n {
            return Err(ScenarioError::NoRegularNodes);
        }
        if let WeightPolicyKind::ExplicitTable(table) = &self.weight_policy.kind {
            for (from, to, _) in table.iter() {
                if !self.graph.has_edge(from, to) {
                    return Err(ScenarioError::TableUnknownEdge { from, to });
                }
            }
            for (from, to) in self.graph.edges() {
                if table.get(from, to).is_none() {
                    return Err(ScenarioError::TableMissingEdge { from, to });
                }
            }
        }
        Ok(())
    }
}

/// One recorded time step: states, broadcast values, and which nodes fired
/// during the round that starts at this step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
    pub fired: Vec<bool>,
}

/// Full per-step log of a run. `steps[k]` holds the state at time `k`; the
/// final step's `fired` flags are all false because no round starts there.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub malicious: Vec<bool>,
    pub steps: Vec<TraceStep>,
    /// Final per-node broadcast counters, as accumulated by the agents.
    pub trigger_counts: Vec<u64>,
}

impl RunTrace {
    pub fn node_count(&self) -> usize {
        self.malicious.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeTriggers {
    pub node: usize,
    pub count: u64,
}

/// Aggregate metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub final_consensus_error: f64,
    /// Max consensus error over the trailing window of recorded steps.
    pub max_consensus_error_tail: f64,
    pub tail_window: usize,
    pub safety_interval: [f64; 2],
    pub safety_ok: bool,
    pub total_triggers: u64,
    pub mean_triggers_per_regular_node: f64,
    pub triggers_per_regular_node: Vec<NodeTriggers>,
    /// Spread of the regular broadcast values at the final step.
    pub final_xhat_gap: f64,
    pub steps_executed: usize,
    pub horizon: usize,
    pub truncated: bool,
}

/// Max minus min; `None` on an empty slice.
pub fn consensus_error(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    let (lo, hi) = values
        .iter()
        .fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Some(hi - lo)
}

/// The interval spanned by the regular nodes' initial states and initial
/// broadcast values. Regular states must never leave it.
pub fn safety_interval(scenario: &Scenario) -> Result<[f64; 2], ScenarioError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut any = false;
    for i in 0..scenario.node_count() {
        if scenario.adversaries.contains(i) {
            continue;
        }
        any = true;
        lo = lo.min(scenario.x0[i]).min(scenario.xhat0[i]);
        hi = hi.max(scenario.x0[i]).max(scenario.xhat0[i]);
    }
    if !any {
        return Err(ScenarioError::NoRegularNodes);
    }
    Ok([lo, hi])
}

/// Max consensus error of the regular nodes over the trailing `window`
/// recorded steps (clamped to at least the final step). Run summaries use a
/// window of one tenth of the horizon; pass a different window here to
/// re-measure the tail of an existing trace.
pub fn max_consensus_error_over_tail(
    scenario: &Scenario,
    trace: &RunTrace,
    window: usize,
) -> f64 {
    let regular = scenario.regular_nodes();
    let start = trace.steps.len().saturating_sub(window.max(1));
    trace.steps[start..]
        .iter()
        .map(|s| {
            let xs: Vec<f64> = regular.iter().map(|&i| s.x[i]).collect();
            consensus_error(&xs).expect("regular set is nonempty")
        })
        .fold(0.0_f64, f64::max)
}

/// True iff every regular node's state and broadcast value stays inside the
/// closed interval at every recorded step.
pub fn check_safety(trace: &RunTrace, interval: [f64; 2]) -> bool {
    let [lo, hi] = interval;
    trace.steps.iter().all(|s| {
        (0..trace.node_count()).all(|i| {
            trace.malicious[i]
                || (s.x[i] >= lo && s.x[i] <= hi && s.xhat[i] >= lo && s.xhat[i] <= hi)
        })
    })
}

/// Advances one agent against the round-`k` snapshot of broadcast values.
fn advance_agent(
    scenario: &Scenario,
    snapshot: &[f64],
    own: AgentState,
    node: usize,
    k: u64,
) -> Result<(AgentState, bool), EngineError> {
    if let Some(adv) = scenario.adversaries.get(node) {
        let x_new = adv.script.value_at(k);
        let fire = adv.schedule.fires_at(k);
        return Ok((commit_broadcast(own, x_new, fire), fire));
    }
    let reference = filter_reference(scenario.protocol, &own);
    let neighbor_values: Vec<(usize, f64)> = scenario
        .graph
        .in_neighbors(node)
        .iter()
        .map(|&j| (j, snapshot[j]))
        .collect();
    let kept = msr_filter(reference, &neighbor_values, scenario.f_total);
    let weights = assign_weights(&scenario.weight_policy, node, &kept)
        .map_err(|source| EngineError::Step { step: k, node, source })?;
    let kept_values: Vec<(usize, f64)> = kept.iter().map(|&j| (j, snapshot[j])).collect();
    let x_new = step(scenario.protocol, &own, &kept_values, &weights)
        .map_err(|source| EngineError::Step { step: k, node, source })?;
    let fire = match scenario.comm_mode {
        CommMode::EventTriggered => trigger_eval(x_new, own.xhat, k, &scenario.trigger).1,
        CommMode::TimeTriggered { period } => k.is_multiple_of(period),
    };
    Ok((commit_broadcast(own, x_new, fire), fire))
}

/// Runs the scenario and returns the full trace plus its summary.
pub fn run(scenario: &Scenario) -> Result<(RunTrace, RunSummary), EngineError> {
    let order: Vec<usize> = (0..scenario.node_count()).collect();
    run_with_agent_order(scenario, &order)
}

/// Like [`run`] but steps agents within each round in the given order. The
/// result does not depend on the order because every agent reads only the
/// previous round's snapshot; exposed so tests can prove exactly that.
pub fn run_with_agent_order(
    scenario: &Scenario,
    order: &[usize],
) -> Result<(RunTrace, RunSummary), EngineError> {
    scenario.validate().map_err(EngineError::Scenario)?;
    let n = scenario.node_count();
    assert_eq!(order.len(), n, "agent order must cover every node");
    let mut seen = vec![false; n];
    for &i in order {
        assert!(i < n && !seen[i], "agent order must be a permutation of 0..n");
        seen[i] = true;
    }

    let malicious: Vec<bool> = (0..n).map(|i| scenario.adversaries.contains(i)).collect();
    let regular: Vec<usize> = (0..n).filter(|&i| !malicious[i]).collect();
    let mut agents: Vec<AgentState> = (0..n)
        .map(|i| AgentState::new(scenario.x0[i], scenario.xhat0[i]))
        .collect();

    let mut steps: Vec<TraceStep> = Vec::with_capacity(scenario.horizon + 1);
    steps.push(snapshot_step(&agents, n));

    let mut truncated = false;
    for k in 0..scenario.horizon as u64 {
        if let Some(threshold) = scenario.stop_on_error_below {
            let xs: Vec<f64> = regular.iter().map(|&i| agents[i].x).collect();
            let err = consensus_error(&xs).expect("regular set is nonempty");
            if err <= threshold {
                truncated = true;
                break;
            }
        }
        let snapshot: Vec<f64> = agents.iter().map(|a| a.xhat).collect();
        let mut next = agents.clone();
        let mut fired = vec![false; n];
        for &i in order {
            let (state, fire) = advance_agent(scenario, &snapshot, agents[i], i, k)?;
            next[i] = state;
            fired[i] = fire;
        }
        steps.last_mut().expect("at least the initial step").fired = fired;
        agents = next;
        steps.push(snapshot_step(&agents, n));
    }

    let trace = RunTrace {
        malicious,
        steps,
        trigger_counts: agents.iter().map(|a| a.trigger_count).collect(),
    };
    let summary = summarize(scenario, &trace, truncated)?;
    Ok((trace, summary))
}

fn snapshot_step(agents: &[AgentState], n: usize) -> TraceStep {
    TraceStep {
        x: agents.iter().map(|a| a.x).collect(),
        xhat: agents.iter().map(|a| a.xhat).collect(),
        fired: vec![false; n],
    }
}

fn summarize(
    scenario: &Scenario,
    trace: &RunTrace,
    truncated: bool,
) -> Result<RunSummary, EngineError> {
    let regular = scenario.regular_nodes();
    let interval = safety_interval(scenario).map_err(EngineError::Scenario)?;
    let last = trace.steps.last().expect("trace has at least the initial step");

    let final_xs: Vec<f64> = regular.iter().map(|&i| last.x[i]).collect();
    let final_consensus_error = consensus_error(&final_xs).expect("regular set is nonempty");
    let final_xhats: Vec<f64> = regular.iter().map(|&i| last.xhat[i]).collect();
    let final_xhat_gap = consensus_error(&final_xhats).expect("regular set is nonempty");

    let tail_window = (scenario.horizon / 10).max(1);
    let max_consensus_error_tail = max_consensus_error_over_tail(scenario, trace, tail_window);

    let triggers_per_regular_node: Vec<NodeTriggers> = regular
        .iter()
        .map(|&i| NodeTriggers { node: i, count: trace.trigger_counts[i] })
        .collect();
    let total_triggers: u64 = triggers_per_regular_node.iter().map(|t| t.count).sum();
    let mean_triggers_per_regular_node = total_triggers as f64 / regular.len() as f64;

    Ok(RunSummary {
        final_consensus_error,
        max_consensus_error_tail,
        tail_window,
        safety_interval: interval,
        safety_ok: check_safety(trace, interval),
        total_triggers,
        mean_triggers_per_regular_node,
        triggers_per_regular_node,
        final_xhat_gap,
        steps_executed: trace.steps.len() - 1,
        horizon: scenario.horizon,
        truncated,
    })
}

/// Per-run row of a Monte Carlo batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRunStats {
    pub run: usize,
    pub seed: u64,
    pub steps_to_threshold: usize,
    pub reached_threshold: bool,
    pub mean_triggers_per_regular_node: f64,
    pub final_consensus_error: f64,
}

/// Aggregates over a batch of independently initialized runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub runs: usize,
    pub base_seed: u64,
    pub init_lo: f64,
    pub init_hi: f64,
    pub threshold: f64,
    pub triggers_mean: f64,
    pub triggers_min: f64,
    pub triggers_max: f64,
    pub steps_mean: f64,
    pub steps_min: usize,
    pub steps_max: usize,
    pub runs_reached_threshold: usize,
    pub per_run: Vec<BatchRunStats>,
}

/// The concrete scenario executed as batch entry `index`: fresh uniform
/// initial states in `[init_lo, init_hi]` drawn from `base_seed + index`,
/// with `xhat0 = x0`.
pub fn materialize_batch_run(
    template: &Scenario,
    init_lo: f64,
    init_hi: f64,
    base_seed: u64,
    index: usize,
) -> Scenario {
    let seed = base_seed.wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(init_lo, init_hi);
    let x0: Vec<f64> = (0..template.node_count()).map(|_| dist.sample(&mut rng)).collect();
    let mut scenario = template.clone();
    scenario.xhat0 = x0.clone();
    scenario.x0 = x0;
    scenario.seed = seed;
    scenario
}

fn batch_preflight(
    template: &Scenario,
    runs: usize,
    init_lo: f64,
    init_hi: f64,
) -> Result<f64, EngineError> {
    if runs == 0 {
        return Err(EngineError::BatchNeedsRuns);
    }
    if !init_lo.is_finite() || !init_hi.is_finite() || init_lo > init_hi {
        return Err(EngineError::BadInitRange { lo: init_lo, hi: init_hi });
    }
    template.validate().map_err(EngineError::Scenario)?;
    template.stop_on_error_below.ok_or(EngineError::BatchNeedsStopThreshold)
}

fn batch_run_stats(
    template: &Scenario,
    init_lo: f64,
    init_hi: f64,
    base_seed: u64,
    index: usize,
    threshold: f64,
) -> Result<BatchRunStats, EngineError> {
    let scenario = materialize_batch_run(template, init_lo, init_hi, base_seed, index);
    let (_, summary) = run(&scenario)
        .map_err(|source| EngineError::BatchRun { run: index, source: Box::new(source) })?;
    Ok(BatchRunStats {
        run: index,
        seed: scenario.seed,
        steps_to_threshold: summary.steps_executed,
        reached_threshold: summary.truncated || summary.final_consensus_error <= threshold,
        mean_triggers_per_regular_node: summary.mean_triggers_per_regular_node,
        final_consensus_error: summary.final_consensus_error,
    })
}

fn aggregate(
    per_run: Vec<BatchRunStats>,
    runs: usize,
    base_seed: u64,
    init_lo: f64,
    init_hi: f64,
    threshold: f64,
) -> BatchSummary {
    let triggers: Vec<f64> = per_run.iter().map(|r| r.mean_triggers_per_regular_node).collect();
    let steps: Vec<usize> = per_run.iter().map(|r| r.steps_to_threshold).collect();
    BatchSummary {
        runs,
        base_seed,
        init_lo,
        init_hi,
        threshold,
        triggers_mean: triggers.iter().sum::<f64>() / runs as f64,
        triggers_min: triggers.iter().copied().fold(f64::INFINITY, f64::min),
        triggers_max: triggers.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        steps_mean: steps.iter().sum::<usize>() as f64 / runs as f64,
        steps_min: steps.iter().copied().min().unwrap_or(0),
        steps_max: steps.iter().copied().max().unwrap_or(0),
        runs_reached_threshold: per_run.iter().filter(|r| r.reached_threshold).count(),
        per_run,
    }
}

/// Monte Carlo batch: `runs` independent runs of the template with uniform
/// initial states, aggregated deterministically. Uses the parallel runner
/// when the `parallel` feature is on.
pub fn run_batch(
    template: &Scenario,
    runs: usize,
    init_lo: f64,
    init_hi: f64,
    base_seed: u64,
) -> Result<BatchSummary, EngineError> {
    #[cfg(feature = "parallel")]
    {
        run_batch_parallel(template, runs, init_lo, init_hi, base_seed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(template, runs, init_lo, init_hi, base_seed)
    }
}

/// Single-threaded batch runner.
pub fn run_batch_sequential(
    template: &Scenario,
    runs: usize,
    init_lo: f64,
    init_hi: f64,
    base_seed: u64,
) -> Result<BatchSummary, EngineError> {
    let threshold = batch_preflight(template, runs, init_lo, init_hi)?;
    let per_run = (0..runs)
        .map(|i| batch_run_stats(template, init_lo, init_hi, base_seed, i, threshold))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(per_run, runs, base_seed, init_lo, init_hi, threshold))
}

/// Data-parallel batch runner; runs are independent and collected in index
/// order, so the output is identical to the sequential runner's.
#[cfg(feature = "parallel")]
pub fn run_batch_parallel(
    template: &Scenario,
    runs: usize,
    init_lo: f64,
    init_hi: f64,
    base_seed: u64,
) -> Result<BatchSummary, EngineError> {
    use rayon::prelude::*;

    let threshold = batch_preflight(template, runs, init_lo, init_hi)?;
    let per_run = (0..runs)
        .into_par_iter()
        .map(|i| batch_run_stats(template, init_lo, init_hi, base_seed, i, threshold))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(per_run, runs, base_seed, init_lo, init_hi, threshold))
}
