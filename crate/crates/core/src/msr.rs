//! Protocol arithmetic: extreme-value filtering, weight assignment, the
//! three update rules, and the event trigger.
//!
//! All functions here are pure; the simulation engine feeds them immutable
//! per-round snapshots. Value comparisons are exact (no epsilon), so traces
//! are bit-reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MsrError {
    #[error("trigger parameters invalid: {0}")]
    InvalidTrigger(String),
    #[error("gamma must lie in (0, 1/2], got {0}")]
    InvalidGamma(f64),
    #[error(
        "weight policy infeasible for this in-degree: {kept} kept neighbors at gamma {gamma} \
         leave self-weight {self_weight}"
    )]
    WeightInfeasible { kept: usize, gamma: f64, self_weight: f64 },
    #[error("weight table has no entry for edge ({from}, {to})")]
    MissingTableEntry { from: usize, to: usize },
    #[error("weight table entry ({from}, {to}) = {w} outside [{gamma}, 1)")]
    TableEntryOutOfRange { from: usize, to: usize, w: f64, gamma: f64 },
    #[error("weight table leaves node {node} with self-weight {self_weight} below gamma {gamma}")]
    SelfWeightBelowGamma { node: usize, self_weight: f64, gamma: f64 },
    #[error("weight table leaves node {node} with negative self-weight {self_weight}")]
    NegativeSelfWeight { node: usize, self_weight: f64 },
    #[error("weights and kept values disagree at node id {0}")]
    WeightKeptMismatch(usize),
    #[error("unknown protocol `{0}` (expected p1, p1b, or p2)")]
    UnknownProtocol(String),
}

/// Which update rule a regular agent runs.
///
/// - `P1` is `x + sum_j a_ij (xhat_j - x)`; the own current state anchors
///   both the filter and the update.
/// - `P1B` is `x + sum_j a_ij (xhat_j - xhat_own)`, like `P1` but with the
///   correction measured against the last broadcast value.
/// - `P2` is `xhat_own + sum_j a_ij (xhat_j - xhat_own)`; only broadcast
///   values enter, and the filter reference is `xhat_own` as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    P1,
    P1B,
    P2,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProtocolKind::P1 => "p1",
            ProtocolKind::P1B => "p1b",
            ProtocolKind::P2 => "p2",
        };
        f.write_str(s)
    }
}

impl FromStr for ProtocolKind {
    type Err = MsrError;

    fn from_str(s: &str) -> Result<Self, MsrError> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(ProtocolKind::P1),
            "p1b" => Ok(ProtocolKind::P1B),
            "p2" => Ok(ProtocolKind::P2),
            other => Err(MsrError::UnknownProtocol(other.to_string())),
        }
    }
}

/// Event-trigger threshold parameters: a broadcast fires at round `k` when
/// the broadcast error exceeds `c0 + c1 * exp(-alpha * k)` strictly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerParams {
    pub c0: f64,
    pub c1: f64,
    pub alpha: f64,
}

impl TriggerParams {
    pub fn validate(&self) -> Result<(), MsrError> {
        if !self.c0.is_finite() || self.c0 < 0.0 {
            return Err(MsrError::InvalidTrigger(format!("c0 must be >= 0, got {}", self.c0)));
        }
        if !self.c1.is_finite() || self.c1 < 0.0 {
            return Err(MsrError::InvalidTrigger(format!("c1 must be >= 0, got {}", self.c1)));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(MsrError::InvalidTrigger(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Per-agent state: current value `x`, last broadcast value `xhat`, and the
/// number of broadcasts so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub x: f64,
    pub xhat: f64,
    pub trigger_count: u64,
}

impl AgentState {
    pub fn new(x: f64, xhat: f64) -> Self {
        Self { x, xhat, trigger_count: 0 }
    }
}

/// Static per-edge weight table for the explicit policy, keyed `(from, to)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    entries: BTreeMap<(usize, usize), f64>,
    /// Permits zero self-weight (nodes that do not use their own value).
    pub relaxed_self: bool,
}

impl WeightTable {
    pub fn new(relaxed_self: bool) -> Self {
        Self { entries: BTreeMap::new(), relaxed_self }
    }

    pub fn from_triples(
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
        relaxed_self: bool,
    ) -> Self {
        let mut t = Self::new(relaxed_self);
        for (from, to, w) in triples {
            t.insert(from, to, w);
        }
        t
    }

    pub fn insert(&mut self, from: usize, to: usize, w: f64) {
        self.entries.insert((from, to), w);
    }

    pub fn get(&self, from: usize, to: usize) -> Option<f64> {
        self.entries.get(&(from, to)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(f, t), &w)| (f, t, w))
    }
}

/// How averaging weights are assigned to the kept neighbor set.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightPolicyKind {
    /// Every kept neighbor and the node itself get `1 / (m + 1)`.
    EqualWithSelf,
    /// Every kept neighbor gets exactly `gamma`; the remainder stays on the
    /// node itself. Infeasible when the remainder drops below `gamma`.
    FloorGamma,
    /// Weights come from a static per-edge table; the self-weight is the
    /// remainder after the kept neighbors are paid.
    ExplicitTable(WeightTable),
}

/// Weight policy plus the weight floor `gamma` it is evaluated against.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPolicy {
    pub kind: WeightPolicyKind,
    pub gamma: f64,
}

impl WeightPolicy {
    pub fn equal_with_self(gamma: f64) -> Self {
        Self { kind: WeightPolicyKind::EqualWithSelf, gamma }
    }

    pub fn floor_gamma(gamma: f64) -> Self {
        Self { kind: WeightPolicyKind::FloorGamma, gamma }
    }

    pub fn explicit(table: WeightTable, gamma: f64) -> Self {
        Self { kind: WeightPolicyKind::ExplicitTable(table), gamma }
    }

    pub fn validate(&self) -> Result<(), MsrError> {
        if !self.gamma.is_finite() || self.gamma <= 0.0 || self.gamma > 0.5 {
            return Err(MsrError::InvalidGamma(self.gamma));
        }
        Ok(())
    }
}

/// Weights for one update: the self-weight plus one weight per kept
/// neighbor, in the same (ascending id) order as the kept set.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub self_weight: f64,
    pub neighbors: Vec<(usize, f64)>,
}

/// MSR filtering: drop the `f` largest values strictly above `own_ref` and
/// the `f` smallest strictly below it (all of them when fewer than `f`).
/// Values equal to `own_ref` are never dropped. Ties at a removal boundary
/// drop the higher node id first, which keeps traces reproducible.
///
/// `neighbors` are `(id, value)` pairs; the kept ids come back in the input
/// order.
pub fn msr_filter(own_ref: f64, neighbors: &[(usize, f64)], f: usize) -> Vec<usize> {
    let mut above: Vec<(usize, f64)> =
        neighbors.iter().copied().filter(|&(_, v)| v > own_ref).collect();
    let mut below: Vec<(usize, f64)> =
        neighbors.iter().copied().filter(|&(_, v)| v < own_ref).collect();
    // Largest first; equal values put the higher id first.
    above.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));
    // Smallest first; equal values put the higher id first.
    below.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
    let mut removed: Vec<usize> = Vec::with_capacity(2 * f.min(neighbors.len()));
    removed.extend(above.iter().take(f).map(|&(id, _)| id));
    removed.extend(below.iter().take(f).map(|&(id, _)| id));
    neighbors
        .iter()
        .map(|&(id, _)| id)
        .filter(|id| !removed.contains(id))
        .collect()
}

/// Assigns weights to `kept` (ascending node ids) for `node` under `policy`.
pub fn assign_weights(
    policy: &WeightPolicy,
    node: usize,
    kept: &[usize],
) -> Result<Weights, MsrError> {
    let m = kept.len();
    match &policy.kind {
        WeightPolicyKind::EqualWithSelf => {
            let w = 1.0 / (m as f64 + 1.0);
            Ok(Weights {
                self_weight: w,
                neighbors: kept.iter().map(|&j| (j, w)).collect(),
            })
        }
        WeightPolicyKind::FloorGamma => {
            let self_weight = 1.0 - m as f64 * policy.gamma;
            if self_weight < policy.gamma {
                return Err(MsrError::WeightInfeasible {
                    kept: m,
                    gamma: policy.gamma,
                    self_weight,
                });
            }
            Ok(Weights {
                self_weight,
                neighbors: kept.iter().map(|&j| (j, policy.gamma)).collect(),
            })
        }
        WeightPolicyKind::ExplicitTable(table) => {
            let mut neighbors = Vec::with_capacity(m);
            let mut used = 0.0;
            for &j in kept {
                let w = table
                    .get(j, node)
                    .ok_or(MsrError::MissingTableEntry { from: j, to: node })?;
                if !w.is_finite() || w < policy.gamma || w >= 1.0 {
                    return Err(MsrError::TableEntryOutOfRange {
                        from: j,
                        to: node,
                        w,
                        gamma: policy.gamma,
                    });
                }
                used += w;
                neighbors.push((j, w));
            }
            let self_weight = 1.0 - used;
            if self_weight < 0.0 {
                return Err(MsrError::NegativeSelfWeight { node, self_weight });
            }
            if !table.relaxed_self && self_weight < policy.gamma {
                return Err(MsrError::SelfWeightBelowGamma {
                    node,
                    self_weight,
                    gamma: policy.gamma,
                });
            }
            Ok(Weights { self_weight, neighbors })
        }
    }
}

/// The filter reference for the given protocol: the value the agent compares
/// neighbor broadcasts against, and the anchor of its own term.
pub fn filter_reference(protocol: ProtocolKind, own: &AgentState) -> f64 {
    match protocol {
        ProtocolKind::P1 | ProtocolKind::P1B => own.x,
        ProtocolKind::P2 => own.xhat,
    }
}

/// One local update. `kept` pairs each kept neighbor id with its broadcast
/// value; ids must match `weights` exactly.
///
/// The correction form `base + sum_j w_j (v_j - anchor)` is used for all
/// three rules; it is exact when every value coincides, so an agreeing
/// network stays bit-identical.
pub fn step(
    protocol: ProtocolKind,
    own: &AgentState,
    kept: &[(usize, f64)],
    weights: &Weights,
) -> Result<f64, MsrError> {
    if kept.len() != weights.neighbors.len() {
        let id = kept
            .iter()
            .map(|&(id, _)| id)
            .chain(weights.neighbors.iter().map(|&(id, _)| id))
            .next()
            .unwrap_or(0);
        return Err(MsrError::WeightKeptMismatch(id));
    }
    let (base, anchor) = match protocol {
        ProtocolKind::P1 => (own.x, own.x),
        ProtocolKind::P1B => (own.x, own.xhat),
        ProtocolKind::P2 => (own.xhat, own.xhat),
    };
    let mut correction = 0.0;
    for (&(id_v, v), &(id_w, w)) in kept.iter().zip(&weights.neighbors) {
        if id_v != id_w {
            return Err(MsrError::WeightKeptMismatch(id_v));
        }
        correction += w * (v - anchor);
    }
    Ok(base + correction)
}

/// Evaluates the event trigger at round `k` for a freshly computed state.
/// Returns the broadcast error `e = xhat - x_new` and whether the broadcast
/// fires: `|e| > c0 + c1 * exp(-alpha * k)`. The inequality is strict, so
/// meeting the threshold exactly keeps the old broadcast value.
pub fn trigger_eval(x_new: f64, xhat: f64, k: u64, params: &TriggerParams) -> (f64, bool) {
    let e = xhat - x_new;
    let threshold = params.c0 + params.c1 * (-params.alpha * k as f64).exp();
    (e, e.abs() > threshold)
}

/// Commits a round: the state always advances to `x_new`; the broadcast
/// value and trigger count change only when the trigger fired.
pub fn commit_broadcast(own: AgentState, x_new: f64, fire: bool) -> AgentState {
    AgentState {
        x: x_new,
        xhat: if fire { x_new } else { own.xhat },
        trigger_count: own.trigger_count + u64::from(fire),
    }
}
