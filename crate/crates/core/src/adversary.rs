//! Scripted behaviors for malicious nodes.
//!
//! A malicious node sets its state arbitrarily and broadcasts one value to
//! all its neighbors on its own schedule, ignoring the triggering function.
//! "Arbitrary" is realized here as deterministic scripts: the pair
//! `(script, k)` fully determines the value, so a rerun reproduces the same
//! attack trace bit for bit.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("replay script needs at least one value")]
    EmptyReplay,
    #[error("square-wave period must be >= 1")]
    ZeroPeriod,
    #[error("script parameter {0} must be finite")]
    NonFinite(&'static str),
    #[error("adversary node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("duplicate adversary entry for node {0}")]
    DuplicateNode(usize),
    #[error("{count} adversaries exceed the declared bound F = {f_total}")]
    TooMany { count: usize, f_total: usize },
}

/// Deterministic value generator for a malicious node.
#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryScript {
    Constant { level: f64 },
    /// Holds `low` for `period` steps, then `high` for `period` steps, and
    /// so on; `period = 1` alternates every step.
    SquareWave { low: f64, high: f64, period: u64 },
    Sinusoid { amplitude: f64, frequency: f64, offset: f64 },
    /// Plays back an explicit sequence, clamping to the last value once the
    /// sequence is exhausted.
    Replay { values: Vec<f64> },
    /// Random walk from `start` with uniform steps in `[-step_size, step_size]`,
    /// fully determined by `seed`.
    SeededRandomWalk { start: f64, step_size: f64, seed: u64 },
}

impl AdversaryScript {
    pub fn validate(&self) -> Result<(), AdversaryError> {
        match self {
            AdversaryScript::Constant { level } => finite(*level, "level"),
            AdversaryScript::SquareWave { low, high, period } => {
                finite(*low, "low")?;
                finite(*high, "high")?;
                if *period == 0 {
                    return Err(AdversaryError::ZeroPeriod);
                }
                Ok(())
            }
            AdversaryScript::Sinusoid { amplitude, frequency, offset } => {
                finite(*amplitude, "amplitude")?;
                finite(*frequency, "frequency")?;
                finite(*offset, "offset")
            }
            AdversaryScript::Replay { values } => {
                if values.is_empty() {
                    return Err(AdversaryError::EmptyReplay);
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(AdversaryError::NonFinite("values"));
                }
                Ok(())
            }
            AdversaryScript::SeededRandomWalk { start, step_size, .. } => {
                finite(*start, "start")?;
                finite(*step_size, "step_size")
            }
        }
    }

    /// The scripted value at round `k`.
    pub fn value_at(&self, k: u64) -> f64 {
        match self {
            AdversaryScript::Constant { level } => *level,
            AdversaryScript::SquareWave { low, high, period } => {
                if (k / period).is_multiple_of(2) {
                    *low
                } else {
                    *high
                }
            }
            AdversaryScript::Sinusoid { amplitude, frequency, offset } => {
                offset + amplitude * (TAU * frequency * k as f64).sin()
            }
            AdversaryScript::Replay { values } => {
                let idx = (k as usize).min(values.len() - 1);
                values[idx]
            }
            AdversaryScript::SeededRandomWalk { start, step_size, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut v = *start;
                for _ in 0..k {
                    v += step_size * rng.gen_range(-1.0..=1.0);
                }
                v
            }
        }
    }
}

fn finite(v: f64, name: &'static str) -> Result<(), AdversaryError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(AdversaryError::NonFinite(name))
    }
}

/// When a malicious node broadcasts. Defaults to every step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BroadcastSchedule {
    EveryStep,
    AtSteps(BTreeSet<u64>),
}

impl BroadcastSchedule {
    pub fn at_steps(steps: impl IntoIterator<Item = u64>) -> Self {
        BroadcastSchedule::AtSteps(steps.into_iter().collect())
    }

    /// True iff the schedule includes round `k`.
    pub fn fires_at(&self, k: u64) -> bool {
        match self {
            BroadcastSchedule::EveryStep => true,
            BroadcastSchedule::AtSteps(steps) => steps.contains(&k),
        }
    }
}

/// A script plus its broadcast schedule, attached to one node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedAdversary {
    pub script: AdversaryScript,
    pub schedule: BroadcastSchedule,
}

impl ScriptedAdversary {
    pub fn every_step(script: AdversaryScript) -> Self {
        Self { script, schedule: BroadcastSchedule::EveryStep }
    }
}

/// The malicious nodes of a scenario, keyed by node id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdversarySet {
    members: BTreeMap<usize, ScriptedAdversary>,
}

impl AdversarySet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_entries(
        entries: impl IntoIterator<Item = (usize, ScriptedAdversary)>,
    ) -> Result<Self, AdversaryError> {
        let mut members = BTreeMap::new();
        for (node, adv) in entries {
            if members.insert(node, adv).is_some() {
                return Err(AdversaryError::DuplicateNode(node));
            }
        }
        Ok(Self { members })
    }

    /// Checks scripts and the `|A| <= F` bound for an `n`-node graph.
    pub fn validate(&self, f_total: usize, n: usize) -> Result<(), AdversaryError> {
        if self.members.len() > f_total {
            return Err(AdversaryError::TooMany { count: self.members.len(), f_total });
        }
        for (&node, adv) in &self.members {
            if node >= n {
                return Err(AdversaryError::NodeOutOfRange { node, n });
            }
            adv.script.validate()?;
        }
        Ok(())
    }

    pub fn contains(&self, node: usize) -> bool {
        self.members.contains_key(&node)
    }

    pub fn get(&self, node: usize) -> Option<&ScriptedAdversary> {
        self.members.get(&node)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.keys().copied()
    }
}
