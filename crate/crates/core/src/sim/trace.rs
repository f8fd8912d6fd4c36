use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::StageRef;

/// Identity of one thing instance: its kind and a per-kind ordinal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThingId {
    pub kind: String,
    pub ordinal: u64,
}

impl fmt::Display for ThingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind, self.ordinal)
    }
}

impl FromStr for ThingId {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, n) = s
            .split_once('#')
            .ok_or_else(|| TraceError::BadThing(s.to_string()))?;
        let ordinal = n.parse().map_err(|_| TraceError::BadThing(s.to_string()))?;
        Ok(ThingId {
            kind: kind.to_string(),
            ordinal,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cause {
    Spawn,
    Flow,
    Trigger,
    Retired,
}

/// One record of a trace. `Retired` records mark where an instance left the
/// system; every other cause is a stage firing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub tick: u64,
    pub stage: StageRef,
    pub thing: ThingId,
    pub cause: Cause,
}

impl Firing {
    pub fn is_firing(&self) -> bool {
        self.cause != Cause::Retired
    }
}

/// A firing with instance identity erased; the unit of interleaving
/// comparison.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    pub stage: StageRef,
    pub thing: String,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.thing, self.stage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// No live things and nothing scheduled.
    Quiescent,
    /// The tick limit was reached with work outstanding.
    HorizonExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub firings: Vec<Firing>,
    /// Last tick simulated.
    pub horizon: u64,
    pub outcome: Outcome,
}

#[derive(Serialize, Deserialize)]
struct FiringLine {
    tick: u64,
    stage: String,
    thing: String,
    cause: Cause,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("`{0}` is not a thing instance id")]
    BadThing(String),
}

impl Trace {
    pub fn empty() -> Self {
        Trace {
            firings: Vec::new(),
            horizon: 0,
            outcome: Outcome::Quiescent,
        }
    }

    /// Stage firings only, retirements dropped, instance ids erased.
    pub fn firing_sequence(&self) -> Vec<Step> {
        self.firings
            .iter()
            .filter(|f| f.is_firing())
            .map(|f| Step {
                stage: f.stage.clone(),
                thing: f.thing.kind.clone(),
            })
            .collect()
    }

    /// JSON lines, one record per line, each terminated by `\n`.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for f in &self.firings {
            let line = FiringLine {
                tick: f.tick,
                stage: f.stage.to_string(),
                thing: f.thing.to_string(),
                cause: f.cause,
            };
            out.push_str(&serde_json::to_string(&line).expect("firing serializes"));
            out.push('\n');
        }
        out
    }

    /// Reads the JSON-lines form back. The horizon is taken as the last tick
    /// present and the outcome is assumed quiescent.
    pub fn from_json_lines(text: &str) -> Result<Trace, TraceError> {
        let mut firings = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| TraceError::BadLine {
                line: i + 1,
                message,
            };
            let rec: FiringLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            let stage = rec.stage.parse().map_err(|e: crate::model::ModelError| bad(e.to_string()))?;
            firings.push(Firing {
                tick: rec.tick,
                stage,
                thing: rec.thing.parse()?,
                cause: rec.cause,
            });
        }
        let horizon = firings.last().map(|f| f.tick).unwrap_or(0);
        Ok(Trace {
            firings,
            horizon,
            outcome: Outcome::Quiescent,
        })
    }
}
