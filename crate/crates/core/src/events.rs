//! Events as regions of the static model with a time extent, chronologies
//! over them, and the system state seen at a tick of a trace.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::diag::{codes, Diagnostic};
use crate::model::{Location, Model, ModelError, Node, StageRef};
use crate::sim::{Cause, Trace};

/// A flow named inside an event region. Without a thing label it stands for
/// every flow between the two stages.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowRef {
    pub thing: Option<String>,
    pub source: StageRef,
    pub target: StageRef,
}

impl FlowRef {
    pub fn matches(&self, f: &crate::model::Flow) -> bool {
        f.source == self.source
            && f.target == self.target
            && self.thing.as_ref().is_none_or(|t| *t == f.thing)
    }
}

impl fmt::Display for FlowRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = &self.thing {
            write!(f, "{t} : ")?;
        }
        write!(f, "{} -> {}", self.source, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegionItem {
    Stage(StageRef),
    Flow(FlowRef),
}

impl fmt::Display for RegionItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionItem::Stage(s) => s.fmt(f),
            RegionItem::Flow(r) => r.fmt(f),
        }
    }
}

impl FromStr for RegionItem {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::InvalidRegionItem(s.to_string());
        let Some((lhs, target)) = s.split_once("->") else {
            return Ok(RegionItem::Stage(s.parse().map_err(|_| bad())?));
        };
        let (thing, source) = match lhs.split_once(':') {
            Some((t, src)) => {
                let t = t.trim();
                if !crate::model::is_identifier(t) {
                    return Err(bad());
                }
                (Some(t.to_string()), src)
            }
            None => (None, lhs),
        };
        Ok(RegionItem::Flow(FlowRef {
            thing,
            source: source.parse().map_err(|_| bad())?,
            target: target.parse().map_err(|_| bad())?,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub region: BTreeSet<RegionItem>,
    /// Minimum extent in ticks, at least 1.
    pub duration: u64,
}

impl Event {
    /// Stages the region touches: named stages plus both ends of named flows.
    pub fn stages(&self) -> BTreeSet<StageRef> {
        let mut out = BTreeSet::new();
        for item in &self.region {
            match item {
                RegionItem::Stage(s) => {
                    out.insert(s.clone());
                }
                RegionItem::Flow(f) => {
                    out.insert(f.source.clone());
                    out.insert(f.target.clone());
                }
            }
        }
        out
    }
}

/// Precedence between events: `(before, after)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Chronology {
    pub edges: BTreeSet<(String, String)>,
}

impl Chronology {
    /// One cycle if the precedence graph has any, as the sequence of events
    /// around it (first event repeated at the end).
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in &self.edges {
            succ.entry(a).or_default().push(b);
            succ.entry(b).or_default();
        }
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let mut mark: BTreeMap<&str, Mark> = succ.keys().map(|k| (*k, Mark::New)).collect();
        fn visit<'a>(
            n: &'a str,
            succ: &BTreeMap<&'a str, Vec<&'a str>>,
            mark: &mut BTreeMap<&'a str, Mark>,
            stack: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            mark.insert(n, Mark::Open);
            stack.push(n);
            for &m in &succ[n] {
                match mark[m] {
                    Mark::Open => {
                        let start = stack.iter().position(|s| *s == m).expect("on stack");
                        let mut cycle: Vec<String> =
                            stack[start..].iter().map(|s| s.to_string()).collect();
                        cycle.push(m.to_string());
                        return Some(cycle);
                    }
                    Mark::New => {
                        if let Some(c) = visit(m, succ, mark, stack) {
                            return Some(c);
                        }
                    }
                    Mark::Done => {}
                }
            }
            stack.pop();
            mark.insert(n, Mark::Done);
            None
        }
        let keys: Vec<&str> = succ.keys().copied().collect();
        for k in keys {
            if mark[k] == Mark::New {
                if let Some(c) = visit(k, &succ, &mut mark, &mut Vec::new()) {
                    return Some(c);
                }
            }
        }
        None
    }

    pub fn predecessors<'a>(&'a self, event: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |(_, b)| b == event)
            .map(|(a, _)| a.as_str())
    }
}

/// One event per stage, named `<path>.<kind>`, covering just that stage.
pub fn elementary_events(model: &Model) -> Vec<Event> {
    model
        .stages()
        .into_iter()
        .map(|s| Event {
            name: s.to_string(),
            region: BTreeSet::from([RegionItem::Stage(s)]),
            duration: 1,
        })
        .collect()
}

/// Checks that the region resolves and forms one weakly connected piece of
/// the stage graph. Connectivity counts named flows plus every flow or
/// trigger of the model running between two stages of the region.
pub fn validate_event(model: &Model, event: &Event) -> Vec<Diagnostic> {
    let span = model.source.events.get(&event.name).copied();
    let mut diags = Vec::new();
    if event.region.is_empty() {
        diags.push(Diagnostic::error(
            codes::UNRESOLVED_REGION,
            format!("event `{}` has an empty region", event.name),
            span,
        ));
        return diags;
    }
    for item in &event.region {
        let missing = match item {
            RegionItem::Stage(s) => model.locate(s) == Location::Missing,
            RegionItem::Flow(r) => match (model.locate(&r.source), model.locate(&r.target)) {
                (Location::Visible, Location::Visible) => !model.flows.iter().any(|f| r.matches(f)),
                (a, b) => a == Location::Missing || b == Location::Missing,
            },
        };
        if missing {
            diags.push(Diagnostic::error(
                codes::UNRESOLVED_REGION,
                format!("event `{}` names `{item}`, which is not in the model", event.name),
                span,
            ));
        }
    }
    if !diags.is_empty() {
        return diags;
    }

    let nodes: BTreeSet<Node> = event
        .stages()
        .iter()
        .filter_map(|s| model.node_of(s))
        .collect();
    let mut adj: BTreeMap<&Node, Vec<Node>> = nodes.iter().map(|n| (n, Vec::new())).collect();
    let mut link = |a: Option<Node>, b: Option<Node>| {
        if let (Some(a), Some(b)) = (a, b) {
            if nodes.contains(&a) && nodes.contains(&b) {
                adj.get_mut(&a).expect("node").push(b.clone());
                adj.get_mut(&b).expect("node").push(a);
            }
        }
    };
    for f in &model.flows {
        link(model.node_of(&f.source), model.node_of(&f.target));
    }
    for t in &model.triggers {
        link(model.node_of(&t.source), model.node_of(&t.target));
    }
    let start = nodes.iter().next().expect("non-empty");
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(n) = queue.pop_front() {
        for m in &adj[&n] {
            if seen.insert(m.clone()) {
                queue.push_back(m.clone());
            }
        }
    }
    if seen.len() != nodes.len() {
        diags.push(Diagnostic::error(
            codes::REGION_DISCONNECTED,
            format!(
                "the region of event `{}` falls apart into disconnected pieces",
                event.name
            ),
            span,
        ));
    }
    diags
}

/// When a declared event happened in a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub event: String,
    pub start: u64,
    /// Inclusive.
    pub end: u64,
}

impl Occurrence {
    pub fn contains(&self, tick: u64) -> bool {
        self.start <= tick && tick <= self.end
    }
}

/// Occurrence window of one event: from the first firing of a region stage
/// to the later of its last such firing and `start + duration - 1`.
pub fn occurrence(event: &Event, trace: &Trace) -> Option<Occurrence> {
    let stages = event.stages();
    let mut ticks = trace
        .firings
        .iter()
        .filter(|f| f.cause != Cause::Retired && stages.contains(&f.stage))
        .map(|f| f.tick);
    let start = ticks.next()?;
    let last = ticks.next_back().unwrap_or(start);
    Some(Occurrence {
        event: event.name.clone(),
        start,
        end: last.max(start + event.duration - 1),
    })
}

/// Occurrences of every declared event that happened, by start then name.
pub fn occurrences(model: &Model, trace: &Trace) -> Vec<Occurrence> {
    let mut out: Vec<Occurrence> = model
        .events
        .values()
        .filter_map(|e| occurrence(e, trace))
        .collect();
    out.sort_by(|a, b| a.start.cmp(&b.start).then_with(|| a.event.cmp(&b.event)));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemState {
    pub time: u64,
    pub active: BTreeSet<String>,
    /// Instance id (`kind#n`) to the stage it occupies.
    pub positions: BTreeMap<String, StageRef>,
}

#[derive(Serialize)]
struct StateJson<'a> {
    time: u64,
    active: Vec<&'a str>,
    positions: BTreeMap<&'a str, String>,
}

impl SystemState {
    pub fn to_json(&self) -> String {
        let j = StateJson {
            time: self.time,
            active: self.active.iter().map(String::as_str).collect(),
            positions: self
                .positions
                .iter()
                .map(|(k, v)| (k.as_str(), v.to_string()))
                .collect(),
        };
        serde_json::to_string(&j).expect("state serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("tick {tick} is outside the trace horizon 0..={horizon}")]
    OutOfRange { tick: u64, horizon: u64 },
}

/// Active events and live thing positions at tick `t`.
pub fn state_at(model: &Model, trace: &Trace, t: u64) -> Result<SystemState, StateError> {
    if t > trace.horizon {
        return Err(StateError::OutOfRange {
            tick: t,
            horizon: trace.horizon,
        });
    }
    let active = occurrences(model, trace)
        .into_iter()
        .filter(|o| o.contains(t))
        .map(|o| o.event)
        .collect();
    let mut positions = BTreeMap::new();
    for f in trace.firings.iter().take_while(|f| f.tick <= t) {
        let id = f.thing.to_string();
        if f.cause == Cause::Retired {
            positions.remove(&id);
        } else {
            positions.insert(id, f.stage.clone());
        }
    }
    Ok(SystemState {
        time: t,
        active,
        positions,
    })
}
