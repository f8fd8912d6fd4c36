//! Deterministic tick-based simulation of a model.
//!
//! Each tick first performs the spawns scheduled for it and the triggers
//! that came due, then lets every thing whose stage duration has elapsed
//! move along a flow or retire. Leaving a stage completes it, which fires
//! the stage's triggers on the next tick.

mod config;
mod interleave;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use config::{parse_config, AcceptPolicy, ConfigError, SimConfig, Spawn};
pub use interleave::enumerate_interleavings;
pub use trace::{Cause, Firing, Outcome, Step, ThingId, Trace, TraceError};

use crate::diag::{codes, Diagnostic};
use crate::events::occurrence;
use crate::model::{Flow, MachinePath, Model, StageKind, StageRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("the model has {0} validation error(s); simulation needs a valid model")]
    InvalidModel(usize),
    #[error("simulation needs a fully unfolded model; folded: {}", .0.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "))]
    Folded(Vec<MachinePath>),
    #[error("{thing} at `{stage}` faces two equally ranked flows")]
    NondeterministicChoice { thing: String, stage: String },
    #[error("more than {budget} firings; enumeration abandoned")]
    BudgetExceeded { budget: usize },
}

/// How a thing reached the stage it occupies.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Arrival {
    Born,
    Within,
    From(MachinePath),
}

impl Arrival {
    pub(crate) fn of(flow: &Flow) -> Arrival {
        if flow.crosses_boundary() {
            Arrival::From(flow.source.machine.clone())
        } else {
            Arrival::Within
        }
    }
}

/// Flows a thing of `kind` at `stage` may take, best first. At a Transfer
/// stage a thing from its own machine may only leave the machine, while a
/// thing from outside goes inwards, or passes on to a third machine when
/// there is no way in.
pub(crate) fn eligible<'a>(
    model: &'a Model,
    stage: &StageRef,
    kind: &str,
    arrival: &Arrival,
) -> Vec<&'a Flow> {
    let mut out: Vec<&Flow> = model
        .flows
        .iter()
        .filter(|f| &f.source == stage && f.thing == kind)
        .collect();
    if stage.kind == StageKind::Transfer {
        match arrival {
            Arrival::Within => out.retain(|f| f.crosses_boundary()),
            Arrival::From(origin) => {
                if out.iter().any(|f| !f.crosses_boundary()) {
                    out.retain(|f| !f.crosses_boundary());
                } else {
                    out.retain(|f| &f.target.machine != origin);
                }
            }
            Arrival::Born => {}
        }
    }
    out.sort_by(|a, b| {
        (&a.target.machine, a.target.kind).cmp(&(&b.target.machine, b.target.kind))
    });
    out
}

/// Transfer stages that admit things from outside only when triggered.
pub(crate) fn gated(model: &Model) -> BTreeSet<StageRef> {
    model
        .triggers
        .iter()
        .filter(|t| t.target.kind == StageKind::Transfer)
        .map(|t| t.target.clone())
        .collect()
}

pub(crate) fn needs_permit(gates: &BTreeSet<StageRef>, flow: &Flow) -> bool {
    flow.crosses_boundary() && gates.contains(&flow.target)
}

pub(crate) fn prepare(model: &Model, config: &SimConfig) -> Result<SimConfig, SimError> {
    let folded = model.folded_paths();
    if !folded.is_empty() {
        return Err(SimError::Folded(folded));
    }
    let errors = crate::validate::validate(model)
        .iter()
        .filter(|d| d.is_error())
        .count();
    if errors > 0 {
        return Err(SimError::InvalidModel(errors));
    }
    Ok(config.resolve(model)?)
}

struct Live {
    id: ThingId,
    stage: StageRef,
    arrival: Arrival,
    ready_at: u64,
}

struct Engine<'a> {
    model: &'a Model,
    config: &'a SimConfig,
    gates: BTreeSet<StageRef>,
    live: BTreeMap<u64, Live>,
    next_slot: u64,
    ordinals: BTreeMap<String, u64>,
    permits: BTreeMap<StageRef, u64>,
    due: BTreeMap<u64, Vec<StageRef>>,
    firings: Vec<Firing>,
}

impl Engine<'_> {
    fn birth(&mut self, tick: u64, stage: &StageRef, cause: Cause) {
        let kind = self.model.created_kind(stage);
        let n = self.ordinals.entry(kind.clone()).or_insert(0);
        *n += 1;
        let id = ThingId {
            kind,
            ordinal: *n,
        };
        self.firings.push(Firing {
            tick,
            stage: stage.clone(),
            thing: id.clone(),
            cause,
        });
        self.live.insert(
            self.next_slot,
            Live {
                id,
                stage: stage.clone(),
                arrival: Arrival::Born,
                ready_at: tick + self.config.duration(stage.kind),
            },
        );
        self.next_slot += 1;
    }

    fn complete(&mut self, tick: u64, stage: &StageRef) {
        for t in self.model.triggers.iter().filter(|t| &t.source == stage) {
            self.due.entry(tick + 1).or_default().push(t.target.clone());
        }
    }

    fn step_thing(&mut self, tick: u64, slot: u64) -> Result<(), SimError> {
        let thing = &self.live[&slot];
        if thing.ready_at > tick {
            return Ok(());
        }
        let stage = thing.stage.clone();
        let rejected = stage.kind == StageKind::Accept
            && self.config.policy(&stage) == AcceptPolicy::Never;
        let options = if rejected {
            Vec::new()
        } else {
            eligible(self.model, &stage, &thing.id.kind, &thing.arrival)
        };
        if options
            .windows(2)
            .any(|w| (&w[0].target.machine, w[0].target.kind) == (&w[1].target.machine, w[1].target.kind))
        {
            return Err(SimError::NondeterministicChoice {
                thing: thing.id.to_string(),
                stage: stage.to_string(),
            });
        }
        if options.is_empty() {
            let thing = self.live.remove(&slot).expect("live");
            self.firings.push(Firing {
                tick,
                stage: stage.clone(),
                thing: thing.id,
                cause: Cause::Retired,
            });
            self.complete(tick, &stage);
            return Ok(());
        }
        let Some(flow) = options.into_iter().find(|f| {
            !needs_permit(&self.gates, f) || self.permits.get(&f.target).is_some_and(|n| *n > 0)
        }) else {
            return Ok(());
        };
        if needs_permit(&self.gates, flow) {
            *self.permits.get_mut(&flow.target).expect("permit") -= 1;
        }
        let ready_at = tick + self.config.duration(flow.target.kind);
        let thing = self.live.get_mut(&slot).expect("live");
        thing.stage = flow.target.clone();
        thing.arrival = Arrival::of(flow);
        thing.ready_at = ready_at;
        self.firings.push(Firing {
            tick,
            stage: flow.target.clone(),
            thing: thing.id.clone(),
            cause: Cause::Flow,
        });
        self.complete(tick, &stage);
        Ok(())
    }

    fn idle_after(&self, tick: u64) -> bool {
        self.live.is_empty()
            && self.due.keys().all(|t| *t <= tick)
            && self.config.spawns.iter().all(|s| s.tick <= tick)
    }
}

/// Runs the model until nothing is left to happen or `max_ticks` is
/// reached. The same model and config always give the same trace.
pub fn simulate(model: &Model, config: &SimConfig) -> Result<Trace, SimError> {
    let config = prepare(model, config)?;
    let mut engine = Engine {
        model,
        config: &config,
        gates: gated(model),
        live: BTreeMap::new(),
        next_slot: 0,
        ordinals: BTreeMap::new(),
        permits: BTreeMap::new(),
        due: BTreeMap::new(),
        firings: Vec::new(),
    };
    if engine.idle_after(0) {
        return Ok(Trace::empty());
    }
    for tick in 1..=config.max_ticks {
        for s in config.spawns.iter().filter(|s| s.tick == tick) {
            for _ in 0..s.count {
                engine.birth(tick, &s.stage, Cause::Spawn);
            }
        }
        for target in engine.due.remove(&tick).unwrap_or_default() {
            if target.kind == StageKind::Create {
                engine.birth(tick, &target, Cause::Trigger);
            } else {
                *engine.permits.entry(target).or_insert(0) += 1;
            }
        }
        let slots: Vec<u64> = engine.live.keys().copied().collect();
        for slot in slots {
            engine.step_thing(tick, slot)?;
        }
        if engine.idle_after(tick) {
            return Ok(Trace {
                firings: engine.firings,
                horizon: tick,
                outcome: Outcome::Quiescent,
            });
        }
    }
    Ok(Trace {
        firings: engine.firings,
        horizon: config.max_ticks,
        outcome: Outcome::HorizonExhausted,
    })
}

/// Compares first-start times along every chronology edge. Events that never
/// occurred are reported as warnings.
pub fn check_chronology(model: &Model, trace: &Trace) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut missing = BTreeSet::new();
    for (a, b) in &model.chronology.edges {
        let span = model.source.chronology.get(&(a.clone(), b.clone())).copied();
        let occ = |name: &String| model.events.get(name).and_then(|e| occurrence(e, trace));
        let (oa, ob) = (occ(a), occ(b));
        for (name, o) in [(a, &oa), (b, &ob)] {
            if o.is_none() && model.events.contains_key(name) && missing.insert(name.clone()) {
                diags.push(Diagnostic::warning(
                    codes::EVENT_NEVER_OCCURRED,
                    format!("event `{name}` never occurred in the trace"),
                    model.source.events.get(name).copied(),
                ));
            }
        }
        if let (Some(oa), Some(ob)) = (oa, ob) {
            if oa.start >= ob.start {
                diags.push(Diagnostic::error(
                    codes::CHRONOLOGY_VIOLATION,
                    format!(
                        "`{a}` must start before `{b}`, but `{a}` started at tick {} and `{b}` at tick {}",
                        oa.start, ob.start
                    ),
                    span,
                ));
            }
        }
    }
    crate::diag::sort_diagnostics(&mut diags);
    diags
}
