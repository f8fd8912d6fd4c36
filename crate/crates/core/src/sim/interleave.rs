use std::collections::{BTreeMap, BTreeSet};

use super::{eligible, gated, needs_permit, prepare, AcceptPolicy, Arrival, SimConfig, SimError, Step};
use crate::model::{Model, StageKind, StageRef};

const NODE_LIMIT: usize = 2_000_000;

#[derive(Clone)]
struct Thing {
    kind: String,
    stage: StageRef,
    arrival: Arrival,
}

#[derive(Clone)]
struct State {
    /// Spawns not yet performed, grouped by tick, earliest group first.
    spawns: Vec<Vec<StageRef>>,
    things: Vec<Thing>,
    /// Trigger-created births waiting to happen.
    births: Vec<StageRef>,
    permits: BTreeMap<StageRef, u64>,
    seq: Vec<Step>,
}

struct Search<'a> {
    model: &'a Model,
    config: SimConfig,
    gates: BTreeSet<StageRef>,
    budget: usize,
    nodes: usize,
    found: BTreeSet<Vec<Step>>,
}

impl Search<'_> {
    fn options(&self, t: &Thing) -> Vec<&crate::model::Flow> {
        if t.stage.kind == StageKind::Accept && self.config.policy(&t.stage) == AcceptPolicy::Never {
            return Vec::new();
        }
        eligible(self.model, &t.stage, &t.kind, &t.arrival)
    }

    fn complete(&self, s: &mut State, stage: &StageRef) {
        for t in self.model.triggers.iter().filter(|t| &t.source == stage) {
            if t.target.kind == StageKind::Create {
                s.births.push(t.target.clone());
            } else {
                *s.permits.entry(t.target.clone()).or_insert(0) += 1;
            }
        }
    }

    /// Applies the steps that involve no choice: retirements.
    fn settle(&self, s: &mut State) {
        loop {
            let Some(i) = s.things.iter().position(|t| self.options(t).is_empty()) else {
                return;
            };
            let t = s.things.remove(i);
            self.complete(s, &t.stage);
        }
    }

    fn born(&self, s: &mut State, stage: &StageRef) {
        let kind = self.model.created_kind(stage);
        s.seq.push(Step {
            stage: stage.clone(),
            thing: kind.clone(),
        });
        s.things.push(Thing {
            kind,
            stage: stage.clone(),
            arrival: Arrival::Born,
        });
    }

    fn explore(&mut self, mut s: State) -> Result<(), SimError> {
        self.nodes += 1;
        if self.nodes > NODE_LIMIT || s.seq.len() > self.budget {
            return Err(SimError::BudgetExceeded {
                budget: self.budget,
            });
        }
        self.settle(&mut s);
        let mut moved = false;

        if let Some(group) = s.spawns.first() {
            let distinct: BTreeSet<&StageRef> = group.iter().collect();
            for stage in distinct {
                let mut next = s.clone();
                let g = &mut next.spawns[0];
                let at = g.iter().position(|x| x == stage).expect("in group");
                g.remove(at);
                if g.is_empty() {
                    next.spawns.remove(0);
                }
                self.born(&mut next, stage);
                self.explore(next)?;
                moved = true;
            }
        }

        let births: BTreeSet<&StageRef> = s.births.iter().collect();
        for stage in births {
            let mut next = s.clone();
            let at = next.births.iter().position(|x| x == stage).expect("pending");
            next.births.remove(at);
            self.born(&mut next, stage);
            self.explore(next)?;
            moved = true;
        }

        for i in 0..s.things.len() {
            let options: Vec<_> = self.options(&s.things[i]).into_iter().cloned().collect();
            for flow in options {
                let gated = needs_permit(&self.gates, &flow);
                if gated && s.permits.get(&flow.target).copied().unwrap_or(0) == 0 {
                    continue;
                }
                let mut next = s.clone();
                if gated {
                    *next.permits.get_mut(&flow.target).expect("permit") -= 1;
                }
                let from = next.things[i].stage.clone();
                let t = &mut next.things[i];
                t.stage = flow.target.clone();
                t.arrival = Arrival::of(&flow);
                next.seq.push(Step {
                    stage: flow.target.clone(),
                    thing: t.kind.clone(),
                });
                self.complete(&mut next, &from);
                self.explore(next)?;
                moved = true;
            }
        }

        if !moved {
            self.found.insert(s.seq);
        }
        Ok(())
    }
}

/// Every firing sequence the flow, trigger and gating rules allow when
/// stage durations are ignored and any enabled thing may go next. Things
/// of one spawn tick are born before those of a later tick. Fails once a
/// sequence grows beyond `budget` firings.
pub fn enumerate_interleavings(
    model: &Model,
    config: &SimConfig,
    budget: usize,
) -> Result<BTreeSet<Vec<Step>>, SimError> {
    let config = prepare(model, config)?;
    let mut groups: BTreeMap<u64, Vec<StageRef>> = BTreeMap::new();
    for s in &config.spawns {
        for _ in 0..s.count {
            groups.entry(s.tick).or_default().push(s.stage.clone());
        }
    }
    let mut search = Search {
        model,
        gates: gated(model),
        config,
        budget,
        nodes: 0,
        found: BTreeSet::new(),
    };
    search.explore(State {
        spawns: groups.into_values().collect(),
        things: Vec::new(),
        births: Vec::new(),
        permits: BTreeMap::new(),
        seq: Vec::new(),
    })?;
    Ok(search.found)
}
