use std::collections::BTreeSet;

use thiserror::Error;

use super::{Flow, MachinePath, Model, SourceMap, StageKind, StageRef, Trigger};
use crate::events::{FlowRef, RegionItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Arrive + Accept become one Receive stage.
    Fuse,
    /// Receive is split into Arrive followed by Accept.
    Unfuse,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("cannot fuse arrive/accept in {}: arrive has flows that bypass accept", join(.machines))]
    CannotFuse { machines: Vec<MachinePath> },
}

fn join(paths: &[MachinePath]) -> String {
    paths
        .iter()
        .map(|p| format!("`{p}`"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Converts between the fused (Receive) and unfused (Arrive, Accept) forms
/// of every machine in the model, rerouting flows, triggers and event
/// regions.
pub fn normalize_receive(model: &Model, direction: Direction) -> Result<Model, NormalizeError> {
    match direction {
        Direction::Fuse => fuse(model),
        Direction::Unfuse => Ok(unfuse(model)),
    }
}

fn fuse(model: &Model) -> Result<Model, NormalizeError> {
    let targets: Vec<MachinePath> = model
        .machines()
        .into_iter()
        .filter(|m| !m.folded && m.has(StageKind::Arrive) && m.has(StageKind::Accept))
        .map(|m| m.path.clone())
        .collect();

    let blocked: Vec<MachinePath> = targets
        .iter()
        .filter(|p| {
            let arrive = StageRef::new((*p).clone(), StageKind::Arrive);
            let accept = StageRef::new((*p).clone(), StageKind::Accept);
            let blocked = model.outgoing_flows(&arrive).any(|f| f.target != accept);
            blocked
        })
        .cloned()
        .collect();
    if !blocked.is_empty() {
        return Err(NormalizeError::CannotFuse { machines: blocked });
    }

    let fused: BTreeSet<&MachinePath> = targets.iter().collect();
    let map = |r: &StageRef| -> StageRef {
        if fused.contains(&r.machine) && matches!(r.kind, StageKind::Arrive | StageKind::Accept) {
            StageRef::new(r.machine.clone(), StageKind::Receive)
        } else {
            r.clone()
        }
    };

    let mut out = model.clone();
    for p in &targets {
        let m = out.machine_mut(p).expect("machine exists");
        m.stages.remove(&StageKind::Arrive);
        m.stages.remove(&StageKind::Accept);
        m.stages.insert(StageKind::Receive);
    }
    out.flows = model
        .flows
        .iter()
        .filter(|f| {
            !(fused.contains(&f.source.machine)
                && f.source.kind == StageKind::Arrive
                && f.target == StageRef::new(f.source.machine.clone(), StageKind::Accept))
        })
        .map(|f| Flow::new(f.thing.clone(), map(&f.source), map(&f.target)))
        .collect();
    out.triggers = model
        .triggers
        .iter()
        .map(|t| Trigger {
            source: map(&t.source),
            target: map(&t.target),
        })
        .collect();
    for e in out.events.values_mut() {
        e.region = e
            .region
            .iter()
            .map(|item| match item {
                RegionItem::Stage(s) => RegionItem::Stage(map(s)),
                RegionItem::Flow(f) => {
                    let (source, target) = (map(&f.source), map(&f.target));
                    if source == target {
                        RegionItem::Stage(source)
                    } else {
                        RegionItem::Flow(FlowRef {
                            thing: f.thing.clone(),
                            source,
                            target,
                        })
                    }
                }
            })
            .collect();
    }
    out.source = SourceMap::default();
    Ok(out)
}

fn unfuse(model: &Model) -> Model {
    let targets: Vec<MachinePath> = model
        .machines()
        .into_iter()
        .filter(|m| !m.folded && m.has(StageKind::Receive))
        .map(|m| m.path.clone())
        .collect();
    let split: BTreeSet<&MachinePath> = targets.iter().collect();
    let is_receive = |r: &StageRef| split.contains(&r.machine) && r.kind == StageKind::Receive;
    // things enter at Arrive and leave from Accept
    let entry = |r: &StageRef| {
        if is_receive(r) {
            StageRef::new(r.machine.clone(), StageKind::Arrive)
        } else {
            r.clone()
        }
    };
    let exit = |r: &StageRef| {
        if is_receive(r) {
            StageRef::new(r.machine.clone(), StageKind::Accept)
        } else {
            r.clone()
        }
    };

    let mut out = model.clone();
    let mut flows: BTreeSet<Flow> = model
        .flows
        .iter()
        .map(|f| Flow::new(f.thing.clone(), exit(&f.source), entry(&f.target)))
        .collect();
    for p in &targets {
        let receive = StageRef::new(p.clone(), StageKind::Receive);
        let mut kinds: BTreeSet<&str> = model
            .incoming_flows(&receive)
            .map(|f| f.thing.as_str())
            .collect();
        if kinds.is_empty() {
            kinds = model
                .outgoing_flows(&receive)
                .map(|f| f.thing.as_str())
                .collect();
        }
        for k in kinds {
            flows.insert(Flow::new(
                k,
                StageRef::new(p.clone(), StageKind::Arrive),
                StageRef::new(p.clone(), StageKind::Accept),
            ));
        }
        let m = out.machine_mut(p).expect("machine exists");
        m.stages.remove(&StageKind::Receive);
        m.stages.insert(StageKind::Arrive);
        m.stages.insert(StageKind::Accept);
    }
    out.flows = flows;
    out.triggers = model
        .triggers
        .iter()
        .map(|t| Trigger {
            source: exit(&t.source),
            target: entry(&t.target),
        })
        .collect();
    for e in out.events.values_mut() {
        let mut region = BTreeSet::new();
        for item in &e.region {
            match item {
                RegionItem::Stage(s) if is_receive(s) => {
                    region.insert(RegionItem::Stage(entry(s)));
                    region.insert(RegionItem::Stage(exit(s)));
                }
                RegionItem::Stage(s) => {
                    region.insert(RegionItem::Stage(s.clone()));
                }
                RegionItem::Flow(f) => {
                    region.insert(RegionItem::Flow(FlowRef {
                        thing: f.thing.clone(),
                        source: exit(&f.source),
                        target: entry(&f.target),
                    }));
                }
            }
        }
        e.region = region;
    }
    out.source = SourceMap::default();
    out
}
