//! Static checks of the stage semantics: which stage may pass a thing to
//! which, where machine boundaries may be crossed, and whether events and
//! the chronology are well formed.

mod explain;

use std::collections::BTreeSet;

pub use explain::{explain, UnknownCode};

use crate::diag::{codes, sort_diagnostics, Diagnostic, SourceSpan};
use crate::events::validate_event;
use crate::model::{Flow, Location, Model, StageKind, StageRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    WithinMachine,
    CrossMachine,
}

/// One legal `source -> target` flow between stage kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AdjacencyRule {
    pub source: StageKind,
    pub target: StageKind,
    pub scope: Scope,
}

const fn within(source: StageKind, target: StageKind) -> AdjacencyRule {
    AdjacencyRule {
        source,
        target,
        scope: Scope::WithinMachine,
    }
}

use StageKind::*;

/// The complete table of legal flows.
pub const ADJACENCY_RULES: &[AdjacencyRule] = &[
    within(Create, Process),
    within(Create, Release),
    within(Receive, Process),
    within(Receive, Release),
    within(Arrive, Accept),
    within(Accept, Process),
    within(Accept, Release),
    within(Process, Release),
    within(Release, Transfer),
    within(Transfer, Receive),
    within(Transfer, Arrive),
    AdjacencyRule {
        source: Transfer,
        target: Transfer,
        scope: Scope::CrossMachine,
    },
];

pub fn is_legal(source: StageKind, target: StageKind, scope: Scope) -> bool {
    ADJACENCY_RULES
        .iter()
        .any(|r| r.source == source && r.target == target && r.scope == scope)
}

/// Legal within-machine successors of a kind, in canonical kind order.
pub fn successors(kind: StageKind) -> Vec<StageKind> {
    StageKind::ALL
        .into_iter()
        .filter(|t| is_legal(kind, *t, Scope::WithinMachine))
        .collect()
}

fn kind_list(kinds: &[StageKind]) -> String {
    if kinds.is_empty() {
        return "nothing".to_string();
    }
    kinds
        .iter()
        .map(|k| k.title())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Every problem found in the model, ordered by source position. An empty
/// list means the model is well formed.
pub fn validate(model: &Model) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    check_machines(model, &mut diags);
    check_flows(model, &mut diags);
    check_triggers(model, &mut diags);
    check_reachability(model, &mut diags);
    for event in model.events.values() {
        diags.extend(validate_event(model, event));
    }
    check_chronology(model, &mut diags);
    sort_diagnostics(&mut diags);
    diags
}

fn check_machines(model: &Model, diags: &mut Vec<Diagnostic>) {
    for m in model.machines() {
        if m.folded {
            continue;
        }
        let span = model.source.machines.get(&m.path).copied().or(model.source.model);
        let name = if m.path.is_root() {
            model.name.as_str()
        } else {
            m.path.as_str()
        };
        if m.has(Receive) && (m.has(Arrive) || m.has(Accept)) {
            diags.push(Diagnostic::error(
                codes::RECEIVE_CONFLICT,
                format!("machine `{name}` declares receive together with arrive/accept"),
                span,
            ));
        }
        if m.has(Release) && !m.has(Transfer) {
            diags.push(Diagnostic::error(
                codes::RELEASE_WITHOUT_TRANSFER,
                format!("machine `{name}` has a release stage but no transfer stage"),
                span,
            ));
        }
        if m.has(Accept) && !m.has(Arrive) {
            diags.push(Diagnostic::error(
                codes::ACCEPT_WITHOUT_ARRIVE,
                format!("machine `{name}` has an accept stage but no arrive stage"),
                span,
            ));
        }
        if m.has(Arrive) && !m.has(Accept) {
            diags.push(Diagnostic::error(
                codes::ARRIVE_WITHOUT_ACCEPT,
                format!("machine `{name}` has an arrive stage but no accept stage"),
                span,
            ));
        }
    }
}

fn dangling(r: &StageRef, span: Option<SourceSpan>) -> Diagnostic {
    Diagnostic::error(
        codes::DANGLING_REFERENCE,
        format!("`{r}` does not name a stage of the model"),
        span,
    )
}

fn check_flows(model: &Model, diags: &mut Vec<Diagnostic>) {
    for f in &model.flows {
        let span = model.source.flows.get(f).copied();
        if !model.things.contains(&f.thing) {
            diags.push(Diagnostic::error(
                codes::UNDECLARED_THING,
                format!("flow `{f}` carries undeclared thing `{}`", f.thing),
                span,
            ));
        }
        if f.source == f.target {
            diags.push(Diagnostic::error(
                codes::SELF_LOOP,
                format!("flow `{f}` starts and ends at the same stage"),
                span,
            ));
            continue;
        }
        let (src, dst) = (model.locate(&f.source), model.locate(&f.target));
        let mut resolved = true;
        for (loc, r) in [(&src, &f.source), (&dst, &f.target)] {
            if *loc == Location::Missing {
                diags.push(dangling(r, span));
                resolved = false;
            }
        }
        if !resolved || src != Location::Visible || dst != Location::Visible {
            continue;
        }
        if f.crosses_boundary() {
            check_crossing(model, f, span, diags);
        } else if !is_legal(f.source.kind, f.target.kind, Scope::WithinMachine) {
            diags.push(Diagnostic::error(
                codes::ILLEGAL_ADJACENCY,
                format!(
                    "flow `{f}`: {} may not pass a thing to {} inside a machine (legal successors: {})",
                    f.source.kind.title(),
                    f.target.kind.title(),
                    kind_list(&successors(f.source.kind))
                ),
                span,
            ));
        }
    }
}

fn check_crossing(model: &Model, f: &Flow, span: Option<SourceSpan>, diags: &mut Vec<Diagnostic>) {
    if !is_legal(f.source.kind, f.target.kind, Scope::CrossMachine) {
        diags.push(Diagnostic::error(
            codes::BOUNDARY_VIOLATION,
            format!(
                "flow `{f}` crosses a machine boundary from {} to {}; only transfer to transfer may cross",
                f.source.kind.title(),
                f.target.kind.title()
            ),
            span,
        ));
        return;
    }
    let fed = model
        .incoming_flows(&f.source)
        .any(|g| g.thing == f.thing && g.source != f.target);
    if !fed {
        diags.push(Diagnostic::error(
            codes::BOUNDARY_VIOLATION,
            format!(
                "flow `{f}` leaves `{}` but no `{}` ever reaches that transfer stage",
                f.source, f.thing
            ),
            span,
        ));
    }
}

fn check_triggers(model: &Model, diags: &mut Vec<Diagnostic>) {
    for t in &model.triggers {
        let span = model.source.triggers.get(t).copied();
        if t.source == t.target {
            diags.push(Diagnostic::error(
                codes::SELF_LOOP,
                format!("trigger `{t}` starts and ends at the same stage"),
                span,
            ));
            continue;
        }
        let (src, dst) = (model.locate(&t.source), model.locate(&t.target));
        let mut resolved = true;
        for (loc, r) in [(&src, &t.source), (&dst, &t.target)] {
            if *loc == Location::Missing {
                diags.push(dangling(r, span));
                resolved = false;
            }
        }
        if !resolved || dst != Location::Visible {
            continue;
        }
        let entry = t.target.kind == Create
            || (t.target.kind == Transfer && t.target.machine != t.source.machine);
        if !entry {
            diags.push(Diagnostic::error(
                codes::ILLEGAL_TRIGGER_TARGET,
                format!(
                    "trigger `{t}` targets {}; a trigger may only start a Create stage or the Transfer stage of another machine",
                    t.target.kind.title()
                ),
                span,
            ));
        }
    }
}

fn check_reachability(model: &Model, diags: &mut Vec<Diagnostic>) {
    let entered: BTreeSet<&StageRef> = model
        .flows
        .iter()
        .filter(|f| f.source != f.target)
        .map(|f| &f.target)
        .chain(model.triggers.iter().map(|t| &t.target))
        .collect();
    for s in model.stages() {
        if s.kind != Create && !entered.contains(&s) {
            let span = model.source.machines.get(&s.machine).copied().or(model.source.model);
            diags.push(Diagnostic::warning(
                codes::UNREACHABLE_STAGE,
                format!("nothing ever reaches stage `{s}`"),
                span,
            ));
        }
    }
}

fn check_chronology(model: &Model, diags: &mut Vec<Diagnostic>) {
    for ((a, b), span) in model
        .chronology
        .edges
        .iter()
        .map(|e| (e, model.source.chronology.get(e).copied()))
    {
        for name in [a, b] {
            if !model.events.contains_key(name) {
                diags.push(Diagnostic::error(
                    codes::UNDECLARED_EVENT,
                    format!("chronology edge `{a} -> {b}` names undeclared event `{name}`"),
                    span,
                ));
            }
        }
    }
    if let Some(cycle) = model.chronology.find_cycle() {
        let span = model
            .source
            .chronology
            .get(&(cycle[0].clone(), cycle[1].clone()))
            .copied();
        diags.push(Diagnostic::error(
            codes::CHRONOLOGY_CYCLE,
            format!("the chronology is cyclic: {}", cycle.join(" -> ")),
            span,
        ));
    }
}
