//! Folding a submachine into one opaque node and unfolding it again.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{Flow, Machine, MachinePath, Model, Node, Trigger};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GripError {
    #[error("no machine `{0}` in the model")]
    PathNotFound(String),
    #[error("the root machine cannot be folded")]
    CannotFoldRoot,
    #[error("`{path}` overlaps folded machine `{folded}`; folds may not nest")]
    NestedFold { path: String, folded: String },
    #[error("machine `{0}` is not folded")]
    PathNotFolded(String),
}

/// What a fold removed from the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldRecord {
    pub machine: Machine,
    /// Flows with both ends inside the folded machine.
    pub flows: BTreeSet<Flow>,
    pub triggers: BTreeSet<Trigger>,
}

#[derive(Debug, Clone)]
pub struct FoldState {
    pub original: Model,
    pub records: BTreeMap<MachinePath, FoldRecord>,
}

impl FoldState {
    /// A state with nothing folded yet.
    pub fn new(original: &Model) -> Self {
        Self {
            original: original.clone(),
            records: BTreeMap::new(),
        }
    }

    pub fn folded_paths(&self) -> BTreeSet<&MachinePath> {
        self.records.keys().collect()
    }
}

fn resolve(model: &Model, path: &str) -> Result<MachinePath, GripError> {
    model
        .find_machine(path)
        .map(|m| m.path.clone())
        .ok_or_else(|| GripError::PathNotFound(path.to_string()))
}

fn inside(p: &MachinePath, a: &crate::model::StageRef, b: &crate::model::StageRef) -> bool {
    a.machine.is_within(p) && b.machine.is_within(p)
}

/// Folds the machine at `path` (plain, or qualified with the model name).
pub fn fold(model: &Model, path: &str) -> Result<(Model, FoldState), GripError> {
    fold_with(model, &FoldState::new(model), path)
}

/// Folds one more machine of a model already folded under `state`.
pub fn fold_with(
    model: &Model,
    state: &FoldState,
    path: &str,
) -> Result<(Model, FoldState), GripError> {
    let p = resolve(model, path)?;
    if p.is_root() {
        return Err(GripError::CannotFoldRoot);
    }
    let existing: BTreeSet<MachinePath> = model
        .folded_paths()
        .into_iter()
        .chain(state.records.keys().cloned())
        .collect();
    if let Some(f) = existing.iter().find(|f| p.is_within(f) || f.is_within(&p)) {
        return Err(GripError::NestedFold {
            path: p.to_string(),
            folded: f.to_string(),
        });
    }

    let mut out = model.clone();
    let machine = out.machine(&p).expect("resolved").clone();
    let (interior, kept): (BTreeSet<Flow>, BTreeSet<Flow>) = model
        .flows
        .iter()
        .cloned()
        .partition(|f| inside(&p, &f.source, &f.target));
    let (interior_t, kept_t): (BTreeSet<Trigger>, BTreeSet<Trigger>) = model
        .triggers
        .iter()
        .cloned()
        .partition(|t| inside(&p, &t.source, &t.target));
    out.flows = kept;
    out.triggers = kept_t;
    let m = out.machine_mut(&p).expect("resolved");
    m.stages.clear();
    m.submachines.clear();
    m.folded = true;

    let mut state = state.clone();
    state.records.insert(
        p,
        FoldRecord {
            machine,
            flows: interior,
            triggers: interior_t,
        },
    );
    Ok((out, state))
}

/// Restores the interior of a machine folded under `state`.
pub fn unfold(model: &Model, state: &FoldState, path: &str) -> Result<Model, GripError> {
    let p = resolve(model, path).map_err(|_| GripError::PathNotFolded(path.to_string()))?;
    let record = state
        .records
        .get(&p)
        .filter(|_| model.machine(&p).is_some_and(|m| m.folded))
        .ok_or_else(|| GripError::PathNotFolded(path.to_string()))?;
    let mut out = model.clone();
    *out.machine_mut(&p).expect("resolved") = record.machine.clone();
    out.flows.extend(record.flows.iter().cloned());
    out.triggers.extend(record.triggers.iter().cloned());
    Ok(out)
}

/// Flows and triggers with exactly one end inside the machine at `path`.
pub fn boundary_arcs(model: &Model, path: &MachinePath) -> (Vec<Flow>, Vec<Trigger>) {
    let crosses = |a: &crate::model::StageRef, b: &crate::model::StageRef| {
        a.machine.is_within(path) != b.machine.is_within(path)
    };
    (
        model
            .flows
            .iter()
            .filter(|f| crosses(&f.source, &f.target))
            .cloned()
            .collect(),
        model
            .triggers
            .iter()
            .filter(|t| crosses(&t.source, &t.target))
            .cloned()
            .collect(),
    )
}

/// Arcs drawn touching the opaque node of a folded machine, as
/// `(incoming, outgoing)` counts.
pub fn opaque_degree(model: &Model, path: &MachinePath) -> (usize, usize) {
    let node = Node::Opaque(path.clone());
    let ends = model
        .flows
        .iter()
        .map(|f| (&f.source, &f.target))
        .chain(model.triggers.iter().map(|t| (&t.source, &t.target)));
    let (mut inc, mut out) = (0, 0);
    for (s, t) in ends {
        if model.node_of(t).as_ref() == Some(&node) {
            inc += 1;
        }
        if model.node_of(s).as_ref() == Some(&node) {
            out += 1;
        }
    }
    (inc, out)
}
