use std::collections::BTreeSet;

use super::{is_identifier, Flow, Location, MachinePath, Model, ModelError, StageKind, StageRef, Trigger};
use crate::events::{Event, RegionItem};

/// Programmatic construction of a [`Model`]. Errors are collected and the
/// first one is reported by [`ModelBuilder::build`].
#[derive(Debug)]
pub struct ModelBuilder {
    model: Model,
    declared: BTreeSet<MachinePath>,
    error: Option<ModelError>,
}

impl ModelBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        let error = (!is_identifier(&name)).then(|| ModelError::InvalidIdentifier(name.clone()));
        Self {
            model: Model::new(name),
            declared: BTreeSet::new(),
            error,
        }
    }

    fn fail(&mut self, e: ModelError) {
        if self.error.is_none() {
            self.error = Some(e);
        }
    }

    /// Stages of the root machine.
    pub fn root_stages(mut self, stages: &[StageKind]) -> Self {
        if !self.model.root.stages.is_empty() {
            self.fail(ModelError::DuplicateMachine(self.model.name.clone()));
        }
        self.model.root.stages.extend(stages.iter().copied());
        self
    }

    pub fn machine(mut self, path: &str, stages: &[StageKind]) -> Self {
        let path = match MachinePath::parse(path) {
            Ok(p) if !p.is_root() => p,
            _ => {
                self.fail(ModelError::InvalidPath(path.to_string()));
                return self;
            }
        };
        let unique: BTreeSet<_> = stages.iter().collect();
        if unique.len() != stages.len() {
            self.fail(ModelError::DuplicateStage(path.to_string()));
        }
        if !self.declared.insert(path.clone()) {
            self.fail(ModelError::DuplicateMachine(path.to_string()));
            return self;
        }
        match self.model.machine_mut(&path) {
            // an ancestor created implicitly by an earlier, deeper declaration
            Some(m) => m.stages.extend(stages.iter().copied()),
            None => {
                if let Err(e) = self.model.insert_machine(&path, stages.iter().copied()) {
                    self.fail(e);
                }
            }
        }
        self
    }

    /// A machine shown as one opaque node (a folded view).
    pub fn folded_machine(mut self, path: &str) -> Self {
        self = self.machine(path, &[]);
        if let Ok(p) = MachinePath::parse(path) {
            if let Some(m) = self.model.machine_mut(&p) {
                m.folded = true;
            }
        }
        self
    }

    pub fn thing(mut self, name: &str) -> Self {
        if !is_identifier(name) {
            self.fail(ModelError::InvalidIdentifier(name.to_string()));
        } else if !self.model.things.insert(name.to_string()) {
            self.fail(ModelError::DuplicateThing(name.to_string()));
        }
        self
    }

    fn stage(&mut self, text: &str) -> Option<StageRef> {
        match text.parse::<StageRef>() {
            Ok(r) => Some(r),
            Err(e) => {
                self.fail(e);
                None
            }
        }
    }

    pub fn flow(mut self, thing: &str, source: &str, target: &str) -> Self {
        if let (Some(s), Some(t)) = (self.stage(source), self.stage(target)) {
            let flow = Flow::new(thing, s, t);
            if !self.model.flows.insert(flow.clone()) {
                self.fail(ModelError::DuplicateFlow(flow.to_string()));
            }
        }
        self
    }

    pub fn trigger(mut self, source: &str, target: &str) -> Self {
        if let (Some(source), Some(target)) = (self.stage(source), self.stage(target)) {
            let t = Trigger { source, target };
            if !self.model.triggers.insert(t.clone()) {
                self.fail(ModelError::DuplicateTrigger(t.to_string()));
            }
        }
        self
    }

    /// Region items are written as in the DSL: `a.create`,
    /// `a.transfer -> b.transfer` or `x : a.transfer -> b.transfer`.
    pub fn event(mut self, name: &str, region: &[&str], duration: u64) -> Self {
        if !is_identifier(name) {
            self.fail(ModelError::InvalidIdentifier(name.to_string()));
            return self;
        }
        let mut items = BTreeSet::new();
        for text in region {
            match text.parse::<RegionItem>() {
                Ok(item) => {
                    items.insert(item);
                }
                Err(e) => self.fail(e),
            }
        }
        if items.is_empty() {
            self.fail(ModelError::EmptyRegion(name.to_string()));
        }
        if duration == 0 {
            self.fail(ModelError::ZeroDuration(name.to_string()));
        }
        let event = Event {
            name: name.to_string(),
            region: items,
            duration,
        };
        if self.model.events.insert(name.to_string(), event).is_some() {
            self.fail(ModelError::DuplicateEvent(name.to_string()));
        }
        self
    }

    pub fn chronology(mut self, before: &str, after: &str) -> Self {
        self.model
            .chronology
            .edges
            .insert((before.to_string(), after.to_string()));
        self
    }

    /// Checks that arc endpoints exist (or sit inside a folded machine).
    /// Semantic rules are left to the validator.
    pub fn build(mut self) -> Result<Model, ModelError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        let m = &self.model;
        let endpoints = m
            .flows
            .iter()
            .flat_map(|f| [&f.source, &f.target])
            .chain(m.triggers.iter().flat_map(|t| [&t.source, &t.target]));
        for r in endpoints {
            if m.locate(r) == Location::Missing {
                return Err(ModelError::StageNotFound(r.to_string()));
            }
        }
        Ok(self.model)
    }
}
