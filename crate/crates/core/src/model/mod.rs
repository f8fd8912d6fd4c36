//! The static "grand machine": a tree of machines with stages, connected by
//! flows and triggers, plus the events and chronology laid over it.

mod builder;
mod normalize;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::diag::SourceSpan;
use crate::events::{Chronology, Event, FlowRef, RegionItem};

pub use builder::ModelBuilder;
pub use normalize::{normalize_receive, Direction, NormalizeError};

/// Words that can never be machine, thing or event names.
pub const KEYWORDS: &[&str] = &[
    "model",
    "machine",
    "thing",
    "flow",
    "trigger",
    "event",
    "chronology",
    "region",
    "duration",
    "folded",
    "create",
    "receive",
    "arrive",
    "accept",
    "process",
    "release",
    "transfer",
];

/// ASCII letters, digits, underscore and inner hyphens; must start with a
/// letter or underscore and may not be a keyword.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    if !(first.is_ascii_alphabetic() || first == '_') {
        return false;
    }
    if s.ends_with('-') {
        return false;
    }
    if !s
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return false;
    }
    !KEYWORDS.contains(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StageKind {
    Create,
    Receive,
    Arrive,
    Accept,
    Process,
    Release,
    Transfer,
}

impl StageKind {
    /// Canonical order, used everywhere stages are listed.
    pub const ALL: [StageKind; 7] = [
        StageKind::Create,
        StageKind::Receive,
        StageKind::Arrive,
        StageKind::Accept,
        StageKind::Process,
        StageKind::Release,
        StageKind::Transfer,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            StageKind::Create => "create",
            StageKind::Receive => "receive",
            StageKind::Arrive => "arrive",
            StageKind::Accept => "accept",
            StageKind::Process => "process",
            StageKind::Release => "release",
            StageKind::Transfer => "transfer",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            StageKind::Create => "Create",
            StageKind::Receive => "Receive",
            StageKind::Arrive => "Arrive",
            StageKind::Accept => "Accept",
            StageKind::Process => "Process",
            StageKind::Release => "Release",
            StageKind::Transfer => "Transfer",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        StageKind::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for StageKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageKind::from_keyword(s).ok_or_else(|| ModelError::UnknownStageKind(s.to_string()))
    }
}

/// Dot-separated chain of machine names below the root. The root itself is
/// the empty path.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MachinePath(String);

impl MachinePath {
    pub fn root() -> Self {
        Self(String::new())
    }

    /// Checks every segment; the empty string is the root.
    pub fn parse(s: &str) -> Result<Self, ModelError> {
        if s.is_empty() {
            return Ok(Self::root());
        }
        if s.split('.').all(is_identifier) {
            Ok(Self(s.to_string()))
        } else {
            Err(ModelError::InvalidPath(s.to_string()))
        }
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0.split('.').filter(|s| !s.is_empty())
    }

    pub fn depth(&self) -> usize {
        self.segments().count()
    }

    /// Last segment; empty for the root.
    pub fn name(&self) -> &str {
        self.0.rsplit('.').next().unwrap_or("")
    }

    pub fn parent(&self) -> Option<MachinePath> {
        if self.is_root() {
            return None;
        }
        match self.0.rfind('.') {
            Some(i) => Some(Self(self.0[..i].to_string())),
            None => Some(Self::root()),
        }
    }

    pub fn child(&self, name: &str) -> MachinePath {
        if self.is_root() {
            Self(name.to_string())
        } else {
            Self(format!("{}.{}", self.0, name))
        }
    }

    /// True when `self` is `ancestor` or lies below it.
    pub fn is_within(&self, ancestor: &MachinePath) -> bool {
        if ancestor.is_root() || self == ancestor {
            return true;
        }
        self.0.len() > ancestor.0.len()
            && self.0.starts_with(&ancestor.0)
            && self.0.as_bytes()[ancestor.0.len()] == b'.'
    }

    /// Every proper ancestor, nearest first, ending with the root.
    pub fn ancestors(&self) -> Vec<MachinePath> {
        let mut out = Vec::new();
        let mut cur = self.parent();
        while let Some(p) = cur {
            cur = p.parent();
            out.push(p);
        }
        out
    }
}

impl fmt::Display for MachinePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A stage addressed by the machine that owns it and its kind.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StageRef {
    pub machine: MachinePath,
    pub kind: StageKind,
}

impl StageRef {
    pub fn new(machine: MachinePath, kind: StageKind) -> Self {
        Self { machine, kind }
    }
}

impl fmt::Display for StageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.machine.is_root() {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "{}.{}", self.machine, self.kind)
        }
    }
}

impl FromStr for StageRef {
    type Err = ModelError;

    /// `path.kind`, or a bare `kind` for a stage of the root machine.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (path, kind) = match s.rfind('.') {
            Some(i) => (&s[..i], &s[i + 1..]),
            None => ("", s),
        };
        let kind = StageKind::from_keyword(kind)
            .ok_or_else(|| ModelError::InvalidStageRef(s.to_string()))?;
        let machine =
            MachinePath::parse(path).map_err(|_| ModelError::InvalidStageRef(s.to_string()))?;
        Ok(StageRef { machine, kind })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    pub name: String,
    pub path: MachinePath,
    pub stages: BTreeSet<StageKind>,
    pub submachines: Vec<Machine>,
    /// Set on folded views: the interior is hidden behind one opaque node.
    pub folded: bool,
}

impl Machine {
    pub fn new(path: MachinePath) -> Self {
        Self {
            name: path.name().to_string(),
            path,
            stages: BTreeSet::new(),
            submachines: Vec::new(),
            folded: false,
        }
    }

    pub fn parent(&self) -> Option<MachinePath> {
        self.path.parent()
    }

    pub fn has(&self, kind: StageKind) -> bool {
        self.stages.contains(&kind)
    }

    /// Pre-order walk: this machine, then each submachine subtree in order.
    pub fn walk(&self) -> Vec<&Machine> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(m) = stack.pop() {
            out.push(m);
            stack.extend(m.submachines.iter().rev());
        }
        out
    }

    fn find(&self, path: &MachinePath) -> Option<&Machine> {
        let mut cur = self;
        for seg in path.segments() {
            cur = cur.submachines.iter().find(|m| m.name == seg)?;
        }
        Some(cur)
    }

    fn find_mut(&mut self, path: &MachinePath) -> Option<&mut Machine> {
        let mut cur = self;
        for seg in path.segments() {
            cur = cur.submachines.iter_mut().find(|m| m.name == seg)?;
        }
        Some(cur)
    }
}

/// A solid arc: a thing of kind `thing` moving from one stage to another.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Flow {
    pub source: StageRef,
    pub target: StageRef,
    pub thing: String,
}

impl Flow {
    pub fn new(thing: impl Into<String>, source: StageRef, target: StageRef) -> Self {
        Self {
            source,
            target,
            thing: thing.into(),
        }
    }

    pub fn crosses_boundary(&self) -> bool {
        self.source.machine != self.target.machine
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {} -> {}", self.thing, self.source, self.target)
    }
}

/// A dashed arc: completing `source` activates `target`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trigger {
    pub source: StageRef,
    pub target: StageRef,
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source, self.target)
    }
}

/// Where each declaration came from in the source text. Not part of model
/// identity: two models that differ only in spans compare equal.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub model: Option<SourceSpan>,
    pub machines: BTreeMap<MachinePath, SourceSpan>,
    pub things: BTreeMap<String, SourceSpan>,
    pub flows: BTreeMap<Flow, SourceSpan>,
    pub triggers: BTreeMap<Trigger, SourceSpan>,
    pub events: BTreeMap<String, SourceSpan>,
    pub chronology: BTreeMap<(String, String), SourceSpan>,
}

/// The outcome of locating a stage reference in a possibly folded model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    Visible,
    /// The stage sits inside the folded machine at this path.
    Hidden(MachinePath),
    Missing,
}

/// A node as drawn: a visible stage, or the opaque node of a folded machine.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Stage(StageRef),
    Opaque(MachinePath),
}

/// A resolved stage.
#[derive(Debug, Clone, Copy)]
pub struct Stage<'a> {
    pub machine: &'a Machine,
    pub kind: StageKind,
}

impl Stage<'_> {
    pub fn reference(&self) -> StageRef {
        StageRef::new(self.machine.path.clone(), self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("`{0}` is not a valid machine path")]
    InvalidPath(String),
    #[error("`{0}` is not a stage kind")]
    UnknownStageKind(String),
    #[error("`{0}` is not a valid stage reference")]
    InvalidStageRef(String),
    #[error("`{0}` is not a valid region item")]
    InvalidRegionItem(String),
    #[error("machine `{0}` is declared twice")]
    DuplicateMachine(String),
    #[error("stage `{0}` is declared twice")]
    DuplicateStage(String),
    #[error("thing `{0}` is declared twice")]
    DuplicateThing(String),
    #[error("flow `{0}` is declared twice")]
    DuplicateFlow(String),
    #[error("trigger `{0}` is declared twice")]
    DuplicateTrigger(String),
    #[error("event `{0}` is declared twice")]
    DuplicateEvent(String),
    #[error("no machine at `{0}`")]
    MachineNotFound(String),
    #[error("no stage `{0}`")]
    StageNotFound(String),
    #[error("event `{0}` has an empty region")]
    EmptyRegion(String),
    #[error("event `{0}` has zero duration")]
    ZeroDuration(String),
}

#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub root: Machine,
    pub things: BTreeSet<String>,
    pub flows: BTreeSet<Flow>,
    pub triggers: BTreeSet<Trigger>,
    pub events: BTreeMap<String, Event>,
    pub chronology: Chronology,
    pub source: SourceMap,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.root == other.root
            && self.things == other.things
            && self.flows == other.flows
            && self.triggers == other.triggers
            && self.events == other.events
            && self.chronology == other.chronology
    }
}

impl Eq for Model {}

impl Model {
    /// An empty model: a root machine with no stages.
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            root: Machine::new(MachinePath::root()),
            things: BTreeSet::new(),
            flows: BTreeSet::new(),
            triggers: BTreeSet::new(),
            events: BTreeMap::new(),
            chronology: Chronology::default(),
            source: SourceMap::default(),
        }
    }

    pub fn builder(name: impl Into<String>) -> ModelBuilder {
        ModelBuilder::new(name)
    }

    /// All machines in declaration (pre-)order, root first.
    pub fn machines(&self) -> Vec<&Machine> {
        self.root.walk()
    }

    pub fn machine(&self, path: &MachinePath) -> Option<&Machine> {
        self.root.find(path)
    }

    pub(crate) fn machine_mut(&mut self, path: &MachinePath) -> Option<&mut Machine> {
        self.root.find_mut(path)
    }

    /// Looks a machine up from user text. Paths are relative to the root;
    /// a path qualified with the model name (`person.work` in model
    /// `person`) is accepted when the relative reading does not exist.
    pub fn find_machine(&self, text: &str) -> Option<&Machine> {
        if let Ok(p) = MachinePath::parse(text) {
            if let Some(m) = self.machine(&p) {
                return Some(m);
            }
        }
        if text == self.name {
            return Some(&self.root);
        }
        let rest = text.strip_prefix(&self.name)?.strip_prefix('.')?;
        self.machine(&MachinePath::parse(rest).ok()?)
    }

    /// Path qualified with the model name.
    pub fn qualified(&self, path: &MachinePath) -> String {
        if path.is_root() {
            self.name.clone()
        } else {
            format!("{}.{}", self.name, path)
        }
    }

    /// Resolves `(path, kind)` to the unique stage there. Arrive/Accept and
    /// Receive are distinct kinds, so a fused machine never answers for its
    /// unfused form or vice versa.
    pub fn resolve_stage(&self, r: &StageRef) -> Result<Stage<'_>, ModelError> {
        let machine = self
            .machine(&r.machine)
            .or_else(|| self.find_machine(r.machine.as_str()))
            .filter(|m| !m.folded)
            .ok_or_else(|| ModelError::StageNotFound(r.to_string()))?;
        if machine.has(r.kind) {
            Ok(Stage {
                machine,
                kind: r.kind,
            })
        } else {
            Err(ModelError::StageNotFound(r.to_string()))
        }
    }

    /// Exact-path lookup that also recognises references hidden by a fold.
    pub fn locate(&self, r: &StageRef) -> Location {
        let mut cur = &self.root;
        for seg in r.machine.segments() {
            if cur.folded {
                return Location::Hidden(cur.path.clone());
            }
            match cur.submachines.iter().find(|m| m.name == seg) {
                Some(m) => cur = m,
                None => return Location::Missing,
            }
        }
        if cur.folded {
            Location::Hidden(cur.path.clone())
        } else if cur.has(r.kind) {
            Location::Visible
        } else {
            Location::Missing
        }
    }

    /// The node a reference is drawn as, if it exists at all.
    pub fn node_of(&self, r: &StageRef) -> Option<Node> {
        match self.locate(r) {
            Location::Visible => Some(Node::Stage(r.clone())),
            Location::Hidden(p) => Some(Node::Opaque(p)),
            Location::Missing => None,
        }
    }

    pub fn has_stage(&self, r: &StageRef) -> bool {
        self.locate(r) == Location::Visible
    }

    /// Every visible stage in canonical order: machines pre-order, kinds in
    /// canonical order within a machine.
    pub fn stages(&self) -> Vec<StageRef> {
        self.machines()
            .into_iter()
            .filter(|m| !m.folded)
            .flat_map(|m| m.stages.iter().map(|k| StageRef::new(m.path.clone(), *k)))
            .collect()
    }

    pub fn stage_count(&self) -> usize {
        self.stages().len()
    }

    pub fn folded_paths(&self) -> Vec<MachinePath> {
        self.machines()
            .into_iter()
            .filter(|m| m.folded)
            .map(|m| m.path.clone())
            .collect()
    }

    pub fn is_folded(&self) -> bool {
        self.machines().iter().any(|m| m.folded)
    }

    pub fn outgoing_flows<'a>(&'a self, s: &'a StageRef) -> impl Iterator<Item = &'a Flow> + 'a {
        self.flows.iter().filter(move |f| &f.source == s)
    }

    pub fn incoming_flows<'a>(&'a self, s: &'a StageRef) -> impl Iterator<Item = &'a Flow> + 'a {
        self.flows.iter().filter(move |f| &f.target == s)
    }

    /// The kind of thing born at a Create stage: the label of its first
    /// outgoing flow, else a thing named like the machine, else the machine
    /// name itself.
    pub fn created_kind(&self, create: &StageRef) -> String {
        if let Some(f) = self.outgoing_flows(create).next() {
            return f.thing.clone();
        }
        let name = if create.machine.is_root() {
            self.name.as_str()
        } else {
            create.machine.name()
        };
        name.to_string()
    }

    /// Adds a machine at `path`, creating stage-less ancestors as needed.
    /// Returns the ancestors that had to be created.
    pub fn insert_machine(
        &mut self,
        path: &MachinePath,
        stages: impl IntoIterator<Item = StageKind>,
    ) -> Result<Vec<MachinePath>, ModelError> {
        if path.is_root() {
            self.root.stages.extend(stages);
            return Ok(Vec::new());
        }
        let mut created = Vec::new();
        let mut ancestors = path.ancestors();
        ancestors.reverse();
        for a in ancestors.iter().skip(1) {
            if self.machine(a).is_none() {
                self.attach(a.clone());
                created.push(a.clone());
            }
        }
        if self.machine(path).is_some() {
            return Err(ModelError::DuplicateMachine(path.to_string()));
        }
        self.attach(path.clone());
        let m = self.machine_mut(path).expect("just attached");
        m.stages.extend(stages);
        Ok(created)
    }

    fn attach(&mut self, path: MachinePath) {
        let parent = path.parent().unwrap_or_default();
        let p = self.machine_mut(&parent).expect("parent exists");
        p.submachines.push(Machine::new(path));
    }

    /// A sub-model keeping only the listed machine subtrees (and their
    /// ancestors, stripped of stages). Arcs, events and chronology edges that
    /// lose an endpoint are dropped.
    pub fn restrict(&self, keep: &[MachinePath]) -> Model {
        let kept = |p: &MachinePath| keep.iter().any(|k| p.is_within(k));
        let ancestor_only = |p: &MachinePath| !kept(p) && keep.iter().any(|k| k.is_within(p));

        fn prune(m: &Machine, kept: &dyn Fn(&MachinePath) -> bool, anc: &dyn Fn(&MachinePath) -> bool) -> Machine {
            let mut out = m.clone();
            if !kept(&m.path) {
                out.stages.clear();
            }
            out.submachines = m
                .submachines
                .iter()
                .filter(|c| kept(&c.path) || anc(&c.path))
                .map(|c| prune(c, kept, anc))
                .collect();
            out
        }

        let mut out = self.clone();
        out.root = prune(&self.root, &kept, &ancestor_only);
        let snapshot = out.clone();
        out.flows
            .retain(|f| snapshot.has_stage(&f.source) && snapshot.has_stage(&f.target));
        out.triggers
            .retain(|t| snapshot.has_stage(&t.source) && snapshot.has_stage(&t.target));
        out.events.retain(|_, e| {
            e.region.iter().all(|item| match item {
                RegionItem::Stage(s) => snapshot.has_stage(s),
                RegionItem::Flow(FlowRef { source, target, .. }) => {
                    snapshot.has_stage(source) && snapshot.has_stage(target)
                }
            })
        });
        let names: BTreeSet<String> = out.events.keys().cloned().collect();
        out.chronology
            .edges
            .retain(|(a, b)| names.contains(a) && names.contains(b));
        out.source = SourceMap::default();
        out
    }
}
