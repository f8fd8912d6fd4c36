//! Graphviz DOT diagrams and event timelines.

use std::collections::BTreeSet;
use std::fmt::Write;

use thiserror::Error;

use crate::events::{occurrences, RegionItem};
use crate::model::{Machine, Model, Node, StageKind, StageRef};
use crate::sim::Trace;

#[derive(Debug, Clone, Default)]
pub struct RenderOptions {
    /// Event whose region is drawn highlighted.
    pub highlight: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("no event named `{0}`")]
    UnknownEvent(String),
}

pub const HIGHLIGHT: &str = "color=\"#d62728\", penwidth=2.5";

pub fn shape(kind: StageKind) -> &'static str {
    match kind {
        StageKind::Create => "house",
        StageKind::Receive => "invhouse",
        StageKind::Arrive => "invtriangle",
        StageKind::Accept => "trapezium",
        StageKind::Process => "box",
        StageKind::Release => "triangle",
        StageKind::Transfer => "diamond",
    }
}

pub fn node_id(node: &Node) -> String {
    match node {
        Node::Stage(s) => s.to_string(),
        Node::Opaque(p) => p.to_string(),
    }
}

struct Dot<'a> {
    model: &'a Model,
    nodes: BTreeSet<Node>,
    out: String,
}

impl Dot<'_> {
    fn mark(&self, node: &Node) -> String {
        if self.nodes.contains(node) {
            format!(", {HIGHLIGHT}")
        } else {
            String::new()
        }
    }

    fn machine(&mut self, m: &Machine, depth: usize) {
        let pad = "  ".repeat(depth);
        if m.folded {
            let node = Node::Opaque(m.path.clone());
            let _ = writeln!(
                self.out,
                "{pad}\"{}\" [label=\"{}\", shape=box3d, style=filled, fillcolor=\"#dddddd\"{}];",
                node_id(&node),
                m.name,
                self.mark(&node)
            );
            return;
        }
        let _ = writeln!(
            self.out,
            "{pad}subgraph \"cluster_{}\" {{",
            self.model.qualified(&m.path)
        );
        let label = if m.path.is_root() {
            self.model.name.as_str()
        } else {
            m.name.as_str()
        };
        let _ = writeln!(self.out, "{pad}  label=\"{label}\";");
        for k in StageKind::ALL.into_iter().filter(|k| m.has(*k)) {
            let node = Node::Stage(StageRef::new(m.path.clone(), k));
            let _ = writeln!(
                self.out,
                "{pad}  \"{}\" [label=\"{}\", shape={}{}];",
                node_id(&node),
                k.title(),
                shape(k),
                self.mark(&node)
            );
        }
        for c in &m.submachines {
            self.machine(c, depth + 1);
        }
        let _ = writeln!(self.out, "{pad}}}");
    }
}

/// A DOT digraph with one cluster per machine, one node per stage (or per
/// folded machine), solid flow edges labelled with the thing and dashed
/// trigger edges.
pub fn to_dot(model: &Model, options: &RenderOptions) -> Result<String, RenderError> {
    let event = match &options.highlight {
        Some(name) => Some(
            model
                .events
                .get(name)
                .ok_or_else(|| RenderError::UnknownEvent(name.clone()))?,
        ),
        None => None,
    };
    let nodes: BTreeSet<Node> = event
        .map(|e| e.stages().iter().filter_map(|s| model.node_of(s)).collect())
        .unwrap_or_default();
    let mut dot = Dot {
        model,
        nodes,
        out: String::new(),
    };
    let _ = writeln!(dot.out, "digraph \"{}\" {{", model.name);
    dot.out.push_str("  compound=true;\n  node [fontname=\"Helvetica\"];\n  edge [fontname=\"Helvetica\"];\n");
    dot.machine(&model.root, 1);

    for f in &model.flows {
        let (Some(s), Some(t)) = (model.node_of(&f.source), model.node_of(&f.target)) else {
            continue;
        };
        let lit = event.is_some_and(|e| {
            e.region
                .iter()
                .any(|i| matches!(i, RegionItem::Flow(r) if r.matches(f)))
        });
        let _ = writeln!(
            dot.out,
            "  \"{}\" -> \"{}\" [label=\"{}\"{}];",
            node_id(&s),
            node_id(&t),
            f.thing,
            if lit { format!(", {HIGHLIGHT}") } else { String::new() }
        );
    }
    for t in &model.triggers {
        let (Some(s), Some(d)) = (model.node_of(&t.source), model.node_of(&t.target)) else {
            continue;
        };
        let _ = writeln!(
            dot.out,
            "  \"{}\" -> \"{}\" [style=dashed];",
            node_id(&s),
            node_id(&d)
        );
    }
    dot.out.push_str("}\n");
    Ok(dot.out)
}

/// Tab-separated `event start end` rows, one per event occurrence, by
/// start tick then name.
pub fn to_event_timeline(trace: &Trace, model: &Model) -> String {
    let mut out = String::from("event\tstart\tend\n");
    for o in occurrences(model, trace) {
        let _ = writeln!(out, "{}\t{}\t{}", o.event, o.start, o.end);
    }
    out
}
