use std::fmt::Write;

use crate::model::{Machine, Model, StageKind};

fn kinds(m: &Machine) -> String {
    StageKind::ALL
        .iter()
        .filter(|k| m.has(**k))
        .map(|k| k.keyword())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical text of a model. Parsing the output gives back an equal model,
/// and printing is idempotent.
pub fn print(model: &Model) -> String {
    let mut sections: Vec<String> = Vec::new();

    let mut head = format!("model {}", model.name);
    if !model.root.stages.is_empty() {
        let _ = write!(head, " {{ {} }}", kinds(&model.root));
    }
    head.push('\n');
    for m in model.machines().into_iter().skip(1) {
        if m.folded {
            let _ = writeln!(head, "machine {} folded", m.path);
        } else if m.stages.is_empty() {
            let _ = writeln!(head, "machine {} {{}}", m.path);
        } else {
            let _ = writeln!(head, "machine {} {{ {} }}", m.path, kinds(m));
        }
    }
    sections.push(head);

    if !model.things.is_empty() {
        sections.push(model.things.iter().map(|t| format!("thing {t}\n")).collect());
    }
    if !model.flows.is_empty() {
        sections.push(model.flows.iter().map(|f| format!("flow {f}\n")).collect());
    }
    if !model.triggers.is_empty() {
        sections.push(
            model
                .triggers
                .iter()
                .map(|t| format!("trigger {t}\n"))
                .collect(),
        );
    }
    if !model.events.is_empty() {
        let mut s = String::new();
        for e in model.events.values() {
            let region: Vec<String> = e.region.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(
                s,
                "event {} {{ region: {} ; duration: {} }}",
                e.name,
                region.join(", "),
                e.duration
            );
        }
        sections.push(s);
    }
    if !model.chronology.edges.is_empty() {
        let edges: Vec<String> = model
            .chronology
            .edges
            .iter()
            .map(|(a, b)| format!("{a} -> {b}"))
            .collect();
        sections.push(format!("chronology {{ {} }}\n", edges.join(" ; ")));
    }
    sections.join("\n")
}
