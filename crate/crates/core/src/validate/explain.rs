use thiserror::Error;

use super::{kind_list, successors, ADJACENCY_RULES, Scope};
use crate::diag::codes;
use crate::model::StageKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown diagnostic code `{0}`")]
pub struct UnknownCode(pub String);

fn adjacency_table() -> String {
    let mut out = String::from(
        "A flow inside one machine must follow the stage order. Legal successors within a machine:\n",
    );
    for k in StageKind::ALL {
        out.push_str(&format!("  {} -> {}\n", k.title(), kind_list(&successors(k))));
    }
    let cross: Vec<String> = ADJACENCY_RULES
        .iter()
        .filter(|r| r.scope == Scope::CrossMachine)
        .map(|r| format!("{} -> {}", r.source.title(), r.target.title()))
        .collect();
    out.push_str(&format!("Between machines only {} is legal.", cross.join(", ")));
    out
}

/// A fixed explanation of a diagnostic code.
pub fn explain(code: &str) -> Result<String, UnknownCode> {
    let text = match code {
        codes::LEXICAL_ERROR => "The line contains a character or number the notation does not allow. Names use ASCII letters, digits, `_` and inner `-`.",
        codes::SYNTAX_ERROR => "The tokens on this line do not form a declaration. Each line holds one of: model, machine, thing, flow, trigger, event, chronology.",
        codes::DUPLICATE_DECLARATION => "The same machine, stage, thing, flow, trigger, event or chronology edge is declared twice. Each may appear once.",
        codes::DANGLING_REFERENCE => "A stage reference names a machine or a stage kind that the model does not declare.",
        codes::AUTO_CREATED_PARENT => "A machine was declared below a parent that was never declared. The parent was created without stages.",
        codes::ILLEGAL_ADJACENCY => return Ok(adjacency_table()),
        codes::BOUNDARY_VIOLATION => "Only Transfer stages exchange things between machines: a flow that crosses a machine boundary must go from the Transfer stage of one machine to the Transfer stage of another, and a thing can only leave through a Transfer it has reached.",
        codes::ILLEGAL_TRIGGER_TARGET => "A trigger either starts a Create stage, bringing a new thing into being, or activates the Transfer stage of another machine to let an inflow in. No other stage can be triggered.",
        codes::UNDECLARED_THING => "Every flow is labelled with the kind of thing it carries, and that kind must be declared with `thing NAME`.",
        codes::RELEASE_WITHOUT_TRANSFER => "Release marks a thing as ready to be transferred outside the machine, so a machine with Release also needs a Transfer stage.",
        codes::ACCEPT_WITHOUT_ARRIVE => "Accept admits a thing that has arrived, so a machine with Accept also needs Arrive.",
        codes::ARRIVE_WITHOUT_ACCEPT => "A thing that arrives must be accepted (or rejected) by an Accept stage, so a machine with Arrive also needs Accept.",
        codes::RECEIVE_CONFLICT => "Receive is the fused form of Arrive and Accept. A machine uses either Receive or the Arrive/Accept pair, never both.",
        codes::SELF_LOOP => "A flow or trigger must connect two different stages.",
        codes::UNRESOLVED_REGION => "An event's region names a stage or flow that is not in the model, or is empty.",
        codes::REGION_DISCONNECTED => "An event's region must be one connected piece of the diagram: every stage in it must be linked to the others by flows or triggers inside the region.",
        codes::UNDECLARED_EVENT => "The chronology orders events by name; every name must be a declared event.",
        codes::CHRONOLOGY_CYCLE => "The chronology must be a partial order. A cycle of events, each required to start before the next, can never be satisfied; the message lists the events around the cycle.",
        codes::UNREACHABLE_STAGE => "No flow or trigger ever enters this stage and it is not a Create stage, so no thing can reach it.",
        codes::CHRONOLOGY_VIOLATION => "In the simulated trace an event started no earlier than an event the chronology requires to come after it.",
        codes::EVENT_NEVER_OCCURRED => "No stage in the event's region fired in the simulated trace, so its chronology edges could not be checked.",
        other => return Err(UnknownCode(other.to_string())),
    };
    Ok(text.to_string())
}
