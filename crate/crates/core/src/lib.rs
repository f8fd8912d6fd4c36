//! Thinging machine models: a textual notation, a validator for the stage
//! semantics, a tick-based simulator, event chronologies, folding of
//! submachines and DOT rendering.

pub mod diag;
pub mod dsl;
pub mod events;
pub mod grip;
pub mod model;
pub mod render;
pub mod sim;
pub mod validate;

pub use diag::{Diagnostic, Severity, SourceSpan};
pub use model::{Flow, Machine, MachinePath, Model, StageKind, StageRef, Trigger};
