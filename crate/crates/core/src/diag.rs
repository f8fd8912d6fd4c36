//! Diagnostics shared by the parser, the validator and the chronology checker.

use std::fmt;

use serde::Serialize;

/// A location in a `.tm` source file. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(line: u32, column: u32, length: u32) -> Self {
        Self {
            line: line.max(1),
            column: column.max(1),
            length: length.max(1),
        }
    }

    /// Span covering the first character of a line.
    pub fn line_start(line: u32) -> Self {
        Self::new(line, 1, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

/// Stable diagnostic codes. The string form is what appears on the wire.
pub mod codes {
    pub const LEXICAL_ERROR: &str = "lexical-error";
    pub const SYNTAX_ERROR: &str = "syntax-error";
    pub const DUPLICATE_DECLARATION: &str = "duplicate-declaration";
    pub const DANGLING_REFERENCE: &str = "dangling-reference";
    pub const AUTO_CREATED_PARENT: &str = "auto-created-parent";

    pub const ILLEGAL_ADJACENCY: &str = "illegal-adjacency";
    pub const BOUNDARY_VIOLATION: &str = "boundary-violation";
    pub const ILLEGAL_TRIGGER_TARGET: &str = "illegal-trigger-target";
    pub const UNDECLARED_THING: &str = "undeclared-thing";
    pub const RELEASE_WITHOUT_TRANSFER: &str = "release-without-transfer";
    pub const ACCEPT_WITHOUT_ARRIVE: &str = "accept-without-arrive";
    pub const ARRIVE_WITHOUT_ACCEPT: &str = "arrive-without-accept";
    pub const RECEIVE_CONFLICT: &str = "receive-conflict";
    pub const SELF_LOOP: &str = "self-loop";
    pub const UNRESOLVED_REGION: &str = "unresolved-region";
    pub const REGION_DISCONNECTED: &str = "region-disconnected";
    pub const UNDECLARED_EVENT: &str = "undeclared-event";
    pub const CHRONOLOGY_CYCLE: &str = "chronology-cycle";
    pub const UNREACHABLE_STAGE: &str = "unreachable-stage";

    pub const CHRONOLOGY_VIOLATION: &str = "chronology-violation";
    pub const EVENT_NEVER_OCCURRED: &str = "event-never-occurred";

    /// Every code the toolchain can emit, in a fixed order.
    pub const ALL: &[&str] = &[
        LEXICAL_ERROR,
        SYNTAX_ERROR,
        DUPLICATE_DECLARATION,
        DANGLING_REFERENCE,
        AUTO_CREATED_PARENT,
        ILLEGAL_ADJACENCY,
        BOUNDARY_VIOLATION,
        ILLEGAL_TRIGGER_TARGET,
        UNDECLARED_THING,
        RELEASE_WITHOUT_TRANSFER,
        ACCEPT_WITHOUT_ARRIVE,
        ARRIVE_WITHOUT_ACCEPT,
        RECEIVE_CONFLICT,
        SELF_LOOP,
        UNRESOLVED_REGION,
        REGION_DISCONNECTED,
        UNDECLARED_EVENT,
        CHRONOLOGY_CYCLE,
        UNREACHABLE_STAGE,
        CHRONOLOGY_VIOLATION,
        EVENT_NEVER_OCCURRED,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    /// Absent only for models that were built in memory rather than parsed.
    pub span: Option<SourceSpan>,
}

#[derive(Serialize)]
struct DiagnosticLine<'a> {
    severity: Severity,
    code: &'a str,
    message: &'a str,
    line: Option<u32>,
    column: Option<u32>,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>, span: Option<SourceSpan>) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn warning(
        code: &'static str,
        message: impl Into<String>,
        span: Option<SourceSpan>,
    ) -> Self {
        Self {
            severity: Severity::Warning,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// One JSON object, no trailing newline.
    pub fn to_json_line(&self) -> String {
        let line = DiagnosticLine {
            severity: self.severity,
            code: self.code,
            message: &self.message,
            line: self.span.map(|s| s.line),
            column: self.span.map(|s| s.column),
        };
        serde_json::to_string(&line).expect("diagnostic serializes")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(
                f,
                "{}:{}: {}[{}]: {}",
                s.line, s.column, self.severity, self.code, self.message
            ),
            None => write!(f, "{}[{}]: {}", self.severity, self.code, self.message),
        }
    }
}

/// Orders diagnostics by position; unpositioned diagnostics go last.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        let key = |d: &Diagnostic| {
            (
                d.span.is_none(),
                d.span.map(|s| (s.line, s.column)).unwrap_or_default(),
            )
        };
        key(a)
            .cmp(&key(b))
            .then_with(|| a.code.cmp(b.code))
            .then_with(|| a.message.cmp(&b.message))
    });
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
