//! Meta-level diagnostics with stable codes.

use std::fmt;

use serde::Serialize;

use crate::span::{SourceMap, SourceSpan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Stable diagnostic codes. The string forms are part of the CLI contract.
pub mod codes {
    pub const LEX: &str = "E-LEX";
    pub const PARSE: &str = "E-PARSE";
    pub const UNDEF: &str = "E-UNDEF";
    pub const ARITY: &str = "E-ARITY";
    pub const TYPE: &str = "E-TYPE";
    pub const MULT: &str = "E-MULT";
    pub const DUP: &str = "E-DUP";
    pub const NAME: &str = "E-NAME";
    pub const UNUSED: &str = "W-UNUSED";
    pub const ANIMATION: &str = "E-ANIM";
    pub const SYMBOL: &str = "W-SYMBOL";
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub span: SourceSpan,
    pub notes: Vec<(SourceSpan, String)>,
}

impl Diagnostic {
    pub fn error(code: &'static str, span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
            notes: Vec::new(),
        }
    }

    pub fn warning(code: &'static str, span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, span, message)
        }
    }

    pub fn with_note(mut self, span: SourceSpan, note: impl Into<String>) -> Self {
        self.notes.push((span, note.into()));
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `file:line:col: severity[code]: message`
    pub fn render(&self, sources: &SourceMap) -> String {
        let mut out = format!(
            "{}:{}:{}: {}[{}]: {}",
            sources.name(self.span.file),
            self.span.line_start,
            self.span.col_start,
            self.severity,
            self.code,
            self.message
        );
        for (span, note) in &self.notes {
            out.push_str(&format!(
                "\n{}:{}:{}: note: {}",
                sources.name(span.file),
                span.line_start,
                span.col_start,
                note
            ));
        }
        out
    }

    pub fn to_json_record(&self, sources: &SourceMap) -> DiagnosticRecord {
        DiagnosticRecord {
            file: sources.name(self.span.file).to_string(),
            line: self.span.line_start,
            col: self.span.col_start,
            end_line: self.span.line_end,
            end_col: self.span.col_end,
            severity: self.severity,
            code: self.code,
            message: self.message.clone(),
        }
    }
}

/// Flat, serializable form of a diagnostic (one JSON line each).
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticRecord {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

/// Orders diagnostics by (file, line, col); stable for ties.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by_key(|d| d.span.sort_key());
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
