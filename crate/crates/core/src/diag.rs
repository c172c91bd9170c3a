use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Broad class of a rejection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagKind {
    Usage,
    Regime,
    Fragment,
    Conversion,
    Motive,
    Annotation,
    Scope,
    Syntax,
    Fuel,
    Internal,
}

impl DiagKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagKind::Usage => "usage",
            DiagKind::Regime => "regime",
            DiagKind::Fragment => "fragment",
            DiagKind::Conversion => "conversion",
            DiagKind::Motive => "motive",
            DiagKind::Annotation => "annotation",
            DiagKind::Scope => "scope",
            DiagKind::Syntax => "syntax",
            DiagKind::Fuel => "fuel",
            DiagKind::Internal => "internal",
        }
    }
}

impl fmt::Display for DiagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A checker rejection naming the typing rule whose premise failed.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("[{rule}/{kind}] {message}")]
pub struct KernelError {
    pub rule: &'static str,
    pub kind: DiagKind,
    pub message: String,
}

impl KernelError {
    pub fn new(rule: &'static str, kind: DiagKind, message: impl Into<String>) -> Self {
        KernelError { rule, kind, message: message.into() }
    }

    /// The `rule/kind` pair used by fixtures and diagnostics.
    pub fn label(&self) -> String {
        format!("{}/{}", self.rule, self.kind)
    }
}

pub type KResult<T> = Result<T, KernelError>;
