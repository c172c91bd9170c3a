//! Surface language: lexing, parsing, name resolution, pretty printing,
//! and the load pipeline that checks every declaration.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod resolve;

use std::fmt;

use serde::Serialize;

use crate::diag::KernelError;
use crate::kernel::check::check_decl_with_fuel;
use crate::kernel::nbe::DEFAULT_FUEL;
use crate::kernel::rterm::RTerm;
use crate::kernel::syntax::{Fragment, Regime, Term, TypeExpr};

/// Byte range plus the 1-based line and column of its start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(src: &str, start: usize, end: usize) -> Self {
        let before = &src[..start.min(src.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Span { start, end, line, col }
    }

    pub fn join(self, other: Span) -> Span {
        if other.end >= self.end {
            Span { end: other.end, ..self }
        } else {
            self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A located message. `label` is `syntax`, `scope`, or a kernel `rule/kind`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub label: String,
    pub message: String,
    pub span: Span,
}

pub type DiagResult<T> = Result<T, Diagnostic>;

impl Diagnostic {
    pub fn error(label: impl Into<String>, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, label: label.into(), message: message.into(), span }
    }

    pub fn syntax(span: Span, message: impl Into<String>) -> Self {
        Diagnostic::error("syntax", span, message)
    }

    pub fn scope(span: Span, message: impl Into<String>) -> Self {
        Diagnostic::error("scope", span, message)
    }

    pub fn from_kernel(e: &KernelError, decl: &str, span: Span) -> Self {
        Diagnostic::error(e.label(), span, format!("in `{}`: {}", decl, e.message))
    }

    /// Renders the message with the offending source line underlined.
    pub fn render(&self, src: &str, path: &str) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let mut out = format!("{}[{}]: {}\n  --> {}:{}:{}\n", sev, self.label, self.message, path, self.span.line, self.span.col);
        if let Some(text) = src.lines().nth(self.span.line.saturating_sub(1)) {
            let width = self.span.end.saturating_sub(self.span.start).max(1);
            let avail = text.chars().count().saturating_sub(self.span.col - 1).max(1);
            let gutter = self.span.line.to_string().len();
            out.push_str(&format!("{:w$} |\n{} | {}\n{:w$} | {}{}\n", "", self.span.line, text, "", " ".repeat(self.span.col - 1), "^".repeat(width.min(avail)), w = gutter));
        }
        out
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}:{}: {}", self.label, self.span.line, self.span.col, self.message)
    }
}

impl std::error::Error for Diagnostic {}

/// A resolved declaration before checking.
#[derive(Clone, Debug)]
pub struct Decl {
    pub name: String,
    pub sigma: Fragment,
    pub ty: TypeExpr,
    pub body: Term,
    pub span: Span,
}

/// A resolved source file.
#[derive(Clone, Debug)]
pub struct Module {
    pub regime: Regime,
    pub debug: Vec<String>,
    pub decls: Vec<Decl>,
}

/// A declaration that passed the checker.
#[derive(Clone, Debug)]
pub struct LoadedDecl {
    pub name: String,
    pub sigma: Fragment,
    pub ty: TypeExpr,
    pub term: Term,
    pub rt: RTerm,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct Loaded {
    pub regime: Regime,
    pub debug: Vec<String>,
    pub decls: Vec<LoadedDecl>,
}

impl Loaded {
    pub fn get(&self, name: &str) -> Option<&LoadedDecl> {
        self.decls.iter().rev().find(|d| d.name == name)
    }

    /// The declaration a bare `run`/`bound` targets: `main` if present,
    /// otherwise the last one.
    pub fn entry(&self) -> Option<&LoadedDecl> {
        self.get("main").or(self.decls.last())
    }

    pub fn has_debug(&self, flag: &str) -> bool {
        self.debug.iter().any(|d| d == flag)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LoadOptions {
    /// Overrides the `#regime` pragma when set.
    pub regime: Option<Regime>,
    /// Caps every declaration's fragment; `Zero` re-checks all at σ=0.
    pub sigma: Option<Fragment>,
    pub fuel: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { regime: None, sigma: None, fuel: DEFAULT_FUEL }
    }
}

/// Parses and resolves a source file.
pub fn resolve_source(src: &str, regime: Option<Regime>) -> DiagResult<Module> {
    let m = parser::parse(src)?;
    resolve::resolve_module(&m, regime)
}

/// Parses, resolves, and checks every declaration.
pub fn load(src: &str, opts: LoadOptions) -> DiagResult<Loaded> {
    let m = resolve_source(src, opts.regime)?;
    let mut decls = Vec::with_capacity(m.decls.len());
    for d in m.decls {
        let sigma = match opts.sigma {
            Some(Fragment::Zero) => Fragment::Zero,
            _ => d.sigma,
        };
        let c = check_decl_with_fuel(m.regime, sigma, &d.ty, &d.body, opts.fuel)
            .map_err(|e| Diagnostic::from_kernel(&e, &d.name, d.span))?;
        decls.push(LoadedDecl { name: d.name, sigma: c.sigma, ty: c.ty, term: c.term, rt: c.rt, span: d.span });
    }
    Ok(Loaded { regime: m.regime, debug: m.debug, decls })
}

/// The `-- expect: <label>` header of a rejection fixture, if any.
pub fn expected_label(src: &str) -> Option<String> {
    src.lines()
        .filter_map(|l| l.trim().strip_prefix("--"))
        .find_map(|l| l.trim().strip_prefix("expect:").map(|s| s.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_line_and_column() {
        let s = Span::new("ab\ncde", 4, 5);
        assert_eq!((s.line, s.col), (2, 2));
    }

    #[test]
    fn render_underlines() {
        let src = "def x : Bool = (true";
        let d = load(src, LoadOptions::default()).unwrap_err();
        let r = d.render(src, "t.qtt");
        assert!(r.contains("t.qtt:1:21"), "{}", r);
        assert!(r.contains("error[syntax]"));
    }

    #[test]
    fn load_checks_declarations() {
        let src = "#regime consfree\ndef not : Bool -> Bool = \\b. if b then false else true\ndef main : Bool -> Bool = \\b. not (not b)";
        let l = load(src, LoadOptions::default()).unwrap();
        assert_eq!(l.regime, Regime::ConsFree);
        assert_eq!(l.entry().unwrap().name, "main");
    }

    #[test]
    fn kernel_rejection_carries_label() {
        let src = "def dupb : Bool -> Bool * Bool = \\b. (b, b)";
        let d = load(src, LoadOptions::default()).unwrap_err();
        assert_eq!(d.label, "Tm-Lam/usage");
    }

    #[test]
    fn regime_override_wins() {
        let src = "#regime consfree\ndef d : <> -> <> = \\x. x";
        assert!(load(src, LoadOptions::default()).is_err());
        assert!(load(src, LoadOptions { regime: Some(Regime::Lfpl), ..Default::default() }).is_ok());
    }

    #[test]
    fn expect_header() {
        assert_eq!(expected_label("-- expect: Tm-Lam/usage\ndef x : Bool = true"), Some("Tm-Lam/usage".into()));
        assert_eq!(expected_label("def x : Bool = true"), None);
    }
}
