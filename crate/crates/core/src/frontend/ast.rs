//! Surface syntax with names and spans.

use super::Span;
use crate::kernel::syntax::Usage;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Zero,
    Succ,
    Dup,
    Fst,
    Snd,
    Refl,
    R,
    RInv,
    Cons,
    List,
    Id,
    El,
}

impl Builtin {
    pub fn from_keyword(s: &str) -> Option<Builtin> {
        Some(match s {
            "zero" => Builtin::Zero,
            "succ" => Builtin::Succ,
            "dup" => Builtin::Dup,
            "fst" => Builtin::Fst,
            "snd" => Builtin::Snd,
            "refl" => Builtin::Refl,
            "R" => Builtin::R,
            "cons" => Builtin::Cons,
            "List" => Builtin::List,
            "Id" => Builtin::Id,
            "El" => Builtin::El,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Zero => "zero",
            Builtin::Succ => "succ",
            Builtin::Dup => "dup",
            Builtin::Fst => "fst",
            Builtin::Snd => "snd",
            Builtin::Refl => "refl",
            Builtin::R => "R",
            Builtin::RInv => "R^-1",
            Builtin::Cons => "cons",
            Builtin::List => "List",
            Builtin::Id => "Id",
            Builtin::El => "El",
        }
    }

    /// Accepted argument counts.
    pub fn arities(self) -> &'static [usize] {
        match self {
            Builtin::Zero => &[0, 1],
            Builtin::Succ => &[1, 2],
            Builtin::Cons => &[2],
            Builtin::Id => &[3],
            _ => &[1],
        }
    }
}

/// `return z. P` annotation on an eliminator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ret {
    pub name: String,
    pub ty: Box<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Param {
    Name(String),
    Tuple(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    Lam(Vec<Param>, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    /// Two or more components, nested to the right.
    Tuple(Vec<Expr>),
    Pi { name: Option<String>, usage: Usage, dom: Box<Expr>, cod: Box<Expr> },
    Sigma { name: Option<String>, usage: Usage, fst: Box<Expr>, snd: Box<Expr> },
    /// `(x ^k : A)` before it is known to be a binder or an annotation.
    Binder { name: String, usage: Option<Usage>, ty: Box<Expr> },
    Ann(Box<Expr>, Box<Expr>),
    /// An empty pattern is `let () = ...`.
    Let { pat: Vec<String>, scrut: Box<Expr>, ret: Option<Ret>, body: Box<Expr> },
    If { scrut: Box<Expr>, ret: Option<Ret>, then_b: Box<Expr>, else_b: Box<Expr> },
    Match { scrut: Box<Expr>, ret: Option<Ret>, nil_b: Box<Expr>, head: String, tail: String, cons_b: Box<Expr> },
    RecList { scrut: Box<Expr>, ret: Option<Ret>, nil_b: Box<Expr>, head: String, tail: String, rec: String, cons_b: Box<Expr> },
    Rec {
        scrut: Box<Expr>,
        ret: Option<Ret>,
        zero_d: Option<String>,
        zero_b: Box<Expr>,
        succ_d: Option<String>,
        pred: String,
        rec: String,
        succ_b: Box<Expr>,
    },
    IRec {
        scrut: Box<Expr>,
        elem: Box<Expr>,
        ret: Ret,
        nil_d: String,
        nil_b: Box<Expr>,
        cons_d: String,
        head: String,
        tail: String,
        rec: String,
        cons_b: Box<Expr>,
    },
    Builtin(Builtin, Vec<Expr>),
    /// `name` stands for `value` inside `body`, resolved where it was
    /// introduced. Only produced by macro expansion.
    Alias { name: String, value: Box<Expr>, body: Box<Expr> },
    Star,
    DiamondStar,
    DiamondTy,
    UnitTy,
    BoolTy,
    NatTy,
    Universe,
    True,
    False,
    Nil,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Whether the expression is syntactically a type former.
    pub fn is_type_former(&self) -> bool {
        match &self.kind {
            ExprKind::Pi { .. }
            | ExprKind::Sigma { .. }
            | ExprKind::DiamondTy
            | ExprKind::UnitTy
            | ExprKind::BoolTy
            | ExprKind::NatTy
            | ExprKind::Universe => true,
            ExprKind::Builtin(Builtin::List | Builtin::Id | Builtin::El, _) => true,
            ExprKind::Builtin(Builtin::R, args) => args.len() == 1 && args[0].is_type_former(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceDecl {
    pub name: String,
    pub sigma: Usage,
    pub ty: Expr,
    pub body: Expr,
    pub span: Span,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SourceModule {
    pub regime: Option<String>,
    pub regime_span: Option<Span>,
    pub debug: Vec<String>,
    pub decls: Vec<SourceDecl>,
}
