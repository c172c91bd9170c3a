//! Core syntax. Variables are de Bruijn indices; binder arities are fixed
//! per construct (see `Term` variant docs).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub type Usage = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fragment {
    Zero,
    One,
}

impl Fragment {
    pub fn as_usage(self) -> Usage {
        match self {
            Fragment::Zero => 0,
            Fragment::One => 1,
        }
    }

    pub fn from_usage(u: Usage) -> Self {
        if u == 0 {
            Fragment::Zero
        } else {
            Fragment::One
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    ConsFree,
    Lfpl,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::ConsFree => "consfree",
            Regime::Lfpl => "lfpl",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "consfree" => Ok(Regime::ConsFree),
            "lfpl" => Ok(Regime::Lfpl),
            _ => Err(format!("unknown regime `{}` (expected consfree or lfpl)", s)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    /// Codomain binds the argument.
    Pi(Usage, Arc<TypeExpr>, Arc<TypeExpr>),
    /// Second component binds the first.
    Tensor(Usage, Arc<TypeExpr>, Arc<TypeExpr>),
    Unit,
    Bool,
    List(Arc<TypeExpr>),
    Nat,
    Diamond,
    Id(Arc<TypeExpr>, Arc<Term>, Arc<Term>),
    Universe,
    El(Arc<Term>),
    Reflect(Arc<TypeExpr>),
}

pub type Motive = Option<Arc<TypeExpr>>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    Lam(Arc<Term>),
    App(Arc<Term>, Arc<Term>),
    Pair(Arc<Term>, Arc<Term>),
    Fst(Arc<Term>),
    Snd(Arc<Term>),
    /// Body binds both components; motive binds the scrutinee.
    LetPair { scrut: Arc<Term>, body: Arc<Term>, motive: Motive },
    Star,
    LetUnit { scrut: Arc<Term>, body: Arc<Term>, motive: Motive },
    True,
    False,
    If { scrut: Arc<Term>, then_b: Arc<Term>, else_b: Arc<Term>, motive: Motive },
    Nil,
    Cons(Arc<Term>, Arc<Term>),
    /// Cons branch binds head and tail.
    MatchList { scrut: Arc<Term>, nil_b: Arc<Term>, cons_b: Arc<Term>, motive: Motive },
    /// Cons branch binds head, tail, and the recursive result.
    RecList { scrut: Arc<Term>, nil_b: Arc<Term>, cons_b: Arc<Term>, motive: Motive },
    ZeroCF,
    SuccCF(Arc<Term>),
    DupNat(Arc<Term>),
    /// Succ branch binds the predecessor and the recursive result.
    RecNatCF { scrut: Arc<Term>, zero_b: Arc<Term>, succ_b: Arc<Term>, motive: Motive },
    DiamondStar,
    ZeroL(Arc<Term>),
    SuccL(Arc<Term>, Arc<Term>),
    /// Zero branch binds a diamond; succ branch binds diamond, predecessor,
    /// and the recursive result.
    RecNatL { scrut: Arc<Term>, zero_b: Arc<Term>, succ_b: Arc<Term>, motive: Motive },
    Refl(Arc<Term>),
    ReflectIntro(Arc<Term>),
    ReflectElim(Arc<Term>),
    /// A type former used as an inhabitant of the universe.
    Code(Arc<TypeExpr>),
    Ann(Arc<Term>, Arc<TypeExpr>),
}

impl TypeExpr {
    pub fn pi(u: Usage, a: TypeExpr, b: TypeExpr) -> Self {
        TypeExpr::Pi(u, Arc::new(a), Arc::new(b))
    }

    pub fn tensor(u: Usage, a: TypeExpr, b: TypeExpr) -> Self {
        TypeExpr::Tensor(u, Arc::new(a), Arc::new(b))
    }

    pub fn list(a: TypeExpr) -> Self {
        TypeExpr::List(Arc::new(a))
    }

    pub fn el(t: Term) -> Self {
        TypeExpr::El(Arc::new(t))
    }

    /// Whether de Bruijn index `i` occurs free.
    pub fn mentions(&self, i: usize) -> bool {
        match self {
            TypeExpr::Pi(_, a, b) | TypeExpr::Tensor(_, a, b) => a.mentions(i) || b.mentions(i + 1),
            TypeExpr::Unit | TypeExpr::Bool | TypeExpr::Nat | TypeExpr::Diamond | TypeExpr::Universe => false,
            TypeExpr::List(a) | TypeExpr::Reflect(a) => a.mentions(i),
            TypeExpr::Id(a, l, r) => a.mentions(i) || l.mentions(i) || r.mentions(i),
            TypeExpr::El(t) => t.mentions(i),
        }
    }

    /// Adds `by` to every index at or above `cutoff`.
    pub fn shift(&self, cutoff: usize, by: usize) -> TypeExpr {
        let s = |t: &Arc<TypeExpr>, c: usize| Arc::new(t.shift(c, by));
        let st = |t: &Arc<Term>| Arc::new(t.shift(cutoff, by));
        match self {
            TypeExpr::Pi(u, a, b) => TypeExpr::Pi(*u, s(a, cutoff), s(b, cutoff + 1)),
            TypeExpr::Tensor(u, a, b) => TypeExpr::Tensor(*u, s(a, cutoff), s(b, cutoff + 1)),
            TypeExpr::List(a) => TypeExpr::List(s(a, cutoff)),
            TypeExpr::Reflect(a) => TypeExpr::Reflect(s(a, cutoff)),
            TypeExpr::Id(a, l, r) => TypeExpr::Id(s(a, cutoff), st(l), st(r)),
            TypeExpr::El(t) => TypeExpr::El(st(t)),
            other => other.clone(),
        }
    }
}

fn motive_mentions(m: &Motive, i: usize) -> bool {
    m.as_ref().is_some_and(|t| t.mentions(i + 1))
}

impl Term {
    pub fn lam(body: Term) -> Self {
        Term::Lam(Arc::new(body))
    }

    pub fn app(f: Term, a: Term) -> Self {
        Term::App(Arc::new(f), Arc::new(a))
    }

    pub fn pair(a: Term, b: Term) -> Self {
        Term::Pair(Arc::new(a), Arc::new(b))
    }

    pub fn ann(t: Term, ty: TypeExpr) -> Self {
        Term::Ann(Arc::new(t), Arc::new(ty))
    }

    pub fn code(ty: TypeExpr) -> Self {
        Term::Code(Arc::new(ty))
    }

    /// Whether de Bruijn index `i` occurs free.
    pub fn mentions(&self, i: usize) -> bool {
        match self {
            Term::Var(j) => *j == i,
            Term::Lam(b) => b.mentions(i + 1),
            Term::App(a, b) | Term::Pair(a, b) | Term::Cons(a, b) | Term::SuccL(a, b) => {
                a.mentions(i) || b.mentions(i)
            }
            Term::Fst(a)
            | Term::Snd(a)
            | Term::SuccCF(a)
            | Term::DupNat(a)
            | Term::ZeroL(a)
            | Term::Refl(a)
            | Term::ReflectIntro(a)
            | Term::ReflectElim(a) => a.mentions(i),
            Term::LetPair { scrut, body, motive } => {
                scrut.mentions(i) || body.mentions(i + 2) || motive_mentions(motive, i)
            }
            Term::LetUnit { scrut, body, motive } => {
                scrut.mentions(i) || body.mentions(i) || motive_mentions(motive, i)
            }
            Term::If { scrut, then_b, else_b, motive } => {
                scrut.mentions(i) || then_b.mentions(i) || else_b.mentions(i) || motive_mentions(motive, i)
            }
            Term::MatchList { scrut, nil_b, cons_b, motive } => {
                scrut.mentions(i) || nil_b.mentions(i) || cons_b.mentions(i + 2) || motive_mentions(motive, i)
            }
            Term::RecList { scrut, nil_b, cons_b, motive } => {
                scrut.mentions(i) || nil_b.mentions(i) || cons_b.mentions(i + 3) || motive_mentions(motive, i)
            }
            Term::RecNatCF { scrut, zero_b, succ_b, motive } => {
                scrut.mentions(i) || zero_b.mentions(i) || succ_b.mentions(i + 2) || motive_mentions(motive, i)
            }
            Term::RecNatL { scrut, zero_b, succ_b, motive } => {
                scrut.mentions(i)
                    || zero_b.mentions(i + 1)
                    || succ_b.mentions(i + 3)
                    || motive_mentions(motive, i)
            }
            Term::Code(t) => t.mentions(i),
            Term::Ann(t, ty) => t.mentions(i) || ty.mentions(i),
            Term::Star
            | Term::True
            | Term::False
            | Term::Nil
            | Term::ZeroCF
            | Term::DiamondStar => false,
        }
    }

    /// Adds `by` to every index at or above `cutoff`.
    pub fn shift(&self, cutoff: usize, by: usize) -> Term {
        let s = |t: &Arc<Term>, k: usize| Arc::new(t.shift(cutoff + k, by));
        let m = |mo: &Motive| mo.as_ref().map(|t| Arc::new(t.shift(cutoff + 1, by)));
        match self {
            Term::Var(j) => Term::Var(if *j >= cutoff { j + by } else { *j }),
            Term::Lam(b) => Term::Lam(s(b, 1)),
            Term::App(a, b) => Term::App(s(a, 0), s(b, 0)),
            Term::Pair(a, b) => Term::Pair(s(a, 0), s(b, 0)),
            Term::Cons(a, b) => Term::Cons(s(a, 0), s(b, 0)),
            Term::SuccL(a, b) => Term::SuccL(s(a, 0), s(b, 0)),
            Term::Fst(a) => Term::Fst(s(a, 0)),
            Term::Snd(a) => Term::Snd(s(a, 0)),
            Term::SuccCF(a) => Term::SuccCF(s(a, 0)),
            Term::DupNat(a) => Term::DupNat(s(a, 0)),
            Term::ZeroL(a) => Term::ZeroL(s(a, 0)),
            Term::Refl(a) => Term::Refl(s(a, 0)),
            Term::ReflectIntro(a) => Term::ReflectIntro(s(a, 0)),
            Term::ReflectElim(a) => Term::ReflectElim(s(a, 0)),
            Term::LetPair { scrut, body, motive } => {
                Term::LetPair { scrut: s(scrut, 0), body: s(body, 2), motive: m(motive) }
            }
            Term::LetUnit { scrut, body, motive } => {
                Term::LetUnit { scrut: s(scrut, 0), body: s(body, 0), motive: m(motive) }
            }
            Term::If { scrut, then_b, else_b, motive } => Term::If {
                scrut: s(scrut, 0),
                then_b: s(then_b, 0),
                else_b: s(else_b, 0),
                motive: m(motive),
            },
            Term::MatchList { scrut, nil_b, cons_b, motive } => Term::MatchList {
                scrut: s(scrut, 0),
                nil_b: s(nil_b, 0),
                cons_b: s(cons_b, 2),
                motive: m(motive),
            },
            Term::RecList { scrut, nil_b, cons_b, motive } => Term::RecList {
                scrut: s(scrut, 0),
                nil_b: s(nil_b, 0),
                cons_b: s(cons_b, 3),
                motive: m(motive),
            },
            Term::RecNatCF { scrut, zero_b, succ_b, motive } => Term::RecNatCF {
                scrut: s(scrut, 0),
                zero_b: s(zero_b, 0),
                succ_b: s(succ_b, 2),
                motive: m(motive),
            },
            Term::RecNatL { scrut, zero_b, succ_b, motive } => Term::RecNatL {
                scrut: s(scrut, 0),
                zero_b: s(zero_b, 1),
                succ_b: s(succ_b, 3),
                motive: m(motive),
            },
            Term::Code(t) => Term::Code(Arc::new(t.shift(cutoff, by))),
            Term::Ann(t, ty) => Term::Ann(s(t, 0), Arc::new(ty.shift(cutoff, by))),
            other => other.clone(),
        }
    }

    /// Numeral in the given regime's constructors.
    pub fn numeral(regime: Regime, n: u64) -> Term {
        let mut t = match regime {
            Regime::ConsFree => Term::ZeroCF,
            Regime::Lfpl => Term::ZeroL(Arc::new(Term::DiamondStar)),
        };
        for _ in 0..n {
            t = match regime {
                Regime::ConsFree => Term::SuccCF(Arc::new(t)),
                Regime::Lfpl => Term::SuccL(Arc::new(Term::DiamondStar), Arc::new(t)),
            };
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mentions_respects_binders() {
        let t = Term::lam(Term::Var(1));
        assert!(t.mentions(0));
        assert!(!t.mentions(1));
        let ty = TypeExpr::pi(1, TypeExpr::Bool, TypeExpr::el(Term::Var(0)));
        assert!(!ty.mentions(0));
        let ty = TypeExpr::pi(1, TypeExpr::Bool, TypeExpr::el(Term::Var(1)));
        assert!(ty.mentions(0));
    }

    #[test]
    fn shift_skips_bound_variables() {
        let t = Term::lam(Term::app(Term::Var(0), Term::Var(1)));
        assert_eq!(t.shift(0, 2), Term::lam(Term::app(Term::Var(0), Term::Var(3))));
        let r = Term::RecNatL {
            scrut: Arc::new(Term::Var(0)),
            zero_b: Arc::new(Term::Var(1)),
            succ_b: Arc::new(Term::Var(3)),
            motive: None,
        };
        let shifted = Term::RecNatL {
            scrut: Arc::new(Term::Var(1)),
            zero_b: Arc::new(Term::Var(2)),
            succ_b: Arc::new(Term::Var(4)),
            motive: None,
        };
        assert_eq!(r.shift(0, 1), shifted);
    }

    #[test]
    fn numerals() {
        assert_eq!(Term::numeral(Regime::ConsFree, 1), Term::SuccCF(Arc::new(Term::ZeroCF)));
        assert!(matches!(Term::numeral(Regime::Lfpl, 0), Term::ZeroL(_)));
    }
}
