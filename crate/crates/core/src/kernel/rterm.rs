//! Runtime skeleton of a checked σ=1 term. Indices refer to the kernel
//! context; erased positions carry no code.

use std::sync::Arc;

use crate::kernel::syntax::Usage;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RTerm {
    Var(usize),
    /// A σ=0 subterm in a runtime position; realised by a unit dummy.
    Erased,
    Lam(Arc<RTerm>),
    /// Function, argument, and the declared usage of the parameter.
    App(Arc<RTerm>, Arc<RTerm>, Usage),
    /// Components and the declared usage of the first one.
    Pair(Arc<RTerm>, Arc<RTerm>, Usage),
    LetPair(Arc<RTerm>, Arc<RTerm>),
    Star,
    LetUnit(Arc<RTerm>, Arc<RTerm>),
    True,
    False,
    If(Arc<RTerm>, Arc<RTerm>, Arc<RTerm>),
    Nil,
    Cons(Arc<RTerm>, Arc<RTerm>),
    MatchList(Arc<RTerm>, Arc<RTerm>, Arc<RTerm>),
    DupNat(Arc<RTerm>),
    RecNatCF(Arc<RTerm>, Arc<RTerm>, Arc<RTerm>),
    ZeroL(Arc<RTerm>),
    SuccL(Arc<RTerm>, Arc<RTerm>),
    RecNatL(Arc<RTerm>, Arc<RTerm>, Arc<RTerm>),
}

impl RTerm {
    pub fn rc(self) -> Arc<RTerm> {
        Arc::new(self)
    }

    /// Number of nodes, for diagnostics and benches.
    pub fn size(&self) -> usize {
        use RTerm::*;
        1 + match self {
            Var(_) | Erased | Star | True | False | Nil => 0,
            Lam(a) | DupNat(a) | ZeroL(a) => a.size(),
            App(a, b, _) | Pair(a, b, _) | LetPair(a, b) | LetUnit(a, b) | Cons(a, b) | SuccL(a, b) => {
                a.size() + b.size()
            }
            If(a, b, c) | MatchList(a, b, c) | RecNatCF(a, b, c) | RecNatL(a, b, c) => a.size() + b.size() + c.size(),
        }
    }
}
