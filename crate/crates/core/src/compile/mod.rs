//! Translation of checked runtime terms to machine code, with potentials
//! accumulated construct by construct.
//!
//! Every kernel binder owns one machine slot (erased ones hold a unit
//! dummy), so the layout is a plain map from kernel levels to machine
//! levels. Eliminators only take indices, hence compound operands are
//! let-bound first with `Seq`.

pub mod observe;
pub mod verify;

use serde::Serialize;
use thiserror::Error;

use crate::frontend::{Loaded, LoadedDecl};
use crate::kernel::rterm::RTerm;
use crate::kernel::syntax::{Regime, Term, TypeExpr, Usage};
use crate::machine::MachineExpr;
use crate::potentials::{MonoidKind, Polynomial, Potential};

pub use observe::{decode, encode, fit, parse_literal, sample_input, Observable, ObserveError};
pub use verify::{
    agree_with_kernel, extract_bound, kernel_output, run_and_verify, run_traced, split_args, verify_sweep, BoundReport, Run, VerifyError, VerifyReport, VerifyRow,
};

/// Step counts of the fixed code shapes, per iteration and per setup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RecConstants {
    /// Tag test, recursive call, and its sequencing: paid once per `succ`.
    pub succ: u64,
    /// Entry into the closure plus the tag test on zero.
    pub zero: u64,
    /// Building the recursive closure around the loop.
    pub admin: u64,
}

pub const CONSFREE_REC: RecConstants = RecConstants { succ: 4, zero: 3, admin: 2 };
/// As above plus the unit dummy realising the released diamond.
pub const LFPL_REC: RecConstants = RecConstants { succ: 6, zero: 5, admin: 2 };

pub const NIL_COST: u64 = 5;
pub const CONS_COST: u64 = 5;
pub const MATCH_COST: u64 = 3;
pub const DUP_COST: u64 = 1;
pub const ZERO_L_COST: u64 = 5;
pub const SUCC_L_COST: u64 = 3;

pub fn rec_constants(regime: Regime) -> RecConstants {
    match regime {
        Regime::ConsFree => CONSFREE_REC,
        Regime::Lfpl => LFPL_REC,
    }
}

pub fn monoid_for(regime: Regime) -> MonoidKind {
    match regime {
        Regime::ConsFree => MonoidKind::MaxPoly,
        Regime::Lfpl => MonoidKind::PlusPoly,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("`{0}` is a σ=0 declaration and has no runtime content")]
    Erased(String),
    #[error("no declaration named `{0}`")]
    Missing(String),
    #[error("internal compiler error: {0}")]
    Internal(String),
}

/// A realiser: code plus a potential from the zero-size sub-monoid.
#[derive(Clone, Debug)]
pub struct CompiledProgram {
    pub name: String,
    pub regime: Regime,
    pub kind: MonoidKind,
    pub code: MachineExpr,
    pub potential: Potential,
    /// Number of curried arguments read from the input, one slot each.
    pub input_arity: usize,
    /// Declared type of the whole declaration.
    pub ty: TypeExpr,
    /// The checked kernel term, for agreement checks.
    pub term: Term,
    /// Declared usage of each argument.
    pub input_usages: Vec<Usage>,
}

/// Machine code and the potential paying for it and for every later use of
/// its value.
#[derive(Clone, Debug)]
pub struct Code {
    pub expr: MachineExpr,
    pub pot: Potential,
}

#[derive(Clone, Debug)]
struct Scope {
    /// Machine level of each kernel level.
    layout: Vec<usize>,
    /// Length of the machine environment.
    mlen: usize,
}

impl Scope {
    fn index_of(&self, mlevel: usize) -> usize {
        debug_assert!(mlevel < self.mlen);
        self.mlen - 1 - mlevel
    }

    fn bind(&self, slots: &[usize], mlen: usize) -> Scope {
        let mut layout = self.layout.clone();
        layout.extend_from_slice(slots);
        Scope { layout, mlen }
    }

    fn grow(&self, by: usize) -> Scope {
        Scope { layout: self.layout.clone(), mlen: self.mlen + by }
    }
}

/// A compound operand evaluated into a fresh slot.
struct Bound {
    prefix: Option<Code>,
    mlevel: usize,
}

struct Compiler {
    kind: MonoidKind,
}

impl Compiler {
    fn new(regime: Regime) -> Self {
        Compiler { kind: monoid_for(regime) }
    }

    fn acct(&self, k: u64) -> Potential {
        self.kind.acct(k)
    }

    fn sum(&self, ps: &[&Potential]) -> Potential {
        self.kind.sum(ps.iter().copied())
    }

    fn var_level(&self, i: usize, sc: &Scope) -> Result<usize, CompileError> {
        let k = sc.layout.len();
        if i >= k {
            return Err(CompileError::Internal(format!("variable {} escapes a context of {} binders", i, k)));
        }
        Ok(sc.layout[k - 1 - i])
    }

    /// Places `rt` in a slot: variables are used in place, anything else is
    /// evaluated first.
    fn operand(&self, rt: &RTerm, sc: &mut Scope) -> Result<Bound, CompileError> {
        if let RTerm::Var(i) = rt {
            return Ok(Bound { prefix: None, mlevel: self.var_level(*i, sc)? });
        }
        let code = self.term(rt, sc)?;
        let mlevel = sc.mlen;
        *sc = sc.grow(1);
        Ok(Bound { prefix: Some(code), mlevel })
    }

    /// Wraps `core` in the `Seq`s introducing the operands, innermost last,
    /// and adds their potentials (each scaled by its weight) plus one step per
    /// `Seq`.
    fn sequence(&self, ops: Vec<(Bound, u64)>, core: MachineExpr, local: u64, extra: &[&Potential]) -> Code {
        let mut pot = self.acct(local);
        let mut expr = core;
        for (b, weight) in ops.into_iter().rev() {
            if let Some(c) = b.prefix {
                expr = MachineExpr::seq(c.expr, expr);
                pot = self.sum(&[&pot, &self.acct(1), &c.pot.scale(weight.max(1))]);
            }
        }
        for p in extra {
            pot = self.kind.plus(&pot, p);
        }
        Code { expr, pot }
    }

    fn term(&self, rt: &RTerm, sc: &Scope) -> Result<Code, CompileError> {
        use MachineExpr as M;
        let leaf = |e: M| Ok(Code { expr: e, pot: self.acct(1) });
        match rt {
            RTerm::Var(i) => leaf(M::Var(sc.index_of(self.var_level(*i, sc)?))),
            RTerm::Erased | RTerm::Star => leaf(M::Unit),
            RTerm::True => leaf(M::True),
            RTerm::False => leaf(M::False),
            RTerm::Lam(body) => {
                let inner = sc.bind(&[sc.mlen + 1], sc.mlen + 2);
                let b = self.term(body, &inner)?;
                Ok(Code { expr: M::lam(b.expr), pot: self.kind.plus(&self.acct(1), &b.pot) })
            }
            RTerm::App(f, a, rho) => {
                let mut s = sc.clone();
                let bf = self.operand(f, &mut s)?;
                let ba = self.operand(a, &mut s)?;
                let core = M::App(s.index_of(bf.mlevel), s.index_of(ba.mlevel));
                Ok(self.sequence(vec![(bf, 1), (ba, *rho)], core, 1, &[]))
            }
            RTerm::Pair(a, b, pi) => {
                let mut s = sc.clone();
                let ba = self.operand(a, &mut s)?;
                let bb = self.operand(b, &mut s)?;
                let core = M::MkPair(s.index_of(ba.mlevel), s.index_of(bb.mlevel));
                Ok(self.sequence(vec![(ba, *pi), (bb, 1)], core, 1, &[]))
            }
            RTerm::LetPair(scrut, body) => {
                let mut s = sc.clone();
                let bs = self.operand(scrut, &mut s)?;
                let inner = s.bind(&[s.mlen, s.mlen + 1], s.mlen + 2);
                let b = self.term(body, &inner)?;
                let core = M::let_pair(s.index_of(bs.mlevel), b.expr);
                Ok(self.sequence(vec![(bs, 1)], core, 1, &[&b.pot]))
            }
            // the unit scrutinee carries no information
            RTerm::LetUnit(_, body) => self.term(body, sc),
            RTerm::If(scrut, t, e) => {
                let mut s = sc.clone();
                let bs = self.operand(scrut, &mut s)?;
                let ct = self.term(t, &s)?;
                let ce = self.term(e, &s)?;
                let core = M::if_(s.index_of(bs.mlevel), ct.expr, ce.expr);
                Ok(self.sequence(vec![(bs, 1)], core, 1, &[&ct.pot, &ce.pot]))
            }
            RTerm::Nil => Ok(Code {
                expr: M::seq(M::False, M::seq(M::Unit, M::MkPair(1, 0))),
                pot: self.acct(NIL_COST),
            }),
            RTerm::Cons(h, t) => {
                let mut s = sc.clone();
                let bh = self.operand(h, &mut s)?;
                let bt = self.operand(t, &mut s)?;
                let (ih, it) = (s.index_of(bh.mlevel), s.index_of(bt.mlevel));
                let core = M::seq(M::True, M::seq(M::MkPair(ih + 1, it + 1), M::MkPair(1, 0)));
                Ok(self.sequence(vec![(bh, 1), (bt, 1)], core, CONS_COST, &[]))
            }
            RTerm::MatchList(scrut, nil_b, cons_b) => {
                let mut s = sc.clone();
                let bs = self.operand(scrut, &mut s)?;
                // after the outer LetPair: tag at index 1, payload at 0
                let tagged = s.grow(2);
                let cn = self.term(nil_b, &tagged)?;
                let cells = tagged.bind(&[tagged.mlen, tagged.mlen + 1], tagged.mlen + 2);
                let cc = self.term(cons_b, &cells)?;
                let core = M::let_pair(s.index_of(bs.mlevel), M::if_(1, M::let_pair(0, cc.expr), cn.expr));
                Ok(self.sequence(vec![(bs, 1)], core, MATCH_COST, &[&cn.pot, &cc.pot]))
            }
            RTerm::DupNat(x) => {
                let mut s = sc.clone();
                let bx = self.operand(x, &mut s)?;
                let i = s.index_of(bx.mlevel);
                Ok(self.sequence(vec![(bx, 1)], M::MkPair(i, i), DUP_COST, &[]))
            }
            // the diamond is a unit at runtime; its size was paid at the input
            RTerm::ZeroL(_) => Ok(Code {
                expr: M::seq(M::True, M::seq(M::Unit, M::MkPair(1, 0))),
                pot: self.acct(ZERO_L_COST),
            }),
            RTerm::SuccL(_, m) => {
                let mut s = sc.clone();
                let bm = self.operand(m, &mut s)?;
                let core = M::seq(M::False, M::MkPair(0, s.index_of(bm.mlevel) + 1));
                Ok(self.sequence(vec![(bm, 1)], core, SUCC_L_COST, &[]))
            }
            RTerm::RecNatCF(scrut, z, su) => self.recursor(scrut, z, su, sc, false),
            RTerm::RecNatL(scrut, z, su) => self.recursor(scrut, z, su, sc, true),
        }
    }

    /// `Seq(Lam(BODY), App(0, s+1))` where BODY tests the tag of its argument
    /// and either runs the zero branch or recurses on the predecessor (via
    /// the closure's self slot) and runs the successor branch on the result.
    fn recursor(&self, scrut: &RTerm, z: &RTerm, su: &RTerm, sc: &Scope, lfpl: bool) -> Result<Code, CompileError> {
        use MachineExpr as M;
        let k = if lfpl { LFPL_REC } else { CONSFREE_REC };
        let mut s = sc.clone();
        let bs = self.operand(scrut, &mut s)?;
        let d = s.mlen;
        // inside the closure: captured [0, d), self d, arg d+1, tag d+2,
        // pred d+3, and on the successor path the recursive result d+4
        let (zero, succ) = if lfpl {
            let zs = s.bind(&[d + 4], d + 5);
            let ss = s.bind(&[d + 5, d + 3, d + 4], d + 6);
            let (cz, cs) = (self.term(z, &zs)?, self.term(su, &ss)?);
            (
                Code { expr: M::seq(M::Unit, cz.expr), pot: cz.pot },
                Code { expr: M::seq(M::Unit, cs.expr), pot: cs.pot },
            )
        } else {
            let zs = s.grow(4);
            let ss = s.bind(&[d + 3, d + 4], d + 5);
            (self.term(z, &zs)?, self.term(su, &ss)?)
        };
        let body = M::let_pair(0, M::if_(1, zero.expr, M::seq(M::App(3, 0), succ.expr)));
        let core = M::seq(M::lam(body), M::App(0, s.index_of(bs.mlevel) + 1));
        let per_iter = self.kind.plus(&self.acct(k.succ), &succ.pot).raise();
        let once = self.sum(&[&self.acct(k.zero), &zero.pot]);
        Ok(self.sequence(vec![(bs, 1)], core, k.admin, &[&per_iter, &once]))
    }
}

/// Compiles a checked σ=1 declaration. A curried function of `k` arguments
/// becomes a program reading them from `k` input slots, first argument
/// deepest.
pub fn compile_decl(regime: Regime, d: &LoadedDecl) -> Result<CompiledProgram, CompileError> {
    if d.sigma.as_usage() == 0 {
        return Err(CompileError::Erased(d.name.clone()));
    }
    let c = Compiler::new(regime);
    let mut usages = vec![];
    let mut ty = &d.ty;
    while let TypeExpr::Pi(u, _, b) = ty {
        usages.push(*u);
        ty = b;
    }
    let k = usages.len();
    let mut rt = &d.rt;
    let mut j = 0;
    while let (true, RTerm::Lam(body)) = (j < k, rt) {
        rt = body;
        j += 1;
    }
    let sc = Scope { layout: (0..j).collect(), mlen: k };
    let mut code = c.term(rt, &sc)?;
    if j < k {
        // fewer lambdas than arguments: apply the value to the rest
        code = Code {
            expr: MachineExpr::seq(code.expr, apply_rest(j, k, k)),
            pot: c.sum(&[&code.pot, &c.acct(2 * (k - j) as u64)]),
        };
    }
    if !code.pot.in_submonoid() {
        return Err(CompileError::Internal(format!("program potential {} has nonzero size", code.pot)));
    }
    Ok(CompiledProgram {
        name: d.name.clone(),
        regime,
        kind: c.kind,
        code: code.expr,
        potential: code.pot,
        input_arity: k,
        ty: d.ty.clone(),
        term: d.term.clone(),
        input_usages: usages,
    })
}

/// Applies the value at index 0 to arguments `i..k`, which sit at machine
/// levels `i..k` of an environment of length `m + 1`.
fn apply_rest(i: usize, k: usize, m: usize) -> MachineExpr {
    let app = MachineExpr::App(0, m - i);
    if i + 1 == k {
        app
    } else {
        MachineExpr::seq(app, apply_rest(i + 1, k, m + 1))
    }
}

/// Compiles a declaration of a loaded module, honouring its debug pragmas.
/// `halve_potential` deliberately under-reports the bound.
pub fn compile_named(loaded: &Loaded, name: &str) -> Result<CompiledProgram, CompileError> {
    let d = loaded.get(name).ok_or_else(|| CompileError::Missing(name.to_string()))?;
    let mut p = compile_decl(loaded.regime, d)?;
    if loaded.has_debug("halve_potential") {
        p.potential.poly = Polynomial::new(p.potential.poly.coeffs().iter().map(|c| c / 2).collect());
    }
    Ok(p)
}

/// Compiles a bare runtime term in a context of `ctx_len` machine slots, one
/// per kernel binder.
pub fn compile_open(regime: Regime, rt: &RTerm, ctx_len: usize) -> Result<Code, CompileError> {
    Compiler::new(regime).term(rt, &Scope { layout: (0..ctx_len).collect(), mlen: ctx_len })
}
