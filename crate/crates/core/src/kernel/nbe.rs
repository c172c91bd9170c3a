//! Normalization by evaluation for the erased (σ=0) equational theory.
//!
//! Values use de Bruijn levels for free variables. Quoting is type-directed so
//! that function and pair η, unit and diamond collapse, and the code/El
//! inverse laws are applied on the way back to syntax.

use std::cell::Cell;
use std::rc::Rc;
use std::sync::Arc;

use crate::diag::{DiagKind, KResult, KernelError};
use crate::kernel::syntax::{Regime, Term, TypeExpr, Usage};

/// Persistent environment; index 0 is the most recent entry.
#[derive(Clone, Default)]
pub struct VEnv(Option<Rc<VNode>>);

struct VNode {
    value: Val,
    rest: VEnv,
    len: usize,
}

impl VEnv {
    pub fn new() -> Self {
        VEnv(None)
    }

    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.len)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn push(&self, v: Val) -> VEnv {
        VEnv(Some(Rc::new(VNode { value: v, rest: self.clone(), len: self.len() + 1 })))
    }

    pub fn get(&self, i: usize) -> Option<&Val> {
        let mut cur = self.0.as_ref()?;
        for _ in 0..i {
            cur = cur.rest.0.as_ref()?;
        }
        Some(&cur.value)
    }

    /// Environment binding levels `0..n` to themselves.
    pub fn identity(n: usize) -> VEnv {
        (0..n).fold(VEnv::new(), |e, l| e.push(Val::var(l)))
    }
}

#[derive(Clone)]
pub struct Closure {
    pub env: VEnv,
    pub body: Arc<Term>,
}

#[derive(Clone)]
pub struct TyClosure {
    pub env: VEnv,
    pub body: Arc<TypeExpr>,
}

#[derive(Clone)]
pub enum Val {
    Lam(Closure),
    Pair(Rc<Val>, Rc<Val>),
    Star,
    True,
    False,
    Nil,
    Cons(Rc<Val>, Rc<Val>),
    Zero,
    Succ(Rc<Val>),
    Refl(Rc<Val>),
    RIntro(Rc<Val>),
    Code(Rc<TyVal>),
    Ne(Rc<Neutral>),
}

#[derive(Clone)]
pub enum Neutral {
    Var(usize),
    App(Rc<Neutral>, Val),
    Fst(Rc<Neutral>),
    Snd(Rc<Neutral>),
    If { scrut: Rc<Neutral>, then_v: Val, else_v: Val, motive: Option<TyClosure> },
    MatchList { scrut: Rc<Neutral>, nil_v: Val, cons: Closure, motive: Option<TyClosure> },
    RecList { scrut: Rc<Neutral>, nil_v: Val, cons: Closure, motive: Option<TyClosure> },
    RecNat { regime: Regime, scrut: Rc<Neutral>, zero: Closure, succ: Closure, motive: Option<TyClosure> },
    RElim(Rc<Neutral>),
}

#[derive(Clone)]
pub enum TyVal {
    Pi(Usage, Rc<TyVal>, TyClosure),
    Tensor(Usage, Rc<TyVal>, TyClosure),
    Unit,
    Bool,
    List(Rc<TyVal>),
    Nat,
    Diamond,
    Id(Rc<TyVal>, Val, Val),
    Universe,
    El(Rc<Neutral>),
    Reflect(Rc<TyVal>),
}

impl Val {
    pub fn var(level: usize) -> Val {
        Val::Ne(Rc::new(Neutral::Var(level)))
    }

    pub fn nat(n: u64) -> Val {
        (0..n).fold(Val::Zero, |v, _| Val::Succ(Rc::new(v)))
    }

    pub fn boolean(b: bool) -> Val {
        if b {
            Val::True
        } else {
            Val::False
        }
    }
}

pub const DEFAULT_FUEL: u64 = 50_000_000;

/// Evaluator with a step budget shared by all calls.
pub struct Nbe {
    pub regime: Regime,
    fuel: Cell<u64>,
}

fn internal(msg: impl Into<String>) -> KernelError {
    KernelError::new("Conv", DiagKind::Internal, msg)
}

impl Nbe {
    pub fn new(regime: Regime) -> Self {
        Nbe::with_fuel(regime, DEFAULT_FUEL)
    }

    pub fn with_fuel(regime: Regime, fuel: u64) -> Self {
        Nbe { regime, fuel: Cell::new(fuel) }
    }

    pub fn fuel_left(&self) -> u64 {
        self.fuel.get()
    }

    fn tick(&self) -> KResult<()> {
        let f = self.fuel.get();
        if f == 0 {
            return Err(KernelError::new("Conv", DiagKind::Fuel, "normalization budget exhausted"));
        }
        self.fuel.set(f - 1);
        Ok(())
    }

    pub fn inst(&self, c: &Closure, vals: &[Val]) -> KResult<Val> {
        let env = vals.iter().fold(c.env.clone(), |e, v| e.push(v.clone()));
        self.eval(&env, &c.body)
    }

    pub fn inst_ty(&self, c: &TyClosure, v: Val) -> KResult<TyVal> {
        self.eval_ty(&c.env.push(v), &c.body)
    }

    pub fn eval(&self, env: &VEnv, t: &Term) -> KResult<Val> {
        self.tick()?;
        let clo = |b: &Arc<Term>| Closure { env: env.clone(), body: b.clone() };
        let mot = |m: &Option<Arc<TypeExpr>>| m.as_ref().map(|b| TyClosure { env: env.clone(), body: b.clone() });
        Ok(match t {
            Term::Var(i) => env
                .get(*i)
                .cloned()
                .ok_or_else(|| internal(format!("unbound index {} during evaluation", i)))?,
            Term::Lam(b) => Val::Lam(clo(b)),
            Term::App(f, a) => {
                let f = self.eval(env, f)?;
                let a = self.eval(env, a)?;
                self.apply(f, a)?
            }
            Term::Pair(a, b) => Val::Pair(Rc::new(self.eval(env, a)?), Rc::new(self.eval(env, b)?)),
            Term::Fst(m) => self.fst(self.eval(env, m)?)?,
            Term::Snd(m) => self.snd(self.eval(env, m)?)?,
            Term::LetPair { scrut, body, .. } => {
                let v = self.eval(env, scrut)?;
                let env2 = env.push(self.fst(v.clone())?).push(self.snd(v)?);
                self.eval(&env2, body)?
            }
            Term::Star | Term::DiamondStar => Val::Star,
            Term::LetUnit { body, .. } => self.eval(env, body)?,
            Term::True => Val::True,
            Term::False => Val::False,
            Term::If { scrut, then_b, else_b, motive } => match self.eval(env, scrut)? {
                Val::True => self.eval(env, then_b)?,
                Val::False => self.eval(env, else_b)?,
                Val::Ne(n) => Val::Ne(Rc::new(Neutral::If {
                    scrut: n,
                    then_v: self.eval(env, then_b)?,
                    else_v: self.eval(env, else_b)?,
                    motive: mot(motive),
                })),
                _ => return Err(internal("if on a non-boolean value")),
            },
            Term::Nil => Val::Nil,
            Term::Cons(h, tl) => Val::Cons(Rc::new(self.eval(env, h)?), Rc::new(self.eval(env, tl)?)),
            Term::MatchList { scrut, nil_b, cons_b, motive } => match self.eval(env, scrut)? {
                Val::Nil => self.eval(env, nil_b)?,
                Val::Cons(h, tl) => self.eval(&env.push((*h).clone()).push((*tl).clone()), cons_b)?,
                Val::Ne(n) => Val::Ne(Rc::new(Neutral::MatchList {
                    scrut: n,
                    nil_v: self.eval(env, nil_b)?,
                    cons: clo(cons_b),
                    motive: mot(motive),
                })),
                _ => return Err(internal("match on a non-list value")),
            },
            Term::RecList { scrut, nil_b, cons_b, motive } => {
                let v = self.eval(env, scrut)?;
                let nil_v = self.eval(env, nil_b)?;
                self.rec_list(v, nil_v, clo(cons_b), mot(motive))?
            }
            Term::ZeroCF | Term::ZeroL(_) => Val::Zero,
            Term::SuccCF(m) | Term::SuccL(_, m) => Val::Succ(Rc::new(self.eval(env, m)?)),
            Term::DupNat(m) => {
                let v = self.eval(env, m)?;
                Val::Pair(Rc::new(v.clone()), Rc::new(v))
            }
            Term::RecNatCF { scrut, zero_b, succ_b, motive } => {
                let v = self.eval(env, scrut)?;
                self.rec_nat(Regime::ConsFree, v, clo(zero_b), clo(succ_b), mot(motive))?
            }
            Term::RecNatL { scrut, zero_b, succ_b, motive } => {
                let v = self.eval(env, scrut)?;
                self.rec_nat(Regime::Lfpl, v, clo(zero_b), clo(succ_b), mot(motive))?
            }
            Term::Refl(m) => Val::Refl(Rc::new(self.eval(env, m)?)),
            Term::ReflectIntro(m) => match self.eval(env, m)? {
                Val::Ne(n) => match &*n {
                    Neutral::RElim(inner) => Val::Ne(inner.clone()),
                    _ => Val::RIntro(Rc::new(Val::Ne(n))),
                },
                v => Val::RIntro(Rc::new(v)),
            },
            Term::ReflectElim(m) => match self.eval(env, m)? {
                Val::RIntro(v) => (*v).clone(),
                Val::Ne(n) => Val::Ne(Rc::new(Neutral::RElim(n))),
                _ => return Err(internal("reflection elimination on a non-reflected value")),
            },
            Term::Code(ty) => match self.eval_ty(env, ty)? {
                TyVal::El(n) => Val::Ne(n),
                tv => Val::Code(Rc::new(tv)),
            },
            Term::Ann(t, _) => self.eval(env, t)?,
        })
    }

    pub fn apply(&self, f: Val, a: Val) -> KResult<Val> {
        match f {
            Val::Lam(c) => self.inst(&c, &[a]),
            Val::Ne(n) => Ok(Val::Ne(Rc::new(Neutral::App(n, a)))),
            _ => Err(internal("application of a non-function value")),
        }
    }

    pub fn fst(&self, v: Val) -> KResult<Val> {
        match v {
            Val::Pair(a, _) => Ok((*a).clone()),
            Val::Ne(n) => Ok(Val::Ne(Rc::new(Neutral::Fst(n)))),
            _ => Err(internal("projection from a non-pair value")),
        }
    }

    pub fn snd(&self, v: Val) -> KResult<Val> {
        match v {
            Val::Pair(_, b) => Ok((*b).clone()),
            Val::Ne(n) => Ok(Val::Ne(Rc::new(Neutral::Snd(n)))),
            _ => Err(internal("projection from a non-pair value")),
        }
    }

    fn rec_list(&self, v: Val, nil_v: Val, cons: Closure, motive: Option<TyClosure>) -> KResult<Val> {
        let mut spine = Vec::new();
        let mut cur = v;
        let mut acc = loop {
            match cur {
                Val::Nil => break nil_v,
                Val::Cons(h, t) => {
                    let next = (*t).clone();
                    spine.push((h, t));
                    cur = next;
                }
                Val::Ne(n) => {
                    break Val::Ne(Rc::new(Neutral::RecList {
                        scrut: n,
                        nil_v,
                        cons: cons.clone(),
                        motive: motive.clone(),
                    }))
                }
                _ => return Err(internal("list recursion on a non-list value")),
            }
        };
        while let Some((h, t)) = spine.pop() {
            acc = self.inst(&cons, &[(*h).clone(), (*t).clone(), acc])?;
        }
        Ok(acc)
    }

    fn rec_nat(
        &self,
        regime: Regime,
        v: Val,
        zero: Closure,
        succ: Closure,
        motive: Option<TyClosure>,
    ) -> KResult<Val> {
        let mut preds = Vec::new();
        let mut cur = v;
        let mut acc = loop {
            match cur {
                Val::Zero => {
                    break match regime {
                        Regime::ConsFree => self.inst(&zero, &[])?,
                        Regime::Lfpl => self.inst(&zero, &[Val::Star])?,
                    }
                }
                Val::Succ(p) => {
                    let next = (*p).clone();
                    preds.push(p);
                    cur = next;
                }
                Val::Ne(n) => {
                    break Val::Ne(Rc::new(Neutral::RecNat {
                        regime,
                        scrut: n,
                        zero: zero.clone(),
                        succ: succ.clone(),
                        motive: motive.clone(),
                    }))
                }
                _ => return Err(internal("natural recursion on a non-natural value")),
            }
        };
        while let Some(p) = preds.pop() {
            acc = match regime {
                Regime::ConsFree => self.inst(&succ, &[(*p).clone(), acc])?,
                Regime::Lfpl => self.inst(&succ, &[Val::Star, (*p).clone(), acc])?,
            };
        }
        Ok(acc)
    }

    pub fn eval_ty(&self, env: &VEnv, ty: &TypeExpr) -> KResult<TyVal> {
        self.tick()?;
        let clo = |b: &Arc<TypeExpr>| TyClosure { env: env.clone(), body: b.clone() };
        Ok(match ty {
            TypeExpr::Pi(u, a, b) => TyVal::Pi(*u, Rc::new(self.eval_ty(env, a)?), clo(b)),
            TypeExpr::Tensor(u, a, b) => TyVal::Tensor(*u, Rc::new(self.eval_ty(env, a)?), clo(b)),
            TypeExpr::Unit => TyVal::Unit,
            TypeExpr::Bool => TyVal::Bool,
            TypeExpr::List(a) => TyVal::List(Rc::new(self.eval_ty(env, a)?)),
            TypeExpr::Nat => TyVal::Nat,
            TypeExpr::Diamond => TyVal::Diamond,
            TypeExpr::Id(a, l, r) => TyVal::Id(Rc::new(self.eval_ty(env, a)?), self.eval(env, l)?, self.eval(env, r)?),
            TypeExpr::Universe => TyVal::Universe,
            TypeExpr::El(t) => match self.eval(env, t)? {
                Val::Code(tv) => (*tv).clone(),
                Val::Ne(n) => TyVal::El(n),
                _ => return Err(internal("El of a value that is not a code")),
            },
            TypeExpr::Reflect(a) => TyVal::Reflect(Rc::new(self.eval_ty(env, a)?)),
        })
    }

    /// Reads a value back to a normal form at type `ty`. `tys[l]` is the
    /// type of the variable at level `l`.
    pub fn quote(&self, tys: &mut Vec<TyVal>, v: &Val, ty: &TyVal) -> KResult<Term> {
        self.tick()?;
        let len = tys.len();
        Ok(match ty {
            TyVal::Pi(_, a, b) => {
                let x = Val::var(len);
                let body = self.apply(v.clone(), x.clone())?;
                let cod = self.inst_ty(b, x)?;
                tys.push((**a).clone());
                let r = self.quote(tys, &body, &cod);
                tys.pop();
                Term::Lam(Arc::new(r?))
            }
            TyVal::Tensor(_, a, b) => {
                let f = self.fst(v.clone())?;
                let s = self.snd(v.clone())?;
                let bt = self.inst_ty(b, f.clone())?;
                Term::Pair(Arc::new(self.quote(tys, &f, a)?), Arc::new(self.quote(tys, &s, &bt)?))
            }
            TyVal::Unit => Term::Star,
            TyVal::Diamond => Term::DiamondStar,
            TyVal::Nat => {
                let mut depth = 0u64;
                let mut cur = v.clone();
                let base = loop {
                    match cur {
                        Val::Zero => break Term::numeral(self.regime, 0),
                        Val::Succ(p) => {
                            depth += 1;
                            cur = (*p).clone();
                        }
                        Val::Ne(n) => break self.quote_ne(tys, &n)?.0,
                        _ => return Err(internal("ill-typed value at Nat")),
                    }
                };
                (0..depth).fold(base, |t, _| match self.regime {
                    Regime::ConsFree => Term::SuccCF(Arc::new(t)),
                    Regime::Lfpl => Term::SuccL(Arc::new(Term::DiamondStar), Arc::new(t)),
                })
            }
            TyVal::List(a) => match v {
                Val::Nil => Term::Nil,
                Val::Cons(h, t) => Term::Cons(Arc::new(self.quote(tys, h, a)?), Arc::new(self.quote(tys, t, ty)?)),
                Val::Ne(n) => self.quote_ne(tys, n)?.0,
                _ => return Err(internal("ill-typed value at List")),
            },
            TyVal::Id(a, _, _) => match v {
                Val::Refl(x) => Term::Refl(Arc::new(self.quote(tys, x, a)?)),
                Val::Ne(n) => self.quote_ne(tys, n)?.0,
                _ => return Err(internal("ill-typed value at an identity type")),
            },
            TyVal::Universe => match v {
                Val::Code(tv) => Term::Code(Arc::new(self.quote_ty(tys, tv)?)),
                Val::Ne(n) => self.quote_ne(tys, n)?.0,
                _ => return Err(internal("ill-typed value at U")),
            },
            TyVal::Reflect(a) => match v {
                Val::RIntro(x) => Term::ReflectIntro(Arc::new(self.quote(tys, x, a)?)),
                Val::Ne(n) => self.quote_ne(tys, n)?.0,
                _ => return Err(internal("ill-typed value at a reflection type")),
            },
            TyVal::Bool | TyVal::El(_) => match v {
                Val::True => Term::True,
                Val::False => Term::False,
                Val::Ne(n) => self.quote_ne(tys, n)?.0,
                _ => return Err(internal("ill-typed value at Bool or El")),
            },
        })
    }

    fn quote_motive(&self, tys: &mut Vec<TyVal>, m: &Option<TyClosure>, dom: TyVal) -> KResult<(Arc<TypeExpr>, TyClosure)> {
        let m = m
            .clone()
            .ok_or_else(|| KernelError::new("Conv", DiagKind::Motive, "stuck eliminator without a motive"))?;
        let x = Val::var(tys.len());
        let body = self.inst_ty(&m, x)?;
        tys.push(dom);
        let r = self.quote_ty(tys, &body);
        tys.pop();
        Ok((Arc::new(r?), m))
    }

    fn quote_under(&self, tys: &mut Vec<TyVal>, binders: Vec<TyVal>, c: &Closure, ty_of: impl FnOnce(&[Val]) -> KResult<TyVal>) -> KResult<Term> {
        let base = tys.len();
        let vars: Vec<Val> = (0..binders.len()).map(|k| Val::var(base + k)).collect();
        let v = self.inst(c, &vars)?;
        let ty = ty_of(&vars)?;
        tys.extend(binders);
        let r = self.quote(tys, &v, &ty);
        tys.truncate(base);
        r
    }

    pub fn quote_ne(&self, tys: &mut Vec<TyVal>, n: &Rc<Neutral>) -> KResult<(Term, TyVal)> {
        self.tick()?;
        let len = tys.len();
        match &**n {
            Neutral::Var(l) => {
                let ty = tys.get(*l).cloned().ok_or_else(|| internal(format!("unknown level {}", l)))?;
                Ok((Term::Var(len - 1 - l), ty))
            }
            Neutral::App(f, a) => match self.quote_ne(tys, f)? {
                (ft, TyVal::Pi(_, dom, cod)) => {
                    let at = self.quote(tys, a, &dom)?;
                    Ok((Term::App(Arc::new(ft), Arc::new(at)), self.inst_ty(&cod, a.clone())?))
                }
                _ => Err(internal("stuck application at a non-function type")),
            },
            Neutral::Fst(p) => match self.quote_ne(tys, p)? {
                (pt, TyVal::Tensor(_, a, _)) => Ok((Term::Fst(Arc::new(pt)), (*a).clone())),
                _ => Err(internal("stuck projection at a non-pair type")),
            },
            Neutral::Snd(p) => match self.quote_ne(tys, p)? {
                (pt, TyVal::Tensor(_, _, b)) => {
                    let f = Val::Ne(Rc::new(Neutral::Fst(p.clone())));
                    Ok((Term::Snd(Arc::new(pt)), self.inst_ty(&b, f)?))
                }
                _ => Err(internal("stuck projection at a non-pair type")),
            },
            Neutral::If { scrut, then_v, else_v, motive } => {
                let (st, _) = self.quote_ne(tys, scrut)?;
                let (mt, m) = self.quote_motive(tys, motive, TyVal::Bool)?;
                let tt = self.quote(tys, then_v, &self.inst_ty(&m, Val::True)?)?;
                let et = self.quote(tys, else_v, &self.inst_ty(&m, Val::False)?)?;
                let ty = self.inst_ty(&m, Val::Ne(scrut.clone()))?;
                Ok((
                    Term::If { scrut: Arc::new(st), then_b: Arc::new(tt), else_b: Arc::new(et), motive: Some(mt) },
                    ty,
                ))
            }
            Neutral::MatchList { scrut, nil_v, cons, motive } => {
                let (st, sty) = self.quote_ne(tys, scrut)?;
                let TyVal::List(elem) = sty.clone() else {
                    return Err(internal("stuck match at a non-list type"));
                };
                let (mt, m) = self.quote_motive(tys, motive, sty.clone())?;
                let nt = self.quote(tys, nil_v, &self.inst_ty(&m, Val::Nil)?)?;
                let ct = self.quote_under(tys, vec![(*elem).clone(), sty], cons, |xs| {
                    self.inst_ty(&m, Val::Cons(Rc::new(xs[0].clone()), Rc::new(xs[1].clone())))
                })?;
                let ty = self.inst_ty(&m, Val::Ne(scrut.clone()))?;
                Ok((
                    Term::MatchList { scrut: Arc::new(st), nil_b: Arc::new(nt), cons_b: Arc::new(ct), motive: Some(mt) },
                    ty,
                ))
            }
            Neutral::RecList { scrut, nil_v, cons, motive } => {
                let (st, sty) = self.quote_ne(tys, scrut)?;
                let TyVal::List(elem) = sty.clone() else {
                    return Err(internal("stuck list recursion at a non-list type"));
                };
                let (mt, m) = self.quote_motive(tys, motive, sty.clone())?;
                let nt = self.quote(tys, nil_v, &self.inst_ty(&m, Val::Nil)?)?;
                let tail_level = len + 1;
                let p_ty = self.inst_ty(&m, Val::var(tail_level))?;
                let ct = self.quote_under(tys, vec![(*elem).clone(), sty, p_ty], cons, |xs| {
                    self.inst_ty(&m, Val::Cons(Rc::new(xs[0].clone()), Rc::new(xs[1].clone())))
                })?;
                let ty = self.inst_ty(&m, Val::Ne(scrut.clone()))?;
                Ok((
                    Term::RecList { scrut: Arc::new(st), nil_b: Arc::new(nt), cons_b: Arc::new(ct), motive: Some(mt) },
                    ty,
                ))
            }
            Neutral::RecNat { regime, scrut, zero, succ, motive } => {
                let (st, _) = self.quote_ne(tys, scrut)?;
                let (mt, m) = self.quote_motive(tys, motive, TyVal::Nat)?;
                let zero_ty = self.inst_ty(&m, Val::Zero)?;
                let term = match regime {
                    Regime::ConsFree => {
                        let zt = self.quote_under(tys, vec![], zero, |_| Ok(zero_ty.clone()))?;
                        let p_ty = self.inst_ty(&m, Val::var(len))?;
                        let st2 = self.quote_under(tys, vec![TyVal::Nat, p_ty], succ, |xs| {
                            self.inst_ty(&m, Val::Succ(Rc::new(xs[0].clone())))
                        })?;
                        Term::RecNatCF { scrut: Arc::new(st), zero_b: Arc::new(zt), succ_b: Arc::new(st2), motive: Some(mt) }
                    }
                    Regime::Lfpl => {
                        let zt = self.quote_under(tys, vec![TyVal::Diamond], zero, |_| Ok(zero_ty.clone()))?;
                        let p_ty = self.inst_ty(&m, Val::var(len + 1))?;
                        let st2 = self.quote_under(tys, vec![TyVal::Diamond, TyVal::Nat, p_ty], succ, |xs| {
                            self.inst_ty(&m, Val::Succ(Rc::new(xs[1].clone())))
                        })?;
                        Term::RecNatL { scrut: Arc::new(st), zero_b: Arc::new(zt), succ_b: Arc::new(st2), motive: Some(mt) }
                    }
                };
                Ok((term, self.inst_ty(&m, Val::Ne(scrut.clone()))?))
            }
            Neutral::RElim(m) => match self.quote_ne(tys, m)? {
                (mt, TyVal::Reflect(a)) => Ok((Term::ReflectElim(Arc::new(mt)), (*a).clone())),
                _ => Err(internal("stuck reflection elimination at a non-reflection type")),
            },
        }
    }

    pub fn quote_ty(&self, tys: &mut Vec<TyVal>, ty: &TyVal) -> KResult<TypeExpr> {
        self.tick()?;
        let len = tys.len();
        Ok(match ty {
            TyVal::Pi(u, a, b) | TyVal::Tensor(u, a, b) => {
                let at = self.quote_ty(tys, a)?;
                let bv = self.inst_ty(b, Val::var(len))?;
                tys.push((**a).clone());
                let bt = self.quote_ty(tys, &bv);
                tys.pop();
                let (at, bt) = (Arc::new(at), Arc::new(bt?));
                if matches!(ty, TyVal::Pi(..)) {
                    TypeExpr::Pi(*u, at, bt)
                } else {
                    TypeExpr::Tensor(*u, at, bt)
                }
            }
            TyVal::Unit => TypeExpr::Unit,
            TyVal::Bool => TypeExpr::Bool,
            TyVal::List(a) => TypeExpr::List(Arc::new(self.quote_ty(tys, a)?)),
            TyVal::Nat => TypeExpr::Nat,
            TyVal::Diamond => TypeExpr::Diamond,
            TyVal::Id(a, l, r) => {
                TypeExpr::Id(Arc::new(self.quote_ty(tys, a)?), Arc::new(self.quote(tys, l, a)?), Arc::new(self.quote(tys, r, a)?))
            }
            TyVal::Universe => TypeExpr::Universe,
            TyVal::El(n) => TypeExpr::El(Arc::new(self.quote_ne(tys, n)?.0)),
            TyVal::Reflect(a) => TypeExpr::Reflect(Arc::new(self.quote_ty(tys, a)?)),
        })
    }

    pub fn conv_ty(&self, tys: &mut Vec<TyVal>, a: &TyVal, b: &TyVal) -> KResult<bool> {
        Ok(self.quote_ty(tys, a)? == self.quote_ty(tys, b)?)
    }

    pub fn conv_val(&self, tys: &mut Vec<TyVal>, a: &Val, b: &Val, ty: &TyVal) -> KResult<bool> {
        Ok(self.quote(tys, a, ty)? == self.quote(tys, b, ty)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nf(regime: Regime, t: &Term, ty: &TypeExpr) -> Term {
        let nbe = Nbe::new(regime);
        let v = nbe.eval(&VEnv::new(), t).unwrap();
        let tv = nbe.eval_ty(&VEnv::new(), ty).unwrap();
        nbe.quote(&mut Vec::new(), &v, &tv).unwrap()
    }

    fn a(t: Term) -> Arc<Term> {
        Arc::new(t)
    }

    #[test]
    fn if_true_reduces_to_then_branch() {
        let t = Term::If { scrut: a(Term::True), then_b: a(Term::False), else_b: a(Term::True), motive: None };
        assert_eq!(nf(Regime::ConsFree, &t, &TypeExpr::Bool), Term::False);
    }

    #[test]
    fn functions_are_eta_expanded() {
        // f : Bool -> Bool |- f  quotes as \x. f x
        let nbe = Nbe::new(Regime::ConsFree);
        let fty = nbe.eval_ty(&VEnv::new(), &TypeExpr::pi(1, TypeExpr::Bool, TypeExpr::Bool)).unwrap();
        let mut tys = vec![fty.clone()];
        let q = nbe.quote(&mut tys, &Val::var(0), &fty).unwrap();
        assert_eq!(q, Term::lam(Term::app(Term::Var(1), Term::Var(0))));
    }

    #[test]
    fn unit_and_diamond_collapse() {
        let nbe = Nbe::new(Regime::Lfpl);
        let mut tys = vec![TyVal::Diamond, TyVal::Unit];
        assert_eq!(nbe.quote(&mut tys, &Val::var(0), &TyVal::Diamond).unwrap(), Term::DiamondStar);
        assert_eq!(nbe.quote(&mut tys, &Val::var(1), &TyVal::Unit).unwrap(), Term::Star);
    }

    #[test]
    fn dup_is_a_pair_of_copies() {
        let nbe = Nbe::new(Regime::ConsFree);
        let t = Term::Fst(a(Term::DupNat(a(Term::Var(0)))));
        let mut tys = vec![TyVal::Nat];
        let v = nbe.eval(&VEnv::identity(1), &t).unwrap();
        assert_eq!(nbe.quote(&mut tys, &v, &TyVal::Nat).unwrap(), Term::Var(0));
    }

    /// Independent reading of the two recursion equations on closed numerals.
    fn small_step_add(m: u64, n: u64) -> u64 {
        if m == 0 {
            n
        } else {
            1 + small_step_add(m - 1, n)
        }
    }

    #[test]
    fn consfree_recursion_beta() {
        for (m, n) in [(0, 0), (1, 0), (2, 3), (5, 4)] {
            // rec m with zero => n | succ k p => succ(p)
            let t = Term::RecNatCF {
                scrut: a(Term::numeral(Regime::ConsFree, m)),
                zero_b: a(Term::numeral(Regime::ConsFree, n)),
                succ_b: a(Term::SuccCF(a(Term::Var(0)))),
                motive: Some(Arc::new(TypeExpr::Nat)),
            };
            assert_eq!(nf(Regime::ConsFree, &t, &TypeExpr::Nat), Term::numeral(Regime::ConsFree, small_step_add(m, n)));
        }
    }

    #[test]
    fn lfpl_recursion_beta_computes_types() {
        // rec succ(*, zero(*)) return _. U with zero d => Bool | succ d n p => Nat
        let t = Term::RecNatL {
            scrut: a(Term::numeral(Regime::Lfpl, 1)),
            zero_b: a(Term::code(TypeExpr::Bool)),
            succ_b: a(Term::code(TypeExpr::Nat)),
            motive: Some(Arc::new(TypeExpr::Universe)),
        };
        assert_eq!(nf(Regime::Lfpl, &t, &TypeExpr::Universe), Term::code(TypeExpr::Nat));
    }

    #[test]
    fn reflection_inverse_laws() {
        let nbe = Nbe::new(Regime::ConsFree);
        let rty = TyVal::Reflect(Rc::new(TyVal::Bool));
        let mut tys = vec![rty.clone()];
        let t = Term::ReflectIntro(a(Term::ReflectElim(a(Term::Var(0)))));
        let v = nbe.eval(&VEnv::identity(1), &t).unwrap();
        assert_eq!(nbe.quote(&mut tys, &v, &rty).unwrap(), Term::Var(0));
        let t = Term::ReflectElim(a(Term::ReflectIntro(a(Term::True))));
        assert_eq!(nf(Regime::ConsFree, &t, &TypeExpr::Bool), Term::True);
    }

    #[test]
    fn stuck_if_keeps_motive() {
        let nbe = Nbe::new(Regime::ConsFree);
        let t = Term::If {
            scrut: a(Term::Var(0)),
            then_b: a(Term::False),
            else_b: a(Term::True),
            motive: Some(Arc::new(TypeExpr::Bool)),
        };
        let v = nbe.eval(&VEnv::identity(1), &t).unwrap();
        let q = nbe.quote(&mut vec![TyVal::Bool], &v, &TyVal::Bool).unwrap();
        assert_eq!(q, t);
    }

    #[test]
    fn fuel_exhaustion_is_reported() {
        let nbe = Nbe::with_fuel(Regime::ConsFree, 3);
        let t = Term::numeral(Regime::ConsFree, 10);
        let err = nbe.eval(&VEnv::new(), &t).err().unwrap();
        assert_eq!(err.kind, DiagKind::Fuel);
    }
}
