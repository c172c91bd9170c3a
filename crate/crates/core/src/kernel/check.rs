//! Bidirectional, elaborating type and usage checker.
//!
//! Checking a term returns the minimal usage vector over the current
//! context, the term with every eliminator motive filled in, and its runtime
//! skeleton. Declared binder annotations are compared against inferred usage
//! when the binder is popped.

use std::sync::Arc;

use crate::diag::{DiagKind, KResult, KernelError};
use crate::frontend::pretty::{pretty_term, pretty_type};
use crate::kernel::nbe::{Nbe, TyClosure, TyVal, VEnv, Val};
use crate::kernel::rterm::RTerm;
use crate::kernel::syntax::{Fragment, Motive, Regime, Term, TypeExpr, Usage};

pub type UsageVector = Vec<Usage>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtxEntry {
    pub name: String,
    pub usage: Usage,
    pub ty: TypeExpr,
}

/// Declared context, outermost entry first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    pub entries: Vec<CtxEntry>,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn with(mut self, name: &str, usage: Usage, ty: TypeExpr) -> Self {
        self.entries.push(CtxEntry { name: name.to_string(), usage, ty });
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn ctx_zero(g: &Context) -> Context {
    Context { entries: g.entries.iter().map(|e| CtxEntry { usage: 0, ..e.clone() }).collect() }
}

pub fn usage_add(a: &[Usage], b: &[Usage]) -> UsageVector {
    assert_eq!(a.len(), b.len(), "usage vectors of different lengths");
    a.iter().zip(b).map(|(x, y)| x.saturating_add(*y)).collect()
}

pub fn usage_scale(k: Usage, u: &[Usage]) -> UsageVector {
    u.iter().map(|x| x.saturating_mul(k)).collect()
}

fn usage_max(a: &[Usage], b: &[Usage]) -> UsageVector {
    assert_eq!(a.len(), b.len(), "usage vectors of different lengths");
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

/// Result of checking one term.
#[derive(Clone, Debug)]
pub struct Checked {
    pub usage: UsageVector,
    pub term: Term,
    pub rt: RTerm,
}

/// A checked closed declaration.
#[derive(Clone, Debug)]
pub struct CheckedDecl {
    pub sigma: Fragment,
    pub ty: TypeExpr,
    pub term: Term,
    pub rt: RTerm,
}

fn err(rule: &'static str, kind: DiagKind, msg: impl Into<String>) -> KernelError {
    KernelError::new(rule, kind, msg)
}

fn var_name(level: usize) -> String {
    format!("v{}", level)
}

struct Binder {
    name: String,
    declared: Usage,
    ty: TyVal,
}

pub struct Checker {
    pub regime: Regime,
    pub nbe: Nbe,
    names: Vec<String>,
    declared: Vec<Usage>,
    tys: Vec<TyVal>,
}

impl Checker {
    pub fn new(regime: Regime) -> Self {
        Checker { regime, nbe: Nbe::new(regime), names: Vec::new(), declared: Vec::new(), tys: Vec::new() }
    }

    pub fn with_fuel(regime: Regime, fuel: u64) -> Self {
        Checker { nbe: Nbe::with_fuel(regime, fuel), ..Checker::new(regime) }
    }

    /// Extends the checker with a declared context, checking each entry's
    /// type in the zeroed prefix.
    pub fn with_context(regime: Regime, g: &Context) -> KResult<Self> {
        let mut c = Checker::new(regime);
        for e in &g.entries {
            let ty = c.check_type(&e.ty)?;
            let tv = c.eval_ty(&ty)?;
            c.push(e.name.clone(), e.usage, tv);
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.tys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tys.is_empty()
    }

    fn push(&mut self, name: String, declared: Usage, ty: TyVal) {
        self.names.push(name);
        self.declared.push(declared);
        self.tys.push(ty);
    }

    fn pop(&mut self) {
        self.names.pop();
        self.declared.pop();
        self.tys.pop();
    }

    fn env(&self) -> VEnv {
        VEnv::identity(self.len())
    }

    pub fn eval(&self, t: &Term) -> KResult<Val> {
        self.nbe.eval(&self.env(), t)
    }

    pub fn eval_ty(&self, t: &TypeExpr) -> KResult<TyVal> {
        self.nbe.eval_ty(&self.env(), t)
    }

    pub fn quote_ty(&self, tv: &TyVal) -> KResult<TypeExpr> {
        self.nbe.quote_ty(&mut self.tys.clone(), tv)
    }

    pub fn quote(&self, v: &Val, tv: &TyVal) -> KResult<Term> {
        self.nbe.quote(&mut self.tys.clone(), v, tv)
    }

    fn show_ty(&self, tv: &TyVal) -> String {
        match self.quote_ty(tv) {
            Ok(t) => pretty_type(&t, self.len()),
            Err(_) => "<type>".to_string(),
        }
    }

    fn zeros(&self) -> UsageVector {
        vec![0; self.len()]
    }

    fn conv(&self, expected: &TyVal, got: &TyVal) -> KResult<()> {
        if self.nbe.conv_ty(&mut self.tys.clone(), expected, got)? {
            Ok(())
        } else {
            Err(err(
                "Conv",
                DiagKind::Conversion,
                format!("type mismatch: expected {}, found {}", self.show_ty(expected), self.show_ty(got)),
            ))
        }
    }

    /// Runs `f` under binders without usage tracking (type formation).
    fn bind0<T>(&mut self, ty: TyVal, f: impl FnOnce(&mut Self) -> KResult<T>) -> KResult<T> {
        self.push(var_name(self.len()), 0, ty);
        let r = f(self);
        self.pop();
        r
    }

    /// Runs `f` under `binders`, then checks and strips their usage.
    fn under(
        &mut self,
        rule: &'static str,
        binders: Vec<Binder>,
        f: impl FnOnce(&mut Self) -> KResult<Checked>,
    ) -> KResult<Checked> {
        let k = binders.len();
        for b in binders {
            self.push(b.name, b.declared, b.ty);
        }
        let r = f(self);
        let mut out = match r {
            Ok(o) => o,
            Err(e) => {
                for _ in 0..k {
                    self.pop();
                }
                return Err(e);
            }
        };
        let mut fail = None;
        for _ in 0..k {
            let used = out.usage.pop().unwrap_or(0);
            let declared = *self.declared.last().unwrap();
            if used > declared && fail.is_none() {
                fail = Some(err(
                    rule,
                    DiagKind::Usage,
                    format!(
                        "variable `{}` is used {} time(s) at runtime but declared with usage {}",
                        self.names.last().unwrap(),
                        used,
                        declared
                    ),
                ));
            }
            self.pop();
        }
        match fail {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    fn binder(&self, offset: usize, declared: Usage, ty: TyVal) -> Binder {
        Binder { name: var_name(self.len() + offset), declared, ty }
    }

    fn require_regime(&self, rule: &'static str, want: Regime, what: &str) -> KResult<()> {
        if self.regime == want {
            Ok(())
        } else {
            Err(err(
                rule,
                DiagKind::Regime,
                format!("{} is only available in the {} regime (current: {})", what, want.name(), self.regime.name()),
            ))
        }
    }

    fn require_zero(&self, rule: &'static str, s: Fragment, what: &str) -> KResult<()> {
        if s == Fragment::Zero {
            Ok(())
        } else {
            Err(err(rule, DiagKind::Fragment, format!("{} is only usable in the σ=0 fragment", what)))
        }
    }

    fn closed_branch(&self, rule: &'static str, out: &Checked) -> KResult<()> {
        match out.usage.iter().position(|u| *u > 0) {
            None => Ok(()),
            Some(l) => Err(err(
                rule,
                DiagKind::Usage,
                format!("recursion branches may not use outer variable `{}` at runtime", self.names[l]),
            )),
        }
    }

    // ---- type formation ----

    /// Checks a type in the zeroed context and returns its elaboration.
    pub fn check_type(&mut self, ty: &TypeExpr) -> KResult<TypeExpr> {
        Ok(match ty {
            TypeExpr::Pi(u, a, b) | TypeExpr::Tensor(u, a, b) => {
                let a2 = self.check_type(a)?;
                let av = self.eval_ty(&a2)?;
                let b2 = self.bind0(av, |c| c.check_type(b))?;
                if matches!(ty, TypeExpr::Pi(..)) {
                    TypeExpr::Pi(*u, Arc::new(a2), Arc::new(b2))
                } else {
                    TypeExpr::Tensor(*u, Arc::new(a2), Arc::new(b2))
                }
            }
            TypeExpr::Unit | TypeExpr::Bool | TypeExpr::Nat | TypeExpr::Universe => ty.clone(),
            TypeExpr::Diamond => {
                self.require_regime("Ty-Diamond", Regime::Lfpl, "the diamond type")?;
                ty.clone()
            }
            TypeExpr::List(a) => TypeExpr::List(Arc::new(self.check_type(a)?)),
            TypeExpr::Id(a, l, r) => {
                let a2 = self.check_type(a)?;
                let av = self.eval_ty(&a2)?;
                let l2 = self.check(Fragment::Zero, l, &av)?.term;
                let r2 = self.check(Fragment::Zero, r, &av)?.term;
                TypeExpr::Id(Arc::new(a2), Arc::new(l2), Arc::new(r2))
            }
            TypeExpr::El(t) => TypeExpr::El(Arc::new(self.check(Fragment::Zero, t, &TyVal::Universe)?.term)),
            TypeExpr::Reflect(a) => TypeExpr::Reflect(Arc::new(self.check_type(a)?)),
        })
    }

    /// Type formers usable as inhabitants of the universe: everything but
    /// the universe itself.
    fn check_code(&mut self, ty: &TypeExpr) -> KResult<TypeExpr> {
        Ok(match ty {
            TypeExpr::Universe => return Err(err("Tm-U", DiagKind::Annotation, "the universe has no code in itself")),
            TypeExpr::Pi(u, a, b) | TypeExpr::Tensor(u, a, b) => {
                let a2 = self.check_code(a)?;
                let av = self.eval_ty(&a2)?;
                let b2 = self.bind0(av, |c| c.check_code(b))?;
                if matches!(ty, TypeExpr::Pi(..)) {
                    TypeExpr::Pi(*u, Arc::new(a2), Arc::new(b2))
                } else {
                    TypeExpr::Tensor(*u, Arc::new(a2), Arc::new(b2))
                }
            }
            TypeExpr::List(a) => TypeExpr::List(Arc::new(self.check_code(a)?)),
            TypeExpr::Reflect(a) => TypeExpr::Reflect(Arc::new(self.check_code(a)?)),
            TypeExpr::Id(a, l, r) => {
                let a2 = self.check_code(a)?;
                let av = self.eval_ty(&a2)?;
                let l2 = self.check(Fragment::Zero, l, &av)?.term;
                let r2 = self.check(Fragment::Zero, r, &av)?.term;
                TypeExpr::Id(Arc::new(a2), Arc::new(l2), Arc::new(r2))
            }
            other => self.check_type(other)?,
        })
    }

    // ---- motives ----

    /// Elaborates an eliminator motive over a scrutinee of type `scrut_ty`.
    /// Without an annotation the expected type is used non-dependently;
    /// returns `None` when neither is available.
    fn motive(&mut self, m: &Motive, scrut_ty: &TyVal, expected: Option<&TyVal>) -> KResult<Option<(Arc<TypeExpr>, TyClosure)>> {
        let body = match (m, expected) {
            (Some(p), _) => {
                let p2 = self.bind0(scrut_ty.clone(), |c| c.check_type(p))?;
                Arc::new(p2)
            }
            (None, Some(exp)) => {
                let mut tys = self.tys.clone();
                tys.push(scrut_ty.clone());
                Arc::new(self.nbe.quote_ty(&mut tys, exp)?)
            }
            (None, None) => return Ok(None),
        };
        Ok(Some((body.clone(), TyClosure { env: self.env(), body })))
    }

    /// Non-dependent motive from a type living in the current context.
    fn const_motive(&self, tv: &TyVal, scrut_ty: &TyVal) -> KResult<(Arc<TypeExpr>, TyClosure)> {
        let mut tys = self.tys.clone();
        tys.push(scrut_ty.clone());
        let body = Arc::new(self.nbe.quote_ty(&mut tys, tv)?);
        Ok((body.clone(), TyClosure { env: self.env(), body }))
    }

    /// Moves a type from under `k` fresh binders back to the current
    /// context, failing if it mentions any of them.
    fn strengthen(&self, rule: &'static str, tv: &TyVal, binder_tys: &[TyVal]) -> KResult<TyVal> {
        let k = binder_tys.len();
        let mut tys = self.tys.clone();
        tys.extend(binder_tys.iter().cloned());
        let e = self.nbe.quote_ty(&mut tys, tv)?;
        if (0..k).any(|i| e.mentions(i)) {
            return Err(err(rule, DiagKind::Motive, "result type depends on bound variables; add a `return` annotation"));
        }
        let env = (0..k).fold(self.env(), |env, _| env.push(Val::Star));
        self.nbe.eval_ty(&env, &e)
    }

    fn inst(&self, m: &TyClosure, v: Val) -> KResult<TyVal> {
        self.nbe.inst_ty(m, v)
    }

    // ---- terms ----

    pub fn check(&mut self, s: Fragment, t: &Term, ty: &TyVal) -> KResult<Checked> {
        let one = s == Fragment::One;
        match (t, ty) {
            (Term::Lam(b), TyVal::Pi(pi, a, cod)) => {
                let x = Val::var(self.len());
                let cod_v = self.nbe.inst_ty(cod, x)?;
                let decl = s.as_usage() * pi;
                let bind = self.binder(0, decl, (**a).clone());
                let out = self.under("Tm-Lam", vec![bind], |c| c.check(s, b, &cod_v))?;
                Ok(Checked {
                    usage: out.usage,
                    term: Term::Lam(Arc::new(out.term)),
                    rt: if one { RTerm::Lam(out.rt.rc()) } else { RTerm::Erased },
                })
            }
            (Term::Lam(_), _) => Err(err(
                "Tm-Lam",
                DiagKind::Annotation,
                format!("a lambda cannot have type {}", self.show_ty(ty)),
            )),
            (Term::Pair(a, b), TyVal::Tensor(pi, sa, sb)) => {
                let s1 = if *pi == 0 { Fragment::Zero } else { s };
                let ao = self.check(s1, a, sa)?;
                let av = self.eval(&ao.term)?;
                let bty = self.nbe.inst_ty(sb, av)?;
                let bo = self.check(s, b, &bty)?;
                Ok(Checked {
                    usage: usage_add(&usage_scale(*pi, &ao.usage), &bo.usage),
                    term: Term::Pair(Arc::new(ao.term), Arc::new(bo.term)),
                    rt: if one { RTerm::Pair(ao.rt.rc(), bo.rt.rc(), *pi) } else { RTerm::Erased },
                })
            }
            (Term::Nil, TyVal::List(_)) => Ok(Checked { usage: self.zeros(), term: Term::Nil, rt: rt_if(one, RTerm::Nil) }),
            (Term::Cons(h, tl), TyVal::List(a)) => {
                let ho = self.check(s, h, a)?;
                let to = self.check(s, tl, ty)?;
                Ok(Checked {
                    usage: usage_add(&ho.usage, &to.usage),
                    term: Term::Cons(Arc::new(ho.term), Arc::new(to.term)),
                    rt: rt_if(one, RTerm::Cons(ho.rt.rc(), to.rt.rc())),
                })
            }
            (Term::Refl(m), TyVal::Id(a, l, r)) => {
                let mo = self.check(s, m, a)?;
                let mv = self.eval(&mo.term)?;
                let mut tys = self.tys.clone();
                for side in [l, r] {
                    if !self.nbe.conv_val(&mut tys, &mv, side, a)? {
                        return Err(err(
                            "Tm-Refl",
                            DiagKind::Conversion,
                            format!(
                                "refl({}) does not prove {}",
                                pretty_term(&mo.term, self.len()),
                                self.show_ty(ty)
                            ),
                        ));
                    }
                }
                Ok(Checked { usage: mo.usage, term: Term::Refl(Arc::new(mo.term)), rt: RTerm::Erased })
            }
            (Term::ReflectIntro(m), TyVal::Reflect(a)) => self.reflect_intro(s, m, Some(a)).map(|(o, _)| o),
            (Term::Code(c), TyVal::Universe) => {
                let c2 = self.check_code(c)?;
                Ok(Checked { usage: self.zeros(), term: Term::Code(Arc::new(c2)), rt: RTerm::Erased })
            }
            (
                Term::LetPair { .. }
                | Term::LetUnit { .. }
                | Term::If { .. }
                | Term::MatchList { .. }
                | Term::RecList { .. }
                | Term::RecNatCF { .. }
                | Term::RecNatL { .. },
                _,
            ) => Ok(self.elim(s, t, Some(ty))?.0),
            _ => {
                let (out, got) = self.infer(s, t)?;
                self.conv(ty, &got)?;
                Ok(out)
            }
        }
    }

    fn reflect_intro(&mut self, s: Fragment, m: &Term, inner: Option<&TyVal>) -> KResult<(Checked, TyVal)> {
        let (mo, a) = match inner {
            Some(a) => (self.check(Fragment::One, m, a)?, a.clone()),
            None => self.infer(Fragment::One, m)?,
        };
        if let Some(l) = mo.usage.iter().position(|u| *u > 0) {
            return Err(err(
                "Tm-R",
                DiagKind::Usage,
                format!("a reflected term must be closed at runtime, but uses `{}`", self.names[l]),
            ));
        }
        let rt = if s == Fragment::One { mo.rt } else { RTerm::Erased };
        Ok((
            Checked { usage: self.zeros(), term: Term::ReflectIntro(Arc::new(mo.term)), rt },
            TyVal::Reflect(std::rc::Rc::new(a)),
        ))
    }

    pub fn infer(&mut self, s: Fragment, t: &Term) -> KResult<(Checked, TyVal)> {
        let one = s == Fragment::One;
        let zeros = self.zeros();
        let leaf = |term: Term, rt: RTerm| Checked { usage: zeros.clone(), term, rt: rt_if(one, rt) };
        Ok(match t {
            Term::Var(i) => {
                if *i >= self.len() {
                    return Err(err("Var", DiagKind::Scope, format!("unbound variable index {}", i)));
                }
                let level = self.len() - 1 - i;
                let mut usage = self.zeros();
                usage[level] = s.as_usage();
                (Checked { usage, term: t.clone(), rt: rt_if(one, RTerm::Var(*i)) }, self.tys[level].clone())
            }
            Term::App(f, a) => {
                let (fo, fty) = self.infer(s, f)?;
                let TyVal::Pi(pi, dom, cod) = fty else {
                    return Err(err(
                        "Tm-App",
                        DiagKind::Annotation,
                        format!("cannot apply a term of type {}", self.show_ty(&fty)),
                    ));
                };
                let s1 = if pi == 0 { Fragment::Zero } else { s };
                let ao = self.check(s1, a, &dom)?;
                let av = self.eval(&ao.term)?;
                let rty = self.nbe.inst_ty(&cod, av)?;
                (
                    Checked {
                        usage: usage_add(&fo.usage, &usage_scale(pi, &ao.usage)),
                        term: Term::App(Arc::new(fo.term), Arc::new(ao.term)),
                        rt: rt_if(one, RTerm::App(fo.rt.rc(), ao.rt.rc(), pi)),
                    },
                    rty,
                )
            }
            Term::Fst(m) | Term::Snd(m) => {
                let is_fst = matches!(t, Term::Fst(_));
                let rule = if is_fst { "Tm-Fst" } else { "Tm-Snd" };
                self.require_zero(rule, s, "projection")?;
                let (mo, mty) = self.infer(s, m)?;
                let TyVal::Tensor(_, a, b) = mty else {
                    return Err(err(rule, DiagKind::Annotation, format!("cannot project from {}", self.show_ty(&mty))));
                };
                let mv = self.eval(&mo.term)?;
                let m2 = Arc::new(mo.term);
                if is_fst {
                    (leaf(Term::Fst(m2), RTerm::Erased), (*a).clone())
                } else {
                    let f = self.nbe.fst(mv)?;
                    (leaf(Term::Snd(m2), RTerm::Erased), self.nbe.inst_ty(&b, f)?)
                }
            }
            Term::Pair(a, b) => {
                let (ao, aty) = self.infer(s, a)?;
                let (bo, bty) = self.infer(s, b)?;
                let (_, bclo) = self.const_motive(&bty, &aty)?;
                (
                    Checked {
                        usage: usage_add(&ao.usage, &bo.usage),
                        term: Term::Pair(Arc::new(ao.term), Arc::new(bo.term)),
                        rt: rt_if(one, RTerm::Pair(ao.rt.rc(), bo.rt.rc(), 1)),
                    },
                    TyVal::Tensor(1, std::rc::Rc::new(aty), bclo),
                )
            }
            Term::Star => (leaf(Term::Star, RTerm::Star), TyVal::Unit),
            Term::True => (leaf(Term::True, RTerm::True), TyVal::Bool),
            Term::False => (leaf(Term::False, RTerm::False), TyVal::Bool),
            Term::Cons(h, _) => {
                let (_, hty) = self.infer(s, h)?;
                let ty = TyVal::List(std::rc::Rc::new(hty));
                (self.check(s, t, &ty)?, ty)
            }
            Term::ZeroCF => {
                self.require_regime("Tm-Zero", Regime::ConsFree, "zero without a diamond")?;
                self.require_zero("Tm-Zero", s, "the cons-free zero constructor")?;
                (leaf(Term::ZeroCF, RTerm::Erased), TyVal::Nat)
            }
            Term::SuccCF(m) => {
                self.require_regime("Tm-Succ", Regime::ConsFree, "succ without a diamond")?;
                self.require_zero("Tm-Succ", s, "the cons-free successor constructor")?;
                let mo = self.check(s, m, &TyVal::Nat)?;
                (leaf(Term::SuccCF(Arc::new(mo.term)), RTerm::Erased), TyVal::Nat)
            }
            Term::DupNat(m) => {
                self.require_regime("Tm-DupNat", Regime::ConsFree, "dup")?;
                let mo = self.check(s, m, &TyVal::Nat)?;
                let nat_clo = TyClosure { env: self.env(), body: Arc::new(TypeExpr::Nat) };
                (
                    Checked { usage: mo.usage, term: Term::DupNat(Arc::new(mo.term)), rt: rt_if(one, RTerm::DupNat(mo.rt.rc())) },
                    TyVal::Tensor(1, std::rc::Rc::new(TyVal::Nat), nat_clo),
                )
            }
            Term::DiamondStar => {
                self.require_regime("Tm-Diamond", Regime::Lfpl, "the diamond constructor")?;
                self.require_zero("Tm-Diamond", s, "the diamond constructor")?;
                (leaf(Term::DiamondStar, RTerm::Erased), TyVal::Diamond)
            }
            Term::ZeroL(d) => {
                self.require_regime("Tm-Zero", Regime::Lfpl, "zero with a diamond")?;
                let d_o = self.check(s, d, &TyVal::Diamond)?;
                (
                    Checked { usage: d_o.usage, term: Term::ZeroL(Arc::new(d_o.term)), rt: rt_if(one, RTerm::ZeroL(d_o.rt.rc())) },
                    TyVal::Nat,
                )
            }
            Term::SuccL(d, m) => {
                self.require_regime("Tm-Succ", Regime::Lfpl, "succ with a diamond")?;
                let d_o = self.check(s, d, &TyVal::Diamond)?;
                let mo = self.check(s, m, &TyVal::Nat)?;
                (
                    Checked {
                        usage: usage_add(&d_o.usage, &mo.usage),
                        term: Term::SuccL(Arc::new(d_o.term), Arc::new(mo.term)),
                        rt: rt_if(one, RTerm::SuccL(d_o.rt.rc(), mo.rt.rc())),
                    },
                    TyVal::Nat,
                )
            }
            Term::Refl(m) => {
                let (mo, a) = self.infer(s, m)?;
                let mv = self.eval(&mo.term)?;
                (
                    Checked { usage: mo.usage, term: Term::Refl(Arc::new(mo.term)), rt: RTerm::Erased },
                    TyVal::Id(std::rc::Rc::new(a), mv.clone(), mv),
                )
            }
            Term::ReflectIntro(m) => self.reflect_intro(s, m, None)?,
            Term::ReflectElim(m) => {
                let (mo, mty) = self.infer(s, m)?;
                let TyVal::Reflect(a) = mty else {
                    return Err(err(
                        "Tm-R-Inv",
                        DiagKind::Annotation,
                        format!("R^-1 expects a reflected type, found {}", self.show_ty(&mty)),
                    ));
                };
                (Checked { usage: mo.usage, term: Term::ReflectElim(Arc::new(mo.term)), rt: mo.rt }, (*a).clone())
            }
            Term::Code(c) => {
                let c2 = self.check_code(c)?;
                (leaf(Term::Code(Arc::new(c2)), RTerm::Erased), TyVal::Universe)
            }
            Term::Ann(m, ty) => {
                let ty2 = self.check_type(ty)?;
                let tv = self.eval_ty(&ty2)?;
                let mo = self.check(s, m, &tv)?;
                (Checked { usage: mo.usage, term: Term::Ann(Arc::new(mo.term), Arc::new(ty2)), rt: mo.rt }, tv)
            }
            Term::LetPair { .. }
            | Term::LetUnit { .. }
            | Term::If { .. }
            | Term::MatchList { .. }
            | Term::RecList { .. }
            | Term::RecNatCF { .. }
            | Term::RecNatL { .. } => self.elim(s, t, None)?,
            Term::Lam(_) => {
                return Err(err("Tm-Lam", DiagKind::Annotation, "cannot infer the type of a lambda; add an annotation"))
            }
            Term::Nil => return Err(err("Tm-Nil", DiagKind::Annotation, "cannot infer the element type of nil")),
        })
    }

    /// Eliminators, in checking (`expected` given) or inferring mode.
    fn elim(&mut self, s: Fragment, t: &Term, expected: Option<&TyVal>) -> KResult<(Checked, TyVal)> {
        let one = s == Fragment::One;
        let result = |c: &Self, out: Checked, m: &TyClosure, sv: Val| -> KResult<(Checked, TyVal)> {
            let ty = c.inst(m, sv)?;
            if let Some(exp) = expected {
                c.conv(exp, &ty)?;
            }
            Ok((out, ty))
        };
        match t {
            Term::LetPair { scrut, body, motive } => {
                let rule = "Tm-Let-Pair";
                let (so, sty) = self.infer(s, scrut)?;
                let TyVal::Tensor(pi, a, b) = sty.clone() else {
                    return Err(err(rule, DiagKind::Annotation, format!("cannot unpack a term of type {}", self.show_ty(&sty))));
                };
                let sv = self.eval(&so.term)?;
                let (xl, yl) = (self.len(), self.len() + 1);
                let (x, y) = (Val::var(xl), Val::var(yl));
                let b_x = self.nbe.inst_ty(&b, x.clone())?;
                let binders = |c: &Self| vec![c.binder(0, s.as_usage() * pi, (*a).clone()), c.binder(1, s.as_usage(), b_x.clone())];
                let pair_xy = Val::Pair(std::rc::Rc::new(x), std::rc::Rc::new(y));
                let (mt, mclo, bo) = match self.motive(motive, &sty, expected)? {
                    Some((mt, mclo)) => {
                        let bty = self.inst(&mclo, pair_xy)?;
                        let bs = binders(self);
                        let bo = self.under(rule, bs, |c| c.check(s, body, &bty))?;
                        (mt, mclo, bo)
                    }
                    None => {
                        let bs = binders(self);
                        let mut found = None;
                        let bo = self.under(rule, bs, |c| {
                            let (o, ty) = c.infer(s, body)?;
                            found = Some(ty);
                            Ok(o)
                        })?;
                        let ty = self.strengthen(rule, &found.unwrap(), &[(*a).clone(), b_x.clone()])?;
                        let (mt, mclo) = self.const_motive(&ty, &sty)?;
                        (mt, mclo, bo)
                    }
                };
                let out = Checked {
                    usage: usage_add(&so.usage, &bo.usage),
                    term: Term::LetPair { scrut: Arc::new(so.term), body: Arc::new(bo.term), motive: Some(mt) },
                    rt: rt_if(one, RTerm::LetPair(so.rt.rc(), bo.rt.rc())),
                };
                result(self, out, &mclo, sv)
            }
            Term::LetUnit { scrut, body, motive } => {
                let rule = "Tm-Let-Unit";
                let so = self.check(s, scrut, &TyVal::Unit)?;
                let sv = self.eval(&so.term)?;
                let (mt, mclo, bo) = match self.motive(motive, &TyVal::Unit, expected)? {
                    Some((mt, mclo)) => {
                        let bty = self.inst(&mclo, Val::Star)?;
                        (mt, mclo, self.check(s, body, &bty)?)
                    }
                    None => {
                        let (bo, bty) = self.infer(s, body)?;
                        let (mt, mclo) = self.const_motive(&bty, &TyVal::Unit)?;
                        (mt, mclo, bo)
                    }
                };
                let _ = rule;
                let out = Checked {
                    usage: usage_add(&so.usage, &bo.usage),
                    term: Term::LetUnit { scrut: Arc::new(so.term), body: Arc::new(bo.term), motive: Some(mt) },
                    rt: rt_if(one, RTerm::LetUnit(so.rt.rc(), bo.rt.rc())),
                };
                result(self, out, &mclo, sv)
            }
            Term::If { scrut, then_b, else_b, motive } => {
                let so = self.check(s, scrut, &TyVal::Bool)?;
                let sv = self.eval(&so.term)?;
                let (mt, mclo, to, eo) = match self.motive(motive, &TyVal::Bool, expected)? {
                    Some((mt, mclo)) => {
                        let tt = self.inst(&mclo, Val::True)?;
                        let et = self.inst(&mclo, Val::False)?;
                        (mt, mclo, self.check(s, then_b, &tt)?, self.check(s, else_b, &et)?)
                    }
                    None => {
                        let (to, tty) = self.infer(s, then_b)?;
                        let eo = self.check(s, else_b, &tty)?;
                        let (mt, mclo) = self.const_motive(&tty, &TyVal::Bool)?;
                        (mt, mclo, to, eo)
                    }
                };
                let out = Checked {
                    usage: usage_add(&so.usage, &usage_max(&to.usage, &eo.usage)),
                    term: Term::If {
                        scrut: Arc::new(so.term),
                        then_b: Arc::new(to.term),
                        else_b: Arc::new(eo.term),
                        motive: Some(mt),
                    },
                    rt: rt_if(one, RTerm::If(so.rt.rc(), to.rt.rc(), eo.rt.rc())),
                };
                result(self, out, &mclo, sv)
            }
            Term::MatchList { scrut, nil_b, cons_b, motive } | Term::RecList { scrut, nil_b, cons_b, motive } => {
                let rec = matches!(t, Term::RecList { .. });
                let rule = if rec { "Tm-List-Rec" } else { "Tm-Match" };
                if rec {
                    self.require_zero(rule, s, "list recursion")?;
                }
                let (so, sty) = self.infer(s, scrut)?;
                let TyVal::List(a) = sty.clone() else {
                    return Err(err(rule, DiagKind::Annotation, format!("cannot match on a term of type {}", self.show_ty(&sty))));
                };
                let sv = self.eval(&so.term)?;
                let (hl, tl) = (self.len(), self.len() + 1);
                let cons_v = Val::Cons(std::rc::Rc::new(Val::var(hl)), std::rc::Rc::new(Val::var(tl)));
                let (mt, mclo, no) = match self.motive(motive, &sty, expected)? {
                    Some((mt, mclo)) => {
                        let nty = self.inst(&mclo, Val::Nil)?;
                        (mt, mclo, self.check(s, nil_b, &nty)?)
                    }
                    None => {
                        let (no, nty) = self.infer(s, nil_b)?;
                        let (mt, mclo) = self.const_motive(&nty, &sty)?;
                        (mt, mclo, no)
                    }
                };
                let cty = self.inst(&mclo, cons_v)?;
                let mut bs = vec![self.binder(0, s.as_usage(), (*a).clone()), self.binder(1, s.as_usage(), sty.clone())];
                if rec {
                    bs.push(self.binder(2, 0, self.inst(&mclo, Val::var(tl))?));
                }
                let co = self.under(rule, bs, |c| c.check(s, cons_b, &cty))?;
                let (st, nt, ct) = (Arc::new(so.term), Arc::new(no.term), Arc::new(co.term));
                let out = Checked {
                    usage: usage_add(&so.usage, &usage_max(&no.usage, &co.usage)),
                    term: if rec {
                        Term::RecList { scrut: st, nil_b: nt, cons_b: ct, motive: Some(mt) }
                    } else {
                        Term::MatchList { scrut: st, nil_b: nt, cons_b: ct, motive: Some(mt) }
                    },
                    rt: if one && !rec { RTerm::MatchList(so.rt.rc(), no.rt.rc(), co.rt.rc()) } else { RTerm::Erased },
                };
                result(self, out, &mclo, sv)
            }
            Term::RecNatCF { scrut, zero_b, succ_b, motive } => {
                let rule = "Tm-Nat-Rec";
                self.require_regime(rule, Regime::ConsFree, "recursion without diamonds")?;
                let so = self.check(s, scrut, &TyVal::Nat)?;
                let sv = self.eval(&so.term)?;
                let (mt, mclo, zo) = match self.motive(motive, &TyVal::Nat, expected)? {
                    Some((mt, mclo)) => {
                        let zty = self.inst(&mclo, Val::Zero)?;
                        (mt, mclo, self.check(s, zero_b, &zty)?)
                    }
                    None => {
                        let (zo, zty) = self.infer(s, zero_b)?;
                        let (mt, mclo) = self.const_motive(&zty, &TyVal::Nat)?;
                        (mt, mclo, zo)
                    }
                };
                self.closed_branch(rule, &zo)?;
                let nl = self.len();
                let sty = self.inst(&mclo, Val::Succ(std::rc::Rc::new(Val::var(nl))))?;
                let bs = vec![self.binder(0, 0, TyVal::Nat), self.binder(1, s.as_usage(), self.inst(&mclo, Val::var(nl))?)];
                let succ_o = self.under(rule, bs, |c| c.check(s, succ_b, &sty))?;
                self.closed_branch(rule, &succ_o)?;
                let out = Checked {
                    usage: so.usage,
                    term: Term::RecNatCF {
                        scrut: Arc::new(so.term),
                        zero_b: Arc::new(zo.term),
                        succ_b: Arc::new(succ_o.term),
                        motive: Some(mt),
                    },
                    rt: rt_if(one, RTerm::RecNatCF(so.rt.rc(), zo.rt.rc(), succ_o.rt.rc())),
                };
                result(self, out, &mclo, sv)
            }
            Term::RecNatL { scrut, zero_b, succ_b, motive } => {
                let rule = "Tm-Nat-Rec";
                self.require_regime(rule, Regime::Lfpl, "recursion with diamonds")?;
                let so = self.check(s, scrut, &TyVal::Nat)?;
                let sv = self.eval(&so.term)?;
                let zb = |c: &Self| vec![c.binder(0, s.as_usage(), TyVal::Diamond)];
                let (mt, mclo, zo) = match self.motive(motive, &TyVal::Nat, expected)? {
                    Some((mt, mclo)) => {
                        let zty = self.inst(&mclo, Val::Zero)?;
                        let bs = zb(self);
                        (mt, mclo, self.under(rule, bs, |c| c.check(s, zero_b, &zty))?)
                    }
                    None => {
                        let bs = zb(self);
                        let mut found = None;
                        let zo = self.under(rule, bs, |c| {
                            let (o, ty) = c.infer(s, zero_b)?;
                            found = Some(ty);
                            Ok(o)
                        })?;
                        let zty = self.strengthen(rule, &found.unwrap(), &[TyVal::Diamond])?;
                        let (mt, mclo) = self.const_motive(&zty, &TyVal::Nat)?;
                        (mt, mclo, zo)
                    }
                };
                self.closed_branch(rule, &zo)?;
                let nl = self.len() + 1;
                let sty = self.inst(&mclo, Val::Succ(std::rc::Rc::new(Val::var(nl))))?;
                let bs = vec![
                    self.binder(0, s.as_usage(), TyVal::Diamond),
                    self.binder(1, 0, TyVal::Nat),
                    self.binder(2, s.as_usage(), self.inst(&mclo, Val::var(nl))?),
                ];
                let succ_o = self.under(rule, bs, |c| c.check(s, succ_b, &sty))?;
                self.closed_branch(rule, &succ_o)?;
                let out = Checked {
                    usage: so.usage,
                    term: Term::RecNatL {
                        scrut: Arc::new(so.term),
                        zero_b: Arc::new(zo.term),
                        succ_b: Arc::new(succ_o.term),
                        motive: Some(mt),
                    },
                    rt: rt_if(one, RTerm::RecNatL(so.rt.rc(), zo.rt.rc(), succ_o.rt.rc())),
                };
                result(self, out, &mclo, sv)
            }
            _ => unreachable!("elim called on a non-eliminator"),
        }
    }
}

fn rt_if(one: bool, rt: RTerm) -> RTerm {
    if one {
        rt
    } else {
        RTerm::Erased
    }
}

// ---- entry points ----

/// Checks a type in the zeroed version of `g`.
pub fn check_type(regime: Regime, g: &Context, t: &TypeExpr) -> KResult<TypeExpr> {
    let mut c = Checker::with_context(regime, &ctx_zero(g))?;
    c.check_type(t)
}

/// Checks `m : t` at fragment `sigma` and returns the minimal usage vector,
/// failing if it exceeds the declared annotations of `g`.
pub fn infer_usage_check(regime: Regime, g: &Context, sigma: Fragment, m: &Term, t: &TypeExpr) -> KResult<UsageVector> {
    let mut c = Checker::with_context(regime, g)?;
    let t2 = c.check_type(t)?;
    let tv = c.eval_ty(&t2)?;
    let out = c.check(sigma, m, &tv)?;
    for (e, u) in g.entries.iter().zip(&out.usage) {
        if *u > e.usage {
            return Err(err(
                "Sub",
                DiagKind::Usage,
                format!("variable `{}` is used {} time(s) at runtime but declared with usage {}", e.name, u, e.usage),
            ));
        }
    }
    Ok(out.usage)
}

/// Decides definitional equality of two types in the zeroed context.
pub fn conv_type(regime: Regime, g0: &Context, s: &TypeExpr, t: &TypeExpr) -> KResult<()> {
    let mut c = Checker::with_context(regime, &ctx_zero(g0))?;
    let s2 = c.check_type(s)?;
    let t2 = c.check_type(t)?;
    let (sv, tv) = (c.eval_ty(&s2)?, c.eval_ty(&t2)?);
    c.conv(&sv, &tv)
}

/// Normal form of an inferable term under the σ=0 equations.
pub fn normalize_sigma0(regime: Regime, g0: &Context, m: &Term) -> KResult<Term> {
    let mut c = Checker::with_context(regime, &ctx_zero(g0))?;
    let (out, ty) = c.infer(Fragment::Zero, m)?;
    let v = c.eval(&out.term)?;
    c.quote(&v, &ty)
}

/// Checks a closed declaration `body : ty` at fragment `sigma`.
pub fn check_decl(regime: Regime, sigma: Fragment, ty: &TypeExpr, body: &Term) -> KResult<CheckedDecl> {
    check_decl_with_fuel(regime, sigma, ty, body, crate::kernel::nbe::DEFAULT_FUEL)
}

pub fn check_decl_with_fuel(regime: Regime, sigma: Fragment, ty: &TypeExpr, body: &Term, fuel: u64) -> KResult<CheckedDecl> {
    let mut c = Checker::with_fuel(regime, fuel);
    let ty2 = c.check_type(ty)?;
    let tv = c.eval_ty(&ty2)?;
    let out = c.check(sigma, body, &tv)?;
    Ok(CheckedDecl { sigma, ty: ty2, term: out.term, rt: out.rt })
}
