//! Names to de Bruijn indices, Russell-style type/term disambiguation, and
//! macro expansion (tuple patterns, n-ary lets, `irec`).

use std::collections::HashMap;
use std::sync::Arc;

use super::ast::{Builtin, Expr, ExprKind, Param, Ret, SourceModule};
use super::{Decl, DiagResult, Diagnostic, Module, Span};
use crate::kernel::syntax::{Fragment, Motive, Regime, Term, TypeExpr};

enum Entry {
    Bound(String),
    Alias { name: String, value: Box<Expr> },
}

struct Global {
    ty: TypeExpr,
    body: Term,
}

pub struct Resolver<'g> {
    scope: Vec<Entry>,
    globals: &'g HashMap<String, Global>,
    later: &'g HashMap<String, Span>,
    fresh: usize,
}

fn a<T>(x: T) -> Arc<T> {
    Arc::new(x)
}

pub fn resolve_module(m: &SourceModule, regime: Option<Regime>) -> DiagResult<Module> {
    let regime = match (regime, &m.regime) {
        (Some(r), _) => r,
        (None, Some(name)) => name
            .parse()
            .map_err(|e: String| Diagnostic::syntax(m.regime_span.unwrap_or_default(), e))?,
        (None, None) => Regime::ConsFree,
    };
    for flag in &m.debug {
        if flag != "halve_potential" {
            return Err(Diagnostic::syntax(Span::default(), format!("unknown debug flag `{}`", flag)));
        }
    }
    let mut later: HashMap<String, Span> = m.decls.iter().map(|d| (d.name.clone(), d.span)).collect();
    let mut globals = HashMap::new();
    let mut decls = Vec::new();
    for d in &m.decls {
        if globals.contains_key(&d.name) {
            return Err(Diagnostic::scope(d.span, format!("`{}` is defined twice", d.name)));
        }
        later.remove(&d.name);
        let (ty, body) = {
            let mut r = Resolver { scope: Vec::new(), globals: &globals, later: &later, fresh: 0 };
            (r.ty(&d.ty)?, r.term(&d.body)?)
        };
        globals.insert(d.name.clone(), Global { ty: ty.clone(), body: body.clone() });
        decls.push(Decl { name: d.name.clone(), sigma: Fragment::from_usage(d.sigma), ty, body, span: d.span });
    }
    Ok(Module { regime, debug: m.debug.clone(), decls })
}

/// Resolves a standalone expression with `free` names bound, outermost first.
pub fn resolve_term_in(e: &Expr, free: &[String]) -> DiagResult<Term> {
    let (g, l) = (HashMap::new(), HashMap::new());
    let mut r = Resolver { scope: free.iter().map(|n| Entry::Bound(n.clone())).collect(), globals: &g, later: &l, fresh: 0 };
    r.term(e)
}

pub fn resolve_type_in(e: &Expr, free: &[String]) -> DiagResult<TypeExpr> {
    let (g, l) = (HashMap::new(), HashMap::new());
    let mut r = Resolver { scope: free.iter().map(|n| Entry::Bound(n.clone())).collect(), globals: &g, later: &l, fresh: 0 };
    r.ty(e)
}

impl Resolver<'_> {
    fn depth(&self) -> usize {
        self.scope.iter().filter(|e| matches!(e, Entry::Bound(_))).count()
    }

    fn gensym(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("%{}{}", base, self.fresh)
    }

    fn bound<T>(&mut self, names: &[&str], f: impl FnOnce(&mut Self) -> DiagResult<T>) -> DiagResult<T> {
        let k = self.scope.len();
        for n in names {
            self.scope.push(Entry::Bound(n.to_string()));
        }
        let r = f(self);
        self.scope.truncate(k);
        r
    }

    fn lookup(&mut self, name: &str, span: Span) -> DiagResult<Term> {
        if name == "_" {
            return Err(Diagnostic::scope(span, "`_` cannot be referenced"));
        }
        let mut idx = 0;
        for pos in (0..self.scope.len()).rev() {
            match &self.scope[pos] {
                Entry::Bound(n) if n == name => return Ok(Term::Var(idx)),
                Entry::Bound(_) => idx += 1,
                Entry::Alias { name: n, value } if n == name => {
                    let value = value.clone();
                    let rest = self.scope.split_off(pos);
                    let d0 = self.depth();
                    let r = self.term(&value);
                    self.scope.extend(rest);
                    return Ok(r?.shift(0, self.depth() - d0));
                }
                Entry::Alias { .. } => {}
            }
        }
        if let Some(g) = self.globals.get(name) {
            return Ok(Term::ann(g.body.clone(), g.ty.clone()));
        }
        if let Some(at) = self.later.get(name) {
            return Err(Diagnostic::scope(
                span,
                format!("`{}` is defined later (line {}); declarations may only refer to earlier ones", name, at.line),
            ));
        }
        Err(Diagnostic::scope(span, format!("unbound variable `{}`", name)))
    }

    fn motive(&mut self, ret: &Option<Ret>) -> DiagResult<Motive> {
        match ret {
            None => Ok(None),
            Some(r) => {
                let t = self.bound(&[&r.name], |s| s.ty(&r.ty))?;
                Ok(Some(a(t)))
            }
        }
    }

    fn with_alias<T>(&mut self, name: &str, value: &Expr, f: impl FnOnce(&mut Self) -> DiagResult<T>) -> DiagResult<T> {
        let k = self.scope.len();
        self.scope.push(Entry::Alias { name: name.to_string(), value: Box::new(value.clone()) });
        let r = f(self);
        self.scope.truncate(k);
        r
    }

    /// Resolves an expression in type position.
    pub fn ty(&mut self, e: &Expr) -> DiagResult<TypeExpr> {
        Ok(match &e.kind {
            ExprKind::Pi { name, usage, dom, cod } => {
                let d = self.ty(dom)?;
                let c = self.bound(&[name.as_deref().unwrap_or("_")], |s| s.ty(cod))?;
                TypeExpr::Pi(*usage, a(d), a(c))
            }
            ExprKind::Sigma { name, usage, fst, snd } => {
                let d = self.ty(fst)?;
                let c = self.bound(&[name.as_deref().unwrap_or("_")], |s| s.ty(snd))?;
                TypeExpr::Tensor(*usage, a(d), a(c))
            }
            ExprKind::UnitTy => TypeExpr::Unit,
            ExprKind::BoolTy => TypeExpr::Bool,
            ExprKind::NatTy => TypeExpr::Nat,
            ExprKind::DiamondTy => TypeExpr::Diamond,
            ExprKind::Universe => TypeExpr::Universe,
            ExprKind::Builtin(Builtin::List, args) => TypeExpr::List(a(self.ty(&args[0])?)),
            ExprKind::Builtin(Builtin::Id, args) => {
                TypeExpr::Id(a(self.ty(&args[0])?), a(self.term(&args[1])?), a(self.term(&args[2])?))
            }
            ExprKind::Builtin(Builtin::El, args) => TypeExpr::El(a(self.term(&args[0])?)),
            ExprKind::Builtin(Builtin::R, args) => TypeExpr::Reflect(a(self.ty(&args[0])?)),
            ExprKind::Alias { name, value, body } => self.with_alias(name, value, |s| s.ty(body))?,
            _ => TypeExpr::El(a(self.term(e)?)),
        })
    }

    /// Resolves an expression in term position.
    pub fn term(&mut self, e: &Expr) -> DiagResult<Term> {
        Ok(match &e.kind {
            ExprKind::Var(n) => self.lookup(n, e.span)?,
            ExprKind::Lam(params, body) => self.lambda(params, body)?,
            ExprKind::App(f, x) => Term::App(a(self.term(f)?), a(self.term(x)?)),
            ExprKind::Tuple(items) => {
                let mut it = items.iter().rev();
                let mut t = self.term(it.next().expect("tuple with no items"))?;
                for x in it {
                    t = Term::Pair(a(self.term(x)?), a(t));
                }
                t
            }
            ExprKind::Binder { .. } => return Err(Diagnostic::syntax(e.span, "unexpected binder")),
            ExprKind::Ann(t, ty) => Term::Ann(a(self.term(t)?), a(self.ty(ty)?)),
            ExprKind::Let { pat, scrut, ret, body } => {
                let s = self.term(scrut)?;
                let motive = self.motive(ret)?;
                let names: Vec<&str> = pat.iter().map(|s| s.as_str()).collect();
                self.let_pattern(s, motive, &names, body)?
            }
            ExprKind::If { scrut, ret, then_b, else_b } => Term::If {
                scrut: a(self.term(scrut)?),
                motive: self.motive(ret)?,
                then_b: a(self.term(then_b)?),
                else_b: a(self.term(else_b)?),
            },
            ExprKind::Match { scrut, ret, nil_b, head, tail, cons_b } => Term::MatchList {
                scrut: a(self.term(scrut)?),
                motive: self.motive(ret)?,
                nil_b: a(self.term(nil_b)?),
                cons_b: a(self.bound(&[head, tail], |s| s.term(cons_b))?),
            },
            ExprKind::RecList { scrut, ret, nil_b, head, tail, rec, cons_b } => Term::RecList {
                scrut: a(self.term(scrut)?),
                motive: self.motive(ret)?,
                nil_b: a(self.term(nil_b)?),
                cons_b: a(self.bound(&[head, tail, rec], |s| s.term(cons_b))?),
            },
            ExprKind::Rec { scrut, ret, zero_d, zero_b, succ_d, pred, rec, succ_b } => {
                let scrut = a(self.term(scrut)?);
                let motive = self.motive(ret)?;
                match (zero_d, succ_d) {
                    (Some(zd), Some(sd)) => Term::RecNatL {
                        scrut,
                        motive,
                        zero_b: a(self.bound(&[zd], |s| s.term(zero_b))?),
                        succ_b: a(self.bound(&[sd, pred, rec], |s| s.term(succ_b))?),
                    },
                    _ => Term::RecNatCF {
                        scrut,
                        motive,
                        zero_b: a(self.term(zero_b)?),
                        succ_b: a(self.bound(&[pred, rec], |s| s.term(succ_b))?),
                    },
                }
            }
            ExprKind::IRec { .. } => {
                let expanded = self.expand_irec(e);
                self.term(&expanded)?
            }
            ExprKind::Builtin(bi, args) => {
                let arg = |s: &mut Self, i: usize| s.term(&args[i]).map(a);
                match bi {
                    Builtin::Zero if args.is_empty() => Term::ZeroCF,
                    Builtin::Zero => Term::ZeroL(arg(self, 0)?),
                    Builtin::Succ if args.len() == 1 => Term::SuccCF(arg(self, 0)?),
                    Builtin::Succ => Term::SuccL(arg(self, 0)?, arg(self, 1)?),
                    Builtin::Dup => Term::DupNat(arg(self, 0)?),
                    Builtin::Fst => Term::Fst(arg(self, 0)?),
                    Builtin::Snd => Term::Snd(arg(self, 0)?),
                    Builtin::Refl => Term::Refl(arg(self, 0)?),
                    Builtin::R if args[0].is_type_former() => Term::Code(a(self.ty(e)?)),
                    Builtin::R => Term::ReflectIntro(arg(self, 0)?),
                    Builtin::RInv => Term::ReflectElim(arg(self, 0)?),
                    Builtin::Cons => Term::Cons(arg(self, 0)?, arg(self, 1)?),
                    Builtin::List | Builtin::Id | Builtin::El => Term::Code(a(self.ty(e)?)),
                }
            }
            ExprKind::Alias { name, value, body } => self.with_alias(name, value, |s| s.term(body))?,
            ExprKind::Pi { .. }
            | ExprKind::Sigma { .. }
            | ExprKind::UnitTy
            | ExprKind::BoolTy
            | ExprKind::NatTy
            | ExprKind::DiamondTy
            | ExprKind::Universe => Term::Code(a(self.ty(e)?)),
            ExprKind::Star => Term::Star,
            ExprKind::DiamondStar => Term::DiamondStar,
            ExprKind::True => Term::True,
            ExprKind::False => Term::False,
            ExprKind::Nil => Term::Nil,
        })
    }

    fn lambda(&mut self, params: &[Param], body: &Expr) -> DiagResult<Term> {
        let Some((first, rest)) = params.split_first() else {
            return self.term(body);
        };
        let inner = match first {
            Param::Name(n) => self.bound(&[n], |s| s.lambda(rest, body))?,
            Param::Tuple(names) => {
                let t = self.gensym("t");
                self.bound(&[&t], |s| {
                    let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                    s.tuple_body(Term::Var(0), &names, |s| s.lambda(rest, body))
                })?
            }
        };
        Ok(Term::lam(inner))
    }

    fn let_pattern(&mut self, scrut: Term, motive: Motive, names: &[&str], body: &Expr) -> DiagResult<Term> {
        if names.is_empty() {
            return Ok(Term::LetUnit { scrut: a(scrut), body: a(self.term(body)?), motive });
        }
        if names.len() == 2 {
            let b = self.bound(names, |s| s.term(body))?;
            return Ok(Term::LetPair { scrut: a(scrut), body: a(b), motive });
        }
        self.tuple_body(scrut, names, |s| s.term(body))
    }

    /// `let (x1, (x2, ...)) = scrut in k` with motive-less nested lets.
    fn tuple_body(
        &mut self,
        scrut: Term,
        names: &[&str],
        k: impl FnOnce(&mut Self) -> DiagResult<Term>,
    ) -> DiagResult<Term> {
        if names.len() == 2 {
            let b = self.bound(names, k)?;
            return Ok(Term::LetPair { scrut: a(scrut), body: a(b), motive: None });
        }
        let rest = self.gensym("r");
        let b = self.bound(&[names[0], &rest], |s| s.tuple_body(Term::Var(0), &names[1..], k))?;
        Ok(Term::LetPair { scrut: a(scrut), body: a(b), motive: None })
    }

    /// Expands `irec` over indexed lists `(n ^1 : Nat) * El(ELEMS A n)` into
    /// a function-valued natural-number recursion on the length.
    fn expand_irec(&mut self, e: &Expr) -> Expr {
        let ExprKind::IRec { scrut, elem, ret, nil_d, nil_b, cons_d, head, tail, rec, cons_b } = &e.kind else {
            unreachable!()
        };
        let sp = e.span;
        let mk = |k: ExprKind| Expr::new(k, sp);
        let var = |n: &str| Expr::new(ExprKind::Var(n.to_string()), sp);
        let bx = |x: Expr| Box::new(x);
        let g: Vec<String> = ["n", "e", "x", "e", "d", "e", "d", "m", "p", "e", "h", "rest", "v"]
            .iter()
            .map(|b| self.gensym(b))
            .collect();
        let (n, ev, x, e2, zd, e3, sd, m, p, e4, h, rest, v) =
            (&g[0], &g[1], &g[2], &g[3], &g[4], &g[5], &g[6], &g[7], &g[8], &g[9], &g[10], &g[11], &g[12]);
        let elems = |len: Expr, s: &mut Self| {
            let (d0, d1, m0, q0) = (s.gensym("d"), s.gensym("d"), s.gensym("m"), s.gensym("q"));
            mk(ExprKind::Rec {
                scrut: bx(len),
                ret: Some(Ret { name: "_".into(), ty: bx(mk(ExprKind::Universe)) }),
                zero_d: Some(d0),
                zero_b: bx(mk(ExprKind::UnitTy)),
                succ_d: Some(d1),
                pred: m0,
                rec: q0.clone(),
                succ_b: bx(mk(ExprKind::Sigma { name: None, usage: 1, fst: elem.clone(), snd: bx(var(&q0)) })),
            })
        };
        let ilist = |s: &mut Self| {
            let l = s.gensym("l");
            let el = elems(var(&l), s);
            mk(ExprKind::Sigma { name: Some(l), usage: 1, fst: bx(mk(ExprKind::NatTy)), snd: bx(el) })
        };
        let packed = |fst: Expr, snd: Expr, s: &mut Self| {
            let ty = ilist(s);
            mk(ExprKind::Ann(bx(mk(ExprKind::Tuple(vec![fst, snd]))), bx(ty)))
        };
        let p_at = |value: Expr| mk(ExprKind::Alias { name: ret.name.clone(), value: bx(value), body: ret.ty.clone() });

        let rec_motive = {
            let dom = elems(var(x), self);
            let z = packed(var(x), var(e2), self);
            mk(ExprKind::Pi { name: Some(e2.clone()), usage: 1, dom: bx(dom), cod: bx(p_at(z)) })
        };
        let zero_b = mk(ExprKind::Lam(
            vec![Param::Name(e3.clone())],
            bx(mk(ExprKind::Alias { name: nil_d.clone(), value: bx(var(zd)), body: nil_b.clone() })),
        ));
        let succ_m = mk(ExprKind::Builtin(Builtin::Succ, vec![mk(ExprKind::DiamondStar), var(m)]));
        let inner_motive = p_at(packed(succ_m, var(v), self));
        let xs_val = packed(var(m), var(rest), self);
        let p_val = mk(ExprKind::App(bx(var(p)), bx(var(rest))));
        let user = [(cons_d, var(sd)), (head, var(h)), (tail, xs_val), (rec, p_val)]
            .into_iter()
            .rev()
            .fold(*cons_b.clone(), |body, (name, value)| {
                mk(ExprKind::Alias { name: name.clone(), value: bx(value), body: bx(body) })
            });
        let succ_b = mk(ExprKind::Lam(
            vec![Param::Name(e4.clone())],
            bx(mk(ExprKind::Let {
                pat: vec![h.clone(), rest.clone()],
                scrut: bx(var(e4)),
                ret: Some(Ret { name: v.clone(), ty: bx(inner_motive) }),
                body: bx(user),
            })),
        ));
        let recursion = mk(ExprKind::Rec {
            scrut: bx(var(n)),
            ret: Some(Ret { name: x.clone(), ty: bx(rec_motive) }),
            zero_d: Some(zd.clone()),
            zero_b: bx(zero_b),
            succ_d: Some(sd.clone()),
            pred: m.clone(),
            rec: p.clone(),
            succ_b: bx(succ_b),
        });
        mk(ExprKind::Let {
            pat: vec![n.clone(), ev.clone()],
            scrut: scrut.clone(),
            ret: Some(ret.clone()),
            body: bx(mk(ExprKind::App(bx(recursion), bx(var(ev))))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::{parse, parse_expr};

    fn term(src: &str, free: &[&str]) -> Term {
        let free: Vec<String> = free.iter().map(|s| s.to_string()).collect();
        resolve_term_in(&parse_expr(src).unwrap(), &free).unwrap()
    }

    #[test]
    fn indices_count_from_the_right() {
        assert_eq!(term("\\x y. x", &[]), Term::lam(Term::lam(Term::Var(1))));
        assert_eq!(term("a b", &["a", "b"]), Term::app(Term::Var(1), Term::Var(0)));
    }

    #[test]
    fn type_formers_become_codes_in_term_position() {
        assert_eq!(term("Nat", &[]), Term::code(TypeExpr::Nat));
        assert_eq!(term("R(Bool)", &[]), Term::code(TypeExpr::Reflect(a(TypeExpr::Bool))));
        assert_eq!(term("R(b)", &["b"]), Term::ReflectIntro(a(Term::Var(0))));
        let t = resolve_type_in(&parse_expr("(x : U) -> x").unwrap(), &[]).unwrap();
        assert_eq!(t, TypeExpr::pi(1, TypeExpr::Universe, TypeExpr::el(Term::Var(0))));
    }

    #[test]
    fn tuple_patterns_nest() {
        let t = term("\\(a, b, c). c", &[]);
        let inner = Term::LetPair { scrut: a(Term::Var(0)), body: a(Term::Var(0)), motive: None };
        let outer = Term::LetPair { scrut: a(Term::Var(0)), body: a(inner), motive: None };
        assert_eq!(t, Term::lam(outer));
    }

    #[test]
    fn forward_and_unbound_references() {
        let m = parse("def f : Bool = g\ndef g : Bool = true").unwrap();
        let e = resolve_module(&m, None).unwrap_err();
        assert_eq!(e.label, "scope");
        assert!(e.message.contains("later"));
        let m = parse("def f : Bool = h").unwrap();
        assert!(resolve_module(&m, None).unwrap_err().message.contains("unbound"));
    }

    #[test]
    fn globals_inline_as_annotations() {
        let m = parse("def t : Bool = true\ndef u : Bool = t").unwrap();
        let r = resolve_module(&m, None).unwrap();
        assert_eq!(r.decls[1].body, Term::ann(Term::True, TypeExpr::Bool));
    }

    #[test]
    fn aliases_resolve_where_introduced() {
        let sp = Span::default();
        let var = |n: &str| Expr::new(ExprKind::Var(n.into()), sp);
        // alias y := x, then bind another x; y must still mean the outer x
        let body = Expr::new(ExprKind::Lam(vec![Param::Name("x".into())], Box::new(var("y"))), sp);
        let e = Expr::new(ExprKind::Alias { name: "y".into(), value: Box::new(var("x")), body: Box::new(body) }, sp);
        assert_eq!(resolve_term_in(&e, &["x".into()]).unwrap(), Term::lam(Term::Var(1)));
    }

    #[test]
    fn unknown_regime_is_reported() {
        let m = parse("#regime fast\ndef t : Bool = true").unwrap();
        assert!(resolve_module(&m, None).unwrap_err().message.contains("unknown regime"));
    }
}
