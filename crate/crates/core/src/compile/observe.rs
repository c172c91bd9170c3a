//! First-order values that can cross between the surface, the kernel, and
//! the machine. Every conversion is directed by the (evaluated) type, since
//! the machine encodings of different types overlap.

use std::fmt;
use std::rc::Rc;

use rand::Rng;
use serde::Serialize;

use crate::diag::KernelError;
use crate::kernel::nbe::{Nbe, TyVal, Val};
use crate::kernel::syntax::{Regime, Term};
use crate::machine::{decode_list, decode_nat, encode_list, nat_value, DecodeError, MachineValue};
use crate::potentials::{MonoidKind, Potential};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Observable {
    Unit,
    Bool(bool),
    Nat(u64),
    List(Vec<Observable>),
    Pair(Box<Observable>, Box<Observable>),
    Diamond,
    /// A usage-0 component: present in the type, absent at runtime.
    Erased,
}

impl Observable {
    pub fn pair(a: Observable, b: Observable) -> Self {
        Observable::Pair(Box::new(a), Box::new(b))
    }

    /// Right-nested tuple of the given components.
    pub fn tuple(mut items: Vec<Observable>) -> Self {
        let last = items.pop().unwrap_or(Observable::Unit);
        items.into_iter().rev().fold(last, |acc, x| Observable::pair(x, acc))
    }

    /// Flattens the right spine of nested pairs.
    pub fn spine(&self) -> Vec<&Observable> {
        let mut out = vec![];
        let mut cur = self;
        while let Observable::Pair(a, b) = cur {
            out.push(&**a);
            cur = b;
        }
        out.push(cur);
        out
    }

    /// Naturals in the order they appear.
    pub fn nats(&self) -> Vec<u64> {
        let mut out = vec![];
        self.walk(&mut |o| {
            if let Observable::Nat(k) = o {
                out.push(*k)
            }
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(&Observable)) {
        f(self);
        match self {
            Observable::List(xs) => xs.iter().for_each(|x| x.walk(f)),
            Observable::Pair(a, b) => {
                a.walk(f);
                b.walk(f)
            }
            _ => {}
        }
    }

    /// Iterable size of the value: each natural `k` counts `k + 1` and each
    /// diamond 1, combined in the given monoid.
    pub fn potential(&self, kind: MonoidKind) -> Potential {
        let mut acc = Potential::empty();
        self.walk(&mut |o| match o {
            Observable::Nat(k) => acc = kind.plus(&acc, &Potential::size(k.saturating_add(1))),
            Observable::Diamond => acc = kind.plus(&acc, &Potential::size(1)),
            _ => {}
        });
        acc
    }

    /// Kernel value. Erased parts have no content and become `*`.
    pub fn to_val(&self) -> Val {
        match self {
            Observable::Unit | Observable::Diamond | Observable::Erased => Val::Star,
            Observable::Bool(b) => Val::boolean(*b),
            Observable::Nat(n) => Val::nat(*n),
            Observable::List(xs) => xs.iter().rev().fold(Val::Nil, |acc, x| Val::Cons(Rc::new(x.to_val()), Rc::new(acc))),
            Observable::Pair(a, b) => Val::Pair(Rc::new(a.to_val()), Rc::new(b.to_val())),
        }
    }

    /// Surface term in the given regime's constructors.
    pub fn to_term(&self, regime: Regime) -> Term {
        match self {
            Observable::Unit | Observable::Erased => Term::Star,
            Observable::Diamond => Term::DiamondStar,
            Observable::Bool(true) => Term::True,
            Observable::Bool(false) => Term::False,
            Observable::Nat(n) => Term::numeral(regime, *n),
            Observable::List(xs) => xs.iter().rev().fold(Term::Nil, |acc, x| Term::Cons(x.to_term(regime).into(), acc.into())),
            Observable::Pair(a, b) => Term::pair(a.to_term(regime), b.to_term(regime)),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Unit => write!(f, "()"),
            Observable::Bool(b) => write!(f, "{}", b),
            Observable::Nat(n) => write!(f, "{}", n),
            Observable::Diamond => write!(f, "<*>"),
            Observable::Erased => write!(f, "_"),
            Observable::List(xs) => {
                write!(f, "[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", x)?;
                }
                write!(f, "]")
            }
            Observable::Pair(..) => {
                write!(f, "(")?;
                for (i, x) in self.spine().into_iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", x)?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ObserveError {
    #[error("type `{0}` has no first-order values")]
    NotObservable(&'static str),
    #[error("value does not fit type `{0}`")]
    Mismatch(&'static str),
    #[error("{0}")]
    Decode(#[from] DecodeError),
    #[error("{0}")]
    Kernel(String),
    #[error("bad value literal at byte {pos}: {msg}")]
    Literal { pos: usize, msg: String },
}

impl From<KernelError> for ObserveError {
    fn from(e: KernelError) -> Self {
        ObserveError::Kernel(e.to_string())
    }
}

pub type ObsResult<T> = Result<T, ObserveError>;

fn ty_name(ty: &TyVal) -> &'static str {
    match ty {
        TyVal::Pi(..) => "function",
        TyVal::Tensor(..) => "pair",
        TyVal::Unit => "Unit",
        TyVal::Bool => "Bool",
        TyVal::List(_) => "List",
        TyVal::Nat => "Nat",
        TyVal::Diamond => "<>",
        TyVal::Id(..) => "Id",
        TyVal::Universe => "U",
        TyVal::El(_) => "El",
        TyVal::Reflect(_) => "R",
    }
}

/// Machine encoding of `o` at type `ty`.
pub fn encode(nbe: &Nbe, o: &Observable, ty: &TyVal) -> ObsResult<MachineValue> {
    let bad = || ObserveError::Mismatch(ty_name(ty));
    Ok(match (ty, o) {
        (TyVal::Unit, Observable::Unit) | (TyVal::Diamond, Observable::Diamond) => MachineValue::Unit,
        (_, Observable::Erased) => MachineValue::Unit,
        (TyVal::Bool, Observable::Bool(b)) => MachineValue::boolean(*b),
        (TyVal::Nat, Observable::Nat(n)) => nat_value(*n),
        (TyVal::List(a), Observable::List(xs)) => {
            encode_list(xs.iter().map(|x| encode(nbe, x, a)).collect::<ObsResult<Vec<_>>>()?)
        }
        (TyVal::Tensor(u, a, b), Observable::Pair(x, y)) => {
            let first = if *u == 0 { MachineValue::Unit } else { encode(nbe, x, a)? };
            let bty = nbe.inst_ty(b, x.to_val())?;
            MachineValue::pair(first, encode(nbe, y, &bty)?)
        }
        (TyVal::Pi(..) | TyVal::Universe | TyVal::El(_) | TyVal::Reflect(_) | TyVal::Id(..), _) => {
            return Err(ObserveError::NotObservable(ty_name(ty)))
        }
        _ => return Err(bad()),
    })
}

/// Reads a machine value back at type `ty`.
pub fn decode(nbe: &Nbe, v: &MachineValue, ty: &TyVal) -> ObsResult<Observable> {
    let bad = || ObserveError::Mismatch(ty_name(ty));
    Ok(match ty {
        TyVal::Unit => match v {
            MachineValue::Unit => Observable::Unit,
            _ => return Err(bad()),
        },
        TyVal::Diamond => match v {
            MachineValue::Unit => Observable::Diamond,
            _ => return Err(bad()),
        },
        TyVal::Bool => match v {
            MachineValue::True => Observable::Bool(true),
            MachineValue::False => Observable::Bool(false),
            _ => return Err(bad()),
        },
        TyVal::Nat => Observable::Nat(decode_nat(v)?),
        TyVal::List(a) => Observable::List(decode_list(v)?.iter().map(|x| decode(nbe, x, a)).collect::<ObsResult<_>>()?),
        TyVal::Tensor(u, a, b) => {
            let MachineValue::Pair(x, y) = v else { return Err(bad()) };
            let first = if *u == 0 { Observable::Erased } else { decode(nbe, x, a)? };
            let bty = nbe.inst_ty(b, first.to_val())?;
            Observable::pair(first, decode(nbe, y, &bty)?)
        }
        _ => return Err(ObserveError::NotObservable(ty_name(ty))),
    })
}

/// Reads a kernel value at type `ty`, erasing what the machine would not
/// carry.
pub fn observe(nbe: &Nbe, v: &Val, ty: &TyVal) -> ObsResult<Observable> {
    let bad = || ObserveError::Mismatch(ty_name(ty));
    Ok(match (ty, v) {
        (TyVal::Unit, Val::Star) => Observable::Unit,
        (TyVal::Diamond, Val::Star) => Observable::Diamond,
        (TyVal::Bool, Val::True) => Observable::Bool(true),
        (TyVal::Bool, Val::False) => Observable::Bool(false),
        (TyVal::Nat, _) => {
            let mut n = 0;
            let mut cur = v;
            loop {
                match cur {
                    Val::Zero => break,
                    Val::Succ(p) => {
                        n += 1;
                        cur = p;
                    }
                    _ => return Err(bad()),
                }
            }
            Observable::Nat(n)
        }
        (TyVal::List(a), _) => {
            let mut xs = vec![];
            let mut cur = v;
            loop {
                match cur {
                    Val::Nil => break,
                    Val::Cons(h, t) => {
                        xs.push(observe(nbe, h, a)?);
                        cur = t;
                    }
                    _ => return Err(bad()),
                }
            }
            Observable::List(xs)
        }
        (TyVal::Tensor(u, a, b), Val::Pair(x, y)) => {
            let bty = nbe.inst_ty(b, (**x).clone())?;
            let first = if *u == 0 { Observable::Erased } else { observe(nbe, x, a)? };
            Observable::pair(first, observe(nbe, y, &bty)?)
        }
        (TyVal::Pi(..) | TyVal::Universe | TyVal::El(_) | TyVal::Reflect(_) | TyVal::Id(..), _) => {
            return Err(ObserveError::NotObservable(ty_name(ty)))
        }
        _ => return Err(bad()),
    })
}

/// Whether `ty` has only first-order values (checked on its outer shape;
/// dependent components are checked when instantiated).
pub fn is_first_order(ty: &TyVal) -> bool {
    match ty {
        TyVal::Unit | TyVal::Bool | TyVal::Nat | TyVal::Diamond => true,
        TyVal::List(a) => is_first_order(a),
        TyVal::Tensor(_, a, _) => is_first_order(a),
        _ => false,
    }
}

/// Random input of scale `n`: the first natural is `n` itself (so that
/// length indices match), later naturals are drawn from `0..=n`, lists have
/// length `n`.
/// `first` tracks whether that natural has been drawn yet, across calls.
pub fn sample_input<R: Rng>(nbe: &Nbe, ty: &TyVal, n: u64, rng: &mut R, first: &mut bool) -> ObsResult<Observable> {
    sample(nbe, ty, n, rng, first)
}

fn sample<R: Rng>(nbe: &Nbe, ty: &TyVal, n: u64, rng: &mut R, first: &mut bool) -> ObsResult<Observable> {
    Ok(match ty {
        TyVal::Unit => Observable::Unit,
        TyVal::Diamond => Observable::Diamond,
        TyVal::Bool => Observable::Bool(rng.random()),
        TyVal::Nat => {
            if std::mem::take(first) {
                Observable::Nat(n)
            } else {
                Observable::Nat(rng.random_range(0..=n))
            }
        }
        TyVal::List(a) => Observable::List((0..n).map(|_| sample(nbe, a, n, rng, first)).collect::<ObsResult<_>>()?),
        TyVal::Tensor(_, a, b) => {
            let x = sample(nbe, a, n, rng, first)?;
            let bty = nbe.inst_ty(b, x.to_val())?;
            Observable::pair(x, sample(nbe, &bty, n, rng, first)?)
        }
        _ => return Err(ObserveError::NotObservable(ty_name(ty))),
    })
}

/// Reshapes a literal to fit `ty`. A list literal given for a
/// length-indexed type `(n : Nat) * T n` becomes its length paired with
/// the nested components.
pub fn fit(nbe: &Nbe, o: Observable, ty: &TyVal) -> ObsResult<Observable> {
    match (ty, o) {
        (TyVal::Tensor(_, a, b), Observable::List(xs)) if matches!(**a, TyVal::Nat) => {
            let len = Observable::Nat(xs.len() as u64);
            let bty = nbe.inst_ty(b, len.to_val())?;
            let rest = fit_spine(nbe, xs, &bty)?;
            Ok(Observable::pair(len, rest))
        }
        (TyVal::Tensor(_, a, b), Observable::Pair(x, y)) => {
            let x = fit(nbe, *x, a)?;
            let bty = nbe.inst_ty(b, x.to_val())?;
            Ok(Observable::pair(x, fit(nbe, *y, &bty)?))
        }
        (TyVal::List(a), Observable::List(xs)) => {
            Ok(Observable::List(xs.into_iter().map(|x| fit(nbe, x, a)).collect::<ObsResult<_>>()?))
        }
        (TyVal::Diamond, Observable::Unit) => Ok(Observable::Diamond),
        (_, o) => Ok(o),
    }
}

fn fit_spine(nbe: &Nbe, mut xs: Vec<Observable>, ty: &TyVal) -> ObsResult<Observable> {
    match ty {
        TyVal::Unit if xs.is_empty() => Ok(Observable::Unit),
        TyVal::Tensor(_, a, b) if !xs.is_empty() => {
            let x = fit(nbe, xs.remove(0), a)?;
            let bty = nbe.inst_ty(b, x.to_val())?;
            Ok(Observable::pair(x, fit_spine(nbe, xs, &bty)?))
        }
        _ => Err(ObserveError::Mismatch(ty_name(ty))),
    }
}

/// Parses a value literal: `42`, `true`, `false`, `()`, `<*>`, `[a, b]`,
/// `(a, b, c)`.
pub fn parse_literal(src: &str) -> ObsResult<Observable> {
    let mut p = LitParser { s: src.as_bytes(), pos: 0 };
    let v = p.value()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(v)
}

struct LitParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl LitParser<'_> {
    fn err(&self, msg: &str) -> ObserveError {
        ObserveError::Literal { pos: self.pos, msg: msg.to_string() }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, t: &str) -> bool {
        self.ws();
        if self.s[self.pos..].starts_with(t.as_bytes()) {
            self.pos += t.len();
            true
        } else {
            false
        }
    }

    fn items(&mut self, close: &str) -> ObsResult<Vec<Observable>> {
        let mut out = vec![];
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(self.value()?);
            if self.eat(close) {
                return Ok(out);
            }
            if !self.eat(",") {
                return Err(self.err(&format!("expected `,` or `{}`", close)));
            }
        }
    }

    fn value(&mut self) -> ObsResult<Observable> {
        self.ws();
        if self.eat("<*>") {
            return Ok(Observable::Diamond);
        }
        if self.eat("true") {
            return Ok(Observable::Bool(true));
        }
        if self.eat("false") {
            return Ok(Observable::Bool(false));
        }
        if self.eat("[") {
            return Ok(Observable::List(self.items("]")?));
        }
        if self.eat("(") {
            let xs = self.items(")")?;
            return Ok(if xs.is_empty() { Observable::Unit } else { Observable::tuple(xs) });
        }
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a value"));
        }
        let digits = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
        digits.parse().map(Observable::Nat).map_err(|_| ObserveError::Literal { pos: start, msg: "number too large".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::nbe::VEnv;
    use crate::kernel::syntax::TypeExpr;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tyv(t: &TypeExpr) -> TyVal {
        Nbe::new(Regime::Lfpl).eval_ty(&VEnv::new(), t).unwrap()
    }

    #[test]
    fn literals() {
        assert_eq!(parse_literal("3").unwrap(), Observable::Nat(3));
        assert_eq!(parse_literal(" ( ) ").unwrap(), Observable::Unit);
        assert_eq!(
            parse_literal("(1, true, <*>)").unwrap(),
            Observable::pair(Observable::Nat(1), Observable::pair(Observable::Bool(true), Observable::Diamond))
        );
        assert_eq!(parse_literal("[]").unwrap(), Observable::List(vec![]));
        assert!(parse_literal("[1,").is_err());
        assert!(parse_literal("1 2").is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["(1, true, <*>)", "[3, 1, 2]", "()", "((1, 2), false)"] {
            assert_eq!(parse_literal(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn list_of_pairs_round_trips_through_machine() {
        let nbe = Nbe::new(Regime::Lfpl);
        let ty = tyv(&TypeExpr::list(TypeExpr::tensor(1, TypeExpr::Nat, TypeExpr::Bool)));
        let o = parse_literal("[(2, true), (0, false)]").unwrap();
        let m = encode(&nbe, &o, &ty).unwrap();
        assert_eq!(decode(&nbe, &m, &ty).unwrap(), o);
    }

    #[test]
    fn sampled_first_nat_is_the_scale() {
        let nbe = Nbe::new(Regime::Lfpl);
        let ty = tyv(&TypeExpr::tensor(1, TypeExpr::Nat, TypeExpr::list(TypeExpr::Nat)));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let o = sample_input(&nbe, &ty, 4, &mut rng, &mut true).unwrap();
        let Observable::Pair(a, b) = &o else { panic!() };
        assert_eq!(**a, Observable::Nat(4));
        let Observable::List(xs) = &**b else { panic!() };
        assert_eq!(xs.len(), 4);
        assert!(o.nats().iter().all(|&k| k <= 4));
    }

    #[test]
    fn potentials_of_inputs() {
        let o = parse_literal("(2, <*>, 3)").unwrap();
        assert_eq!(o.potential(MonoidKind::PlusPoly).size, 3 + 1 + 4);
        assert_eq!(o.potential(MonoidKind::MaxPoly).size, 4);
    }

    fn obs() -> impl Strategy<Value = (Observable, TypeExpr)> {
        let leaf = prop_oneof![
            Just((Observable::Unit, TypeExpr::Unit)),
            Just((Observable::Diamond, TypeExpr::Diamond)),
            any::<bool>().prop_map(|b| (Observable::Bool(b), TypeExpr::Bool)),
            (0u64..40).prop_map(|n| (Observable::Nat(n), TypeExpr::Nat)),
        ];
        leaf.prop_recursive(4, 32, 4, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|((a, ta), (b, tb))| (Observable::pair(a, b), TypeExpr::tensor(1, ta, tb))),
                (inner, 0usize..4).prop_map(|((a, ta), k)| (Observable::List(vec![a; k]), TypeExpr::list(ta))),
            ]
        })
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip((o, t) in obs()) {
            let nbe = Nbe::new(Regime::Lfpl);
            let ty = tyv(&t);
            let m = encode(&nbe, &o, &ty).unwrap();
            prop_assert_eq!(decode(&nbe, &m, &ty).unwrap(), o.clone());
            let v = o.to_val();
            prop_assert_eq!(observe(&nbe, &v, &ty).unwrap(), o);
        }
    }
}
