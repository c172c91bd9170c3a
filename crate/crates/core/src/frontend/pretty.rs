//! Prints core terms back as surface syntax that resolves to the same term.
//! The binder at context level `L` is written `vL`.

use crate::kernel::syntax::{Motive, Term, TypeExpr};

const EXPR: u8 = 0;
const PROD: u8 = 1;
const APP: u8 = 2;
const ATOM: u8 = 3;

pub fn pretty_term(t: &Term, depth: usize) -> String {
    term(t, depth, EXPR)
}

pub fn pretty_type(t: &TypeExpr, depth: usize) -> String {
    ty(t, depth, EXPR, false)
}

fn name(level: usize) -> String {
    format!("v{}", level)
}

fn var(i: usize, depth: usize) -> String {
    if i < depth {
        name(depth - 1 - i)
    } else {
        format!("?{}", i - depth)
    }
}

fn paren(s: String, have: u8, need: u8) -> String {
    if have < need {
        format!("({})", s)
    } else {
        s
    }
}

fn ret(m: &Motive, depth: usize) -> String {
    match m {
        Some(p) => format!(" return {}. {}", name(depth), ty(p, depth + 1, EXPR, false)),
        None => String::new(),
    }
}

fn call(f: &str, args: &[&Term], depth: usize) -> String {
    let a: Vec<String> = args.iter().map(|x| term(x, depth, EXPR)).collect();
    format!("{}({})", f, a.join(", "))
}

fn term(t: &Term, d: usize, need: u8) -> String {
    let (s, have) = match t {
        Term::Var(i) => (var(*i, d), ATOM),
        Term::Lam(_) => {
            let mut names = Vec::new();
            let mut body = t;
            while let Term::Lam(b) = body {
                names.push(name(d + names.len()));
                body = b;
            }
            (format!("\\{}. {}", names.join(" "), term(body, d + names.len(), EXPR)), EXPR)
        }
        // a bare `zero` directly before `(` would read as `zero(..)`
        // a bare `zero` next to a parenthesised argument would read back as `zero(..)`
        Term::App(f, x) => {
            let side = |t: &Term, need| if matches!(t, Term::ZeroCF) { "(zero)".into() } else { term(t, d, need) };
            (format!("{} {}", side(f, APP), side(x, ATOM)), APP)
        }
        Term::Pair(..) => {
            let mut items = Vec::new();
            let mut cur = t;
            while let Term::Pair(x, rest) = cur {
                items.push(term(x, d, EXPR));
                cur = rest;
            }
            items.push(term(cur, d, EXPR));
            (format!("({})", items.join(", ")), ATOM)
        }
        Term::Fst(x) => (call("fst", &[x], d), ATOM),
        Term::Snd(x) => (call("snd", &[x], d), ATOM),
        Term::LetPair { scrut, body, motive } => (
            format!(
                "let ({}, {}) = {}{} in {}",
                name(d),
                name(d + 1),
                term(scrut, d, EXPR),
                ret(motive, d),
                term(body, d + 2, EXPR)
            ),
            EXPR,
        ),
        Term::Star => ("()".into(), ATOM),
        Term::LetUnit { scrut, body, motive } => (
            format!("let () = {}{} in {}", term(scrut, d, EXPR), ret(motive, d), term(body, d, EXPR)),
            EXPR,
        ),
        Term::True => ("true".into(), ATOM),
        Term::False => ("false".into(), ATOM),
        Term::If { scrut, then_b, else_b, motive } => (
            format!(
                "if {}{} then {} else {}",
                term(scrut, d, EXPR),
                ret(motive, d),
                term(then_b, d, EXPR),
                term(else_b, d, EXPR)
            ),
            EXPR,
        ),
        Term::Nil => ("nil".into(), ATOM),
        Term::Cons(h, tl) => (call("cons", &[h, tl], d), ATOM),
        Term::MatchList { scrut, nil_b, cons_b, motive } => (
            format!(
                "match {}{} with | nil => {} | cons {} {} => {}",
                term(scrut, d, EXPR),
                ret(motive, d),
                term(nil_b, d, EXPR),
                name(d),
                name(d + 1),
                term(cons_b, d + 2, EXPR)
            ),
            EXPR,
        ),
        Term::RecList { scrut, nil_b, cons_b, motive } => (
            format!(
                "reclist {}{} with | nil => {} | cons {} {} {} => {}",
                term(scrut, d, EXPR),
                ret(motive, d),
                term(nil_b, d, EXPR),
                name(d),
                name(d + 1),
                name(d + 2),
                term(cons_b, d + 3, EXPR)
            ),
            EXPR,
        ),
        Term::ZeroCF => ("zero".into(), ATOM),
        Term::SuccCF(x) => (call("succ", &[x], d), ATOM),
        Term::DupNat(x) => (call("dup", &[x], d), ATOM),
        Term::RecNatCF { scrut, zero_b, succ_b, motive } => (
            format!(
                "rec {}{} with | zero => {} | succ {} {} => {}",
                term(scrut, d, EXPR),
                ret(motive, d),
                term(zero_b, d, EXPR),
                name(d),
                name(d + 1),
                term(succ_b, d + 2, EXPR)
            ),
            EXPR,
        ),
        Term::DiamondStar => ("<*>".into(), ATOM),
        Term::ZeroL(x) => (call("zero", &[x], d), ATOM),
        Term::SuccL(x, y) => (call("succ", &[x, y], d), ATOM),
        Term::RecNatL { scrut, zero_b, succ_b, motive } => (
            format!(
                "rec {}{} with | zero {} => {} | succ {} {} {} => {}",
                term(scrut, d, EXPR),
                ret(motive, d),
                name(d),
                term(zero_b, d + 1, EXPR),
                name(d),
                name(d + 1),
                name(d + 2),
                term(succ_b, d + 3, EXPR)
            ),
            EXPR,
        ),
        Term::Refl(x) => (call("refl", &[x], d), ATOM),
        Term::ReflectIntro(x) => (call("R", &[x], d), ATOM),
        Term::ReflectElim(x) => (call("R^-1", &[x], d), ATOM),
        Term::Code(t) => match &**t {
            TypeExpr::El(x) => (call("El", &[x], d), ATOM),
            TypeExpr::Reflect(a) => (format!("R({})", ty(a, d, EXPR, true)), ATOM),
            other => return ty(other, d, need, false),
        },
        Term::Ann(x, a) => (format!("({} : {})", term(x, d, EXPR), ty(a, d, EXPR, false)), ATOM),
    };
    paren(s, have, need)
}

/// `explicit_el` forces `El(..)` so the result stays a syntactic type former.
fn ty(t: &TypeExpr, d: usize, need: u8, explicit_el: bool) -> String {
    let (s, have) = match t {
        TypeExpr::Pi(u, a, b) => {
            let cod = ty(b, d + 1, EXPR, false);
            if *u == 1 && !b.mentions(0) {
                (format!("{} -> {}", ty(a, d, PROD, explicit_el), cod), EXPR)
            } else {
                (format!("({} ^{} : {}) -> {}", name(d), u, ty(a, d, EXPR, false), cod), EXPR)
            }
        }
        TypeExpr::Tensor(u, a, b) => {
            let snd = ty(b, d + 1, PROD, false);
            if *u == 1 && !b.mentions(0) {
                (format!("{} * {}", ty(a, d, APP, explicit_el), snd), PROD)
            } else {
                (format!("({} ^{} : {}) * {}", name(d), u, ty(a, d, EXPR, false), snd), PROD)
            }
        }
        TypeExpr::Unit => ("Unit".into(), ATOM),
        TypeExpr::Bool => ("Bool".into(), ATOM),
        TypeExpr::Nat => ("Nat".into(), ATOM),
        TypeExpr::Diamond => ("<>".into(), ATOM),
        TypeExpr::Universe => ("U".into(), ATOM),
        TypeExpr::List(a) => (format!("List({})", ty(a, d, EXPR, false)), ATOM),
        TypeExpr::Id(a, l, r) => (
            format!("Id({}, {}, {})", ty(a, d, EXPR, false), term(l, d, EXPR), term(r, d, EXPR)),
            ATOM,
        ),
        TypeExpr::Reflect(a) => (format!("R({})", ty(a, d, EXPR, true)), ATOM),
        TypeExpr::El(x) => match &**x {
            Term::Var(_) | Term::App(..) if !explicit_el => return term(x, d, need),
            _ => (call("El", &[x], d), ATOM),
        },
    };
    paren(s, have, need)
}
