//! Untyped call-by-value machine with exact step counting.
//!
//! Expressions use de Bruijn indices counted from the right end of the
//! environment. Every rule costs one step at its root; sequencing adds the
//! costs of both halves, and the eliminators add the cost of their premise.

use std::fmt;
use std::sync::{Arc, LazyLock};

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MachineExpr {
    Lam(Arc<MachineExpr>),
    Unit,
    MkPair(usize, usize),
    True,
    False,
    Var(usize),
    Seq(Arc<MachineExpr>, Arc<MachineExpr>),
    App(usize, usize),
    LetPair(usize, Arc<MachineExpr>),
    If(usize, Arc<MachineExpr>, Arc<MachineExpr>),
}

impl MachineExpr {
    pub fn lam(body: MachineExpr) -> Self {
        MachineExpr::Lam(Arc::new(body))
    }

    pub fn seq(first: MachineExpr, rest: MachineExpr) -> Self {
        MachineExpr::Seq(Arc::new(first), Arc::new(rest))
    }

    pub fn let_pair(i: usize, body: MachineExpr) -> Self {
        MachineExpr::LetPair(i, Arc::new(body))
    }

    pub fn if_(i: usize, then_b: MachineExpr, else_b: MachineExpr) -> Self {
        MachineExpr::If(i, Arc::new(then_b), Arc::new(else_b))
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        match self {
            MachineExpr::Lam(b) => 1 + b.size(),
            MachineExpr::Seq(a, b) => 1 + a.size() + b.size(),
            MachineExpr::LetPair(_, b) => 1 + b.size(),
            MachineExpr::If(_, a, b) => 1 + a.size() + b.size(),
            _ => 1,
        }
    }

    /// Checks that every index is in range when the expression runs in an
    /// environment of `depth` values.
    pub fn is_closed_at(&self, depth: usize) -> bool {
        match self {
            MachineExpr::Lam(b) => b.is_closed_at(depth + 2),
            MachineExpr::Unit | MachineExpr::True | MachineExpr::False => true,
            MachineExpr::MkPair(i, j) | MachineExpr::App(i, j) => *i < depth && *j < depth,
            MachineExpr::Var(i) => *i < depth,
            MachineExpr::Seq(a, b) => a.is_closed_at(depth) && b.is_closed_at(depth + 1),
            MachineExpr::LetPair(i, b) => *i < depth && b.is_closed_at(depth + 2),
            MachineExpr::If(i, a, b) => *i < depth && a.is_closed_at(depth) && b.is_closed_at(depth),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MachineValue {
    Clo(Arc<MachineExpr>, Env),
    Unit,
    Pair(Arc<MachineValue>, Arc<MachineValue>),
    True,
    False,
}

impl MachineValue {
    pub fn pair(a: MachineValue, b: MachineValue) -> Self {
        MachineValue::Pair(Arc::new(a), Arc::new(b))
    }

    pub fn boolean(b: bool) -> Self {
        if b {
            MachineValue::True
        } else {
            MachineValue::False
        }
    }
}

static PLACEHOLDER: LazyLock<Arc<MachineValue>> = LazyLock::new(|| Arc::new(MachineValue::Unit));

impl Drop for MachineValue {
    // Deeply nested pairs (long naturals) would otherwise drop recursively.
    fn drop(&mut self) {
        let MachineValue::Pair(a, b) = self else { return };
        let mut pending = vec![
            std::mem::replace(a, PLACEHOLDER.clone()),
            std::mem::replace(b, PLACEHOLDER.clone()),
        ];
        while let Some(v) = pending.pop() {
            if let Ok(MachineValue::Pair(a, b)) = Arc::try_unwrap(v).as_mut() {
                pending.push(std::mem::replace(a, PLACEHOLDER.clone()));
                pending.push(std::mem::replace(b, PLACEHOLDER.clone()));
            }
        }
    }
}

/// Environment extended on the right; index 0 is the most recent entry.
#[derive(Clone, Default)]
pub struct Env(Option<Arc<EnvNode>>);

struct EnvNode {
    value: MachineValue,
    rest: Env,
    len: usize,
}

impl Env {
    pub fn new() -> Self {
        Env(None)
    }

    /// Builds an environment from values listed left to right.
    pub fn from_values<I: IntoIterator<Item = MachineValue>>(values: I) -> Self {
        values.into_iter().fold(Env::new(), |env, v| env.push(v))
    }

    pub fn push(&self, value: MachineValue) -> Self {
        let len = self.len() + 1;
        Env(Some(Arc::new(EnvNode { value, rest: self.clone(), len })))
    }

    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.len)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn get(&self, i: usize) -> Option<&MachineValue> {
        let mut cur = self.0.as_ref()?;
        for _ in 0..i {
            cur = cur.rest.0.as_ref()?;
        }
        Some(&cur.value)
    }

    /// Values listed left to right.
    pub fn to_vec(&self) -> Vec<MachineValue> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = &self.0;
        while let Some(node) = cur {
            out.push(node.value.clone());
            cur = &node.rest.0;
        }
        out.reverse();
        out
    }
}

impl PartialEq for Env {
    fn eq(&self, other: &Self) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let (mut a, mut b) = (&self.0, &other.0);
        loop {
            match (a, b) {
                (Some(x), Some(y)) => {
                    if Arc::ptr_eq(x, y) {
                        return true;
                    }
                    if x.value != y.value {
                        return false;
                    }
                    a = &x.rest.0;
                    b = &y.rest.0;
                }
                (None, None) => return true,
                _ => return false,
            }
        }
    }
}

impl Eq for Env {}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_vec()).finish()
    }
}

impl Drop for EnvNode {
    // Long environment chains would otherwise drop recursively.
    fn drop(&mut self) {
        let mut next = self.rest.0.take();
        while let Some(node) = next {
            match Arc::try_unwrap(node) {
                Ok(mut inner) => next = inner.rest.0.take(),
                Err(_) => break,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalOutcome {
    Done { value: MachineValue, steps: u64 },
    OutOfFuel,
    Stuck(String),
}

impl EvalOutcome {
    pub fn steps(&self) -> Option<u64> {
        match self {
            EvalOutcome::Done { steps, .. } => Some(*steps),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<&MachineValue> {
        match self {
            EvalOutcome::Done { value, .. } => Some(value),
            _ => None,
        }
    }
}

/// Per-rule step costs. The default charges one step for every rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostModel {
    pub mk_clo: u64,
    pub mk_unit: u64,
    pub mk_pair: u64,
    pub mk_true: u64,
    pub mk_false: u64,
    pub access: u64,
    pub seq: u64,
    pub app: u64,
    pub let_pair: u64,
    pub if_: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            mk_clo: 1,
            mk_unit: 1,
            mk_pair: 1,
            mk_true: 1,
            mk_false: 1,
            access: 1,
            seq: 1,
            app: 1,
            let_pair: 1,
            if_: 1,
        }
    }
}

/// One rule application, reported to a tracer in evaluation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    MkClo,
    MkUnit,
    MkPair,
    MkTrue,
    MkFalse,
    Access,
    Seq,
    App,
    LetPair,
    IfTrue,
    IfFalse,
}

pub fn eval(e: &MachineExpr, env: &Env, fuel: u64) -> EvalOutcome {
    eval_with(&CostModel::default(), e, env, fuel, &mut |_, _| {})
}

enum Frame {
    // Continue with `rest` in `env` extended by the produced value.
    Seq(Arc<MachineExpr>, Env),
}

/// Evaluates with an explicit control stack. The tracer receives each rule
/// together with the environment depth where it fired.
pub fn eval_with(
    costs: &CostModel,
    e: &MachineExpr,
    env: &Env,
    fuel: u64,
    trace: &mut dyn FnMut(Rule, usize),
) -> EvalOutcome {
    let mut steps: u64 = 0;
    let mut stack: Vec<Frame> = Vec::new();
    let mut cur: Arc<MachineExpr> = Arc::new(e.clone());
    let mut cur_env = env.clone();

    macro_rules! charge {
        ($rule:expr, $cost:expr) => {{
            trace($rule, cur_env.len());
            steps = steps.saturating_add($cost);
            if steps > fuel {
                return EvalOutcome::OutOfFuel;
            }
        }};
    }
    macro_rules! lookup {
        ($i:expr) => {
            match cur_env.get($i) {
                Some(v) => v.clone(),
                None => {
                    return EvalOutcome::Stuck(format!(
                        "index {} out of range in environment of length {}",
                        $i,
                        cur_env.len()
                    ))
                }
            }
        };
    }

    loop {
        let value = match &*cur {
            MachineExpr::Lam(body) => {
                charge!(Rule::MkClo, costs.mk_clo);
                MachineValue::Clo(body.clone(), cur_env.clone())
            }
            MachineExpr::Unit => {
                charge!(Rule::MkUnit, costs.mk_unit);
                MachineValue::Unit
            }
            MachineExpr::True => {
                charge!(Rule::MkTrue, costs.mk_true);
                MachineValue::True
            }
            MachineExpr::False => {
                charge!(Rule::MkFalse, costs.mk_false);
                MachineValue::False
            }
            MachineExpr::MkPair(i, j) => {
                let a = lookup!(*i);
                let b = lookup!(*j);
                charge!(Rule::MkPair, costs.mk_pair);
                MachineValue::pair(a, b)
            }
            MachineExpr::Var(i) => {
                let v = lookup!(*i);
                charge!(Rule::Access, costs.access);
                v
            }
            MachineExpr::Seq(first, rest) => {
                charge!(Rule::Seq, costs.seq);
                stack.push(Frame::Seq(rest.clone(), cur_env.clone()));
                cur = first.clone();
                continue;
            }
            MachineExpr::App(i, j) => {
                let f = lookup!(*i);
                let arg = lookup!(*j);
                match &f {
                    MachineValue::Clo(body, captured) => {
                        charge!(Rule::App, costs.app);
                        let callee = captured.push(f.clone()).push(arg);
                        cur = body.clone();
                        cur_env = callee;
                        continue;
                    }
                    other => {
                        return EvalOutcome::Stuck(format!(
                            "application of a non-closure {}",
                            other
                        ))
                    }
                }
            }
            MachineExpr::LetPair(i, body) => match &lookup!(*i) {
                MachineValue::Pair(a, b) => {
                    charge!(Rule::LetPair, costs.let_pair);
                    cur_env = cur_env.push((**a).clone()).push((**b).clone());
                    cur = body.clone();
                    continue;
                }
                other => return EvalOutcome::Stuck(format!("letpair on a non-pair {}", other)),
            },
            MachineExpr::If(i, then_b, else_b) => match &lookup!(*i) {
                MachineValue::True => {
                    charge!(Rule::IfTrue, costs.if_);
                    cur = then_b.clone();
                    continue;
                }
                MachineValue::False => {
                    charge!(Rule::IfFalse, costs.if_);
                    cur = else_b.clone();
                    continue;
                }
                other => return EvalOutcome::Stuck(format!("if on a non-boolean {}", other)),
            },
        };
        match stack.pop() {
            None => return EvalOutcome::Done { value, steps },
            Some(Frame::Seq(rest, env)) => {
                cur_env = env.push(value);
                cur = rest;
            }
        }
    }
}

/// natValue(0) = (true, *) and natValue(n + 1) = (false, natValue(n)).
pub fn nat_value(n: u64) -> MachineValue {
    let mut v = MachineValue::pair(MachineValue::True, MachineValue::Unit);
    for _ in 0..n {
        v = MachineValue::pair(MachineValue::False, v);
    }
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("value does not encode {expected}: {found}")]
pub struct DecodeError {
    pub expected: &'static str,
    pub found: String,
}

pub fn decode_nat(v: &MachineValue) -> Result<u64, DecodeError> {
    let mut n = 0u64;
    let mut cur = v;
    while let MachineValue::Pair(tag, rest) = cur {
        match (&**tag, &**rest) {
            (MachineValue::True, MachineValue::Unit) => return Ok(n),
            (MachineValue::False, _) => {
                n += 1;
                cur = rest;
            }
            _ => break,
        }
    }
    Err(DecodeError { expected: "a natural number", found: v.to_string() })
}

/// nil is (false, *) and cons is (true, (head, tail)).
pub fn encode_list<I>(items: I) -> MachineValue
where
    I: IntoIterator<Item = MachineValue>,
    I::IntoIter: DoubleEndedIterator,
{
    items.into_iter().rev().fold(
        MachineValue::pair(MachineValue::False, MachineValue::Unit),
        |tail, head| MachineValue::pair(MachineValue::True, MachineValue::pair(head, tail)),
    )
}

pub fn decode_list(v: &MachineValue) -> Result<Vec<MachineValue>, DecodeError> {
    let mut out = Vec::new();
    let mut cur = v;
    loop {
        let err = || DecodeError { expected: "a list", found: v.to_string() };
        match cur {
            MachineValue::Pair(tag, rest) => match (&**tag, &**rest) {
                (MachineValue::False, MachineValue::Unit) => return Ok(out),
                (MachineValue::True, MachineValue::Pair(h, t)) => {
                    out.push((**h).clone());
                    cur = t;
                }
                _ => return Err(err()),
            },
            _ => return Err(err()),
        }
    }
}

// Debug format: s-expressions.
//
//   expr  ::= (lam E) | unit | (pair i j) | true | false | (var i)
//           | (seq E E) | (app i j) | (letpair i E) | (if i E E)
//   value ::= (clo E (env V*)) | unit | (pair V V) | true | false
//
// In value position `(pair ...)` holds two values rather than two indices.

impl fmt::Display for MachineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineExpr::Lam(b) => write!(f, "(lam {})", b),
            MachineExpr::Unit => write!(f, "unit"),
            MachineExpr::MkPair(i, j) => write!(f, "(pair {} {})", i, j),
            MachineExpr::True => write!(f, "true"),
            MachineExpr::False => write!(f, "false"),
            MachineExpr::Var(i) => write!(f, "(var {})", i),
            MachineExpr::Seq(a, b) => write!(f, "(seq {} {})", a, b),
            MachineExpr::App(i, j) => write!(f, "(app {} {})", i, j),
            MachineExpr::LetPair(i, b) => write!(f, "(letpair {} {})", i, b),
            MachineExpr::If(i, a, b) => write!(f, "(if {} {} {})", i, a, b),
        }
    }
}

impl fmt::Display for MachineValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineValue::Clo(body, env) => {
                write!(f, "(clo {} (env", body)?;
                for v in env.to_vec() {
                    write!(f, " {}", v)?;
                }
                write!(f, "))")
            }
            MachineValue::Unit => write!(f, "unit"),
            MachineValue::Pair(a, b) => write!(f, "(pair {} {})", a, b),
            MachineValue::True => write!(f, "true"),
            MachineValue::False => write!(f, "false"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("machine syntax error at byte {pos}: {msg}")]
pub struct SexprError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

fn read_sexp(src: &str) -> Result<Sexp, SexprError> {
    let bytes = src.as_bytes();
    let mut pos = 0;
    let s = read_one(bytes, &mut pos)?;
    skip_ws(bytes, &mut pos);
    if pos != bytes.len() {
        return Err(SexprError { pos, msg: "trailing input".into() });
    }
    Ok(s)
}

fn skip_ws(b: &[u8], pos: &mut usize) {
    while *pos < b.len() && b[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
}

fn read_one(b: &[u8], pos: &mut usize) -> Result<Sexp, SexprError> {
    skip_ws(b, pos);
    let start = *pos;
    match b.get(*pos) {
        None => Err(SexprError { pos: *pos, msg: "unexpected end of input".into() }),
        Some(b'(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(b, pos);
                match b.get(*pos) {
                    Some(b')') => {
                        *pos += 1;
                        return Ok(Sexp::List(items, start));
                    }
                    None => return Err(SexprError { pos: *pos, msg: "unclosed '('".into() }),
                    _ => items.push(read_one(b, pos)?),
                }
            }
        }
        Some(b')') => Err(SexprError { pos: *pos, msg: "unexpected ')'".into() }),
        Some(_) => {
            while *pos < b.len() && !b[*pos].is_ascii_whitespace() && b[*pos] != b'(' && b[*pos] != b')' {
                *pos += 1;
            }
            Ok(Sexp::Atom(String::from_utf8_lossy(&b[start..*pos]).into_owned(), start))
        }
    }
}

fn sexp_pos(s: &Sexp) -> usize {
    match s {
        Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
    }
}

fn index_of(s: &Sexp) -> Result<usize, SexprError> {
    match s {
        Sexp::Atom(a, p) => a
            .parse()
            .map_err(|_| SexprError { pos: *p, msg: format!("expected an index, found `{}`", a) }),
        Sexp::List(_, p) => Err(SexprError { pos: *p, msg: "expected an index".into() }),
    }
}

fn expr_of(s: &Sexp) -> Result<MachineExpr, SexprError> {
    let bad = |msg: &str| SexprError { pos: sexp_pos(s), msg: msg.to_string() };
    match s {
        Sexp::Atom(a, _) => match a.as_str() {
            "unit" => Ok(MachineExpr::Unit),
            "true" => Ok(MachineExpr::True),
            "false" => Ok(MachineExpr::False),
            _ => Err(bad("unknown expression atom")),
        },
        Sexp::List(items, _) => {
            let head = match items.first() {
                Some(Sexp::Atom(h, _)) => h.as_str(),
                _ => return Err(bad("expected a keyword")),
            };
            let args = &items[1..];
            match (head, args.len()) {
                ("lam", 1) => Ok(MachineExpr::lam(expr_of(&args[0])?)),
                ("pair", 2) => Ok(MachineExpr::MkPair(index_of(&args[0])?, index_of(&args[1])?)),
                ("var", 1) => Ok(MachineExpr::Var(index_of(&args[0])?)),
                ("seq", 2) => Ok(MachineExpr::seq(expr_of(&args[0])?, expr_of(&args[1])?)),
                ("app", 2) => Ok(MachineExpr::App(index_of(&args[0])?, index_of(&args[1])?)),
                ("letpair", 2) => Ok(MachineExpr::let_pair(index_of(&args[0])?, expr_of(&args[1])?)),
                ("if", 3) => Ok(MachineExpr::if_(
                    index_of(&args[0])?,
                    expr_of(&args[1])?,
                    expr_of(&args[2])?,
                )),
                _ => Err(bad("malformed expression")),
            }
        }
    }
}

fn value_of(s: &Sexp) -> Result<MachineValue, SexprError> {
    let bad = |msg: &str| SexprError { pos: sexp_pos(s), msg: msg.to_string() };
    match s {
        Sexp::Atom(a, _) => match a.as_str() {
            "unit" => Ok(MachineValue::Unit),
            "true" => Ok(MachineValue::True),
            "false" => Ok(MachineValue::False),
            _ => Err(bad("unknown value atom")),
        },
        Sexp::List(items, _) => match items.first() {
            Some(Sexp::Atom(h, _)) if h == "pair" && items.len() == 3 => {
                Ok(MachineValue::pair(value_of(&items[1])?, value_of(&items[2])?))
            }
            Some(Sexp::Atom(h, _)) if h == "clo" && items.len() == 3 => {
                let body = expr_of(&items[1])?;
                let env = match &items[2] {
                    Sexp::List(vs, _) if matches!(vs.first(), Some(Sexp::Atom(e, _)) if e == "env") => {
                        vs[1..].iter().map(value_of).collect::<Result<Vec<_>, _>>()?
                    }
                    other => {
                        return Err(SexprError { pos: sexp_pos(other), msg: "expected (env ...)".into() })
                    }
                };
                Ok(MachineValue::Clo(Arc::new(body), Env::from_values(env)))
            }
            _ => Err(bad("malformed value")),
        },
    }
}

impl std::str::FromStr for MachineExpr {
    type Err = SexprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        expr_of(&read_sexp(s)?)
    }
}

impl std::str::FromStr for MachineValue {
    type Err = SexprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        value_of(&read_sexp(s)?)
    }
}
