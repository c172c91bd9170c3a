use super::ast::{Builtin, Expr, ExprKind, Param, Ret, SourceDecl, SourceModule};
use super::lexer::{lex, Tok, Token};
use super::{DiagResult, Diagnostic, Span};

const KEYWORDS: &[&str] = &[
    "def", "let", "in", "if", "then", "else", "match", "with", "reclist", "rec", "irec", "of", "return", "nil", "cons",
    "zero", "succ", "dup", "fst", "snd", "refl", "R", "El", "List", "Id", "Unit", "Bool", "Nat", "U", "true", "false",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn parse(src: &str) -> DiagResult<SourceModule> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    p.module()
}

/// Parses a single expression, for tests and tools.
pub fn parse_expr(src: &str) -> DiagResult<Expr> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_end(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> DiagResult<T> {
        Err(Diagnostic::syntax(self.span(), msg))
    }

    fn expect(&mut self, t: Tok) -> DiagResult<Span> {
        if *self.peek() == t {
            Ok(self.bump().span)
        } else {
            self.err(format!("expected {}, found {}", t.describe(), self.peek().describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> DiagResult<Span> {
        if self.is_kw(kw) {
            Ok(self.bump().span)
        } else {
            self.err(format!("expected `{}`, found {}", kw, self.peek().describe()))
        }
    }

    fn name(&mut self) -> DiagResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected a name, found {}", other.describe())),
        }
    }

    fn usage(&mut self) -> DiagResult<u64> {
        self.expect(Tok::Caret)?;
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            other => self.err(format!("expected a usage after `^`, found {}", other.describe())),
        }
    }

    fn module(&mut self) -> DiagResult<SourceModule> {
        let mut m = SourceModule::default();
        loop {
            match self.peek().clone() {
                Tok::Eof => return Ok(m),
                Tok::Pragma(p) => {
                    let sp = self.bump().span;
                    let arg = match self.peek().clone() {
                        Tok::Ident(s) => {
                            self.bump();
                            s
                        }
                        other => return self.err(format!("expected a pragma argument, found {}", other.describe())),
                    };
                    match p.as_str() {
                        "regime" => {
                            m.regime = Some(arg);
                            m.regime_span = Some(sp.join(self.prev_end()));
                        }
                        "debug" => m.debug.push(arg),
                        _ => return Err(Diagnostic::syntax(sp, format!("unknown pragma `#{}`", p))),
                    }
                }
                Tok::Ident(s) if s == "def" => m.decls.push(self.decl()?),
                other => return self.err(format!("expected `def` or a pragma, found {}", other.describe())),
            }
        }
    }

    fn decl(&mut self) -> DiagResult<SourceDecl> {
        let start = self.expect_kw("def")?;
        let name = self.name()?;
        let sigma = if *self.peek() == Tok::Caret { self.usage()? } else { 1 };
        if sigma > 1 {
            return Err(Diagnostic::syntax(self.prev_end(), "declaration fragment must be ^0 or ^1"));
        }
        self.expect(Tok::Colon)?;
        let ty = self.expr()?;
        self.expect(Tok::Eq)?;
        let body = self.expr()?;
        Ok(SourceDecl { name, sigma, ty, body, span: start.join(self.prev_end()) })
    }

    fn ret(&mut self) -> DiagResult<Option<Ret>> {
        if !self.is_kw("return") {
            return Ok(None);
        }
        self.bump();
        let name = self.name()?;
        self.expect(Tok::Dot)?;
        let ty = self.expr()?;
        Ok(Some(Ret { name, ty: Box::new(ty) }))
    }

    fn arm(&mut self, ctor: &str) -> DiagResult<Vec<String>> {
        self.expect(Tok::Bar)?;
        self.expect_kw(ctor)?;
        let mut names = Vec::new();
        while *self.peek() != Tok::FatArrow {
            names.push(self.name()?);
        }
        self.bump();
        Ok(names)
    }

    fn arity_err<T>(&self, start: Span, ctor: &str, want: &str) -> DiagResult<T> {
        Err(Diagnostic::syntax(start.join(self.prev_end()), format!("`{}` arm binds {}", ctor, want)))
    }

    pub fn expr(&mut self) -> DiagResult<Expr> {
        let start = self.span();
        let b = |e: Expr| Box::new(e);
        let kind = match self.peek().clone() {
            Tok::Backslash => {
                self.bump();
                let mut params = Vec::new();
                while *self.peek() != Tok::Dot {
                    if *self.peek() == Tok::LParen {
                        self.bump();
                        let mut names = vec![self.name()?];
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            names.push(self.name()?);
                        }
                        self.expect(Tok::RParen)?;
                        if names.len() < 2 {
                            return self.err("a tuple pattern needs at least two names");
                        }
                        params.push(Param::Tuple(names));
                    } else {
                        params.push(Param::Name(self.name()?));
                    }
                }
                if params.is_empty() {
                    return self.err("a lambda needs at least one parameter");
                }
                self.bump();
                ExprKind::Lam(params, b(self.expr()?))
            }
            Tok::Ident(k) if k == "let" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut pat = Vec::new();
                if *self.peek() != Tok::RParen {
                    pat.push(self.name()?);
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        pat.push(self.name()?);
                    }
                    if pat.len() < 2 {
                        return self.err("a let pattern is `()` or a tuple of at least two names");
                    }
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Eq)?;
                let scrut = self.expr()?;
                let ret = self.ret()?;
                if ret.is_some() && pat.len() > 2 {
                    return self.err("`return` is only supported on unit and pair patterns");
                }
                self.expect_kw("in")?;
                ExprKind::Let { pat, scrut: b(scrut), ret, body: b(self.expr()?) }
            }
            Tok::Ident(k) if k == "if" => {
                self.bump();
                let scrut = self.expr()?;
                let ret = self.ret()?;
                self.expect_kw("then")?;
                let then_b = self.expr()?;
                self.expect_kw("else")?;
                ExprKind::If { scrut: b(scrut), ret, then_b: b(then_b), else_b: b(self.expr()?) }
            }
            Tok::Ident(k) if k == "match" || k == "reclist" => {
                let rec = k == "reclist";
                self.bump();
                let scrut = self.expr()?;
                let ret = self.ret()?;
                self.expect_kw("with")?;
                let a0 = self.span();
                if !self.arm("nil")?.is_empty() {
                    return self.arity_err(a0, "nil", "no names");
                }
                let nil_b = self.expr()?;
                let a1 = self.span();
                let mut names = self.arm("cons")?;
                let cons_b = self.expr()?;
                if rec {
                    if names.len() != 3 {
                        return self.arity_err(a1, "cons", "a head, a tail, and a recursive result");
                    }
                    let rec = names.pop().unwrap();
                    let tail = names.pop().unwrap();
                    let head = names.pop().unwrap();
                    ExprKind::RecList { scrut: b(scrut), ret, nil_b: b(nil_b), head, tail, rec, cons_b: b(cons_b) }
                } else {
                    if names.len() != 2 {
                        return self.arity_err(a1, "cons", "a head and a tail");
                    }
                    let tail = names.pop().unwrap();
                    let head = names.pop().unwrap();
                    ExprKind::Match { scrut: b(scrut), ret, nil_b: b(nil_b), head, tail, cons_b: b(cons_b) }
                }
            }
            Tok::Ident(k) if k == "rec" => {
                self.bump();
                let scrut = self.expr()?;
                let ret = self.ret()?;
                self.expect_kw("with")?;
                let a0 = self.span();
                let mut zn = self.arm("zero")?;
                if zn.len() > 1 {
                    return self.arity_err(a0, "zero", "at most a diamond");
                }
                let zero_b = self.expr()?;
                let a1 = self.span();
                let mut sn = self.arm("succ")?;
                let succ_b = self.expr()?;
                let zero_d = zn.pop();
                let succ_d = match sn.len() {
                    2 => None,
                    3 => Some(sn.remove(0)),
                    _ => return self.arity_err(a1, "succ", "a predecessor and a recursive result, optionally after a diamond"),
                };
                if zero_d.is_some() != succ_d.is_some() {
                    return Err(Diagnostic::syntax(
                        a0.join(self.prev_end()),
                        "either both arms bind a diamond (lfpl) or neither does (consfree)",
                    ));
                }
                let rec = sn.pop().unwrap();
                let pred = sn.pop().unwrap();
                ExprKind::Rec { scrut: b(scrut), ret, zero_d, zero_b: b(zero_b), succ_d, pred, rec, succ_b: b(succ_b) }
            }
            Tok::Ident(k) if k == "irec" => {
                self.bump();
                let scrut = self.expr()?;
                self.expect_kw("of")?;
                let elem = self.expr()?;
                let ret = match self.ret()? {
                    Some(r) => r,
                    None => return self.err("`irec` requires a `return z. P` annotation"),
                };
                self.expect_kw("with")?;
                let a0 = self.span();
                let mut nn = self.arm("nil")?;
                if nn.len() != 1 {
                    return self.arity_err(a0, "nil", "a diamond");
                }
                let nil_b = self.expr()?;
                let a1 = self.span();
                let mut cn = self.arm("cons")?;
                if cn.len() != 4 {
                    return self.arity_err(a1, "cons", "a diamond, a head, a tail, and a recursive result");
                }
                let cons_b = self.expr()?;
                let rec = cn.pop().unwrap();
                let tail = cn.pop().unwrap();
                let head = cn.pop().unwrap();
                let cons_d = cn.pop().unwrap();
                ExprKind::IRec {
                    scrut: b(scrut),
                    elem: b(elem),
                    ret,
                    nil_d: nn.pop().unwrap(),
                    nil_b: b(nil_b),
                    cons_d,
                    head,
                    tail,
                    rec,
                    cons_b: b(cons_b),
                }
            }
            _ => return self.arrow().map(finalize).and_then(|r| r),
        };
        Ok(Expr::new(kind, start.join(self.prev_end())))
    }

    fn arrow(&mut self) -> DiagResult<Expr> {
        let lhs = self.prod()?;
        if *self.peek() != Tok::Arrow {
            return Ok(lhs);
        }
        self.bump();
        let cod = self.arrow().map(finalize)??;
        let span = lhs.span.join(cod.span);
        let kind = match lhs.kind {
            ExprKind::Binder { name, usage, ty } => {
                ExprKind::Pi { name: Some(name), usage: usage.unwrap_or(1), dom: ty, cod: Box::new(cod) }
            }
            _ => ExprKind::Pi { name: None, usage: 1, dom: Box::new(finalize(lhs)?), cod: Box::new(cod) },
        };
        Ok(Expr::new(kind, span))
    }

    fn prod(&mut self) -> DiagResult<Expr> {
        let lhs = self.app()?;
        if *self.peek() != Tok::Star {
            return Ok(lhs);
        }
        self.bump();
        let snd = finalize(self.prod()?)?;
        let span = lhs.span.join(snd.span);
        let kind = match lhs.kind {
            ExprKind::Binder { name, usage, ty } => {
                ExprKind::Sigma { name: Some(name), usage: usage.unwrap_or(1), fst: ty, snd: Box::new(snd) }
            }
            _ => ExprKind::Sigma { name: None, usage: 1, fst: Box::new(finalize(lhs)?), snd: Box::new(snd) },
        };
        Ok(Expr::new(kind, span))
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::LParen | Tok::DiamondTy | Tok::DiamondStar | Tok::RInv => true,
            Tok::Ident(s) => !is_keyword(s) || Builtin::from_keyword(s).is_some() || is_const(s),
            _ => false,
        }
    }

    fn app(&mut self) -> DiagResult<Expr> {
        let mut f = self.atom()?;
        while self.starts_atom() {
            let a = finalize(self.atom()?)?;
            let span = f.span.join(a.span);
            f = Expr::new(ExprKind::App(Box::new(finalize(f)?), Box::new(a)), span);
        }
        Ok(f)
    }

    fn args(&mut self) -> DiagResult<Vec<Expr>> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn atom(&mut self) -> DiagResult<Expr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::DiamondTy => {
                self.bump();
                ExprKind::DiamondTy
            }
            Tok::DiamondStar => {
                self.bump();
                ExprKind::DiamondStar
            }
            Tok::RInv => {
                self.bump();
                let args = self.args()?;
                builtin(Builtin::RInv, args, start.join(self.prev_end()))?
            }
            Tok::Ident(s) => {
                if let Some(bi) = Builtin::from_keyword(&s) {
                    self.bump();
                    let args = if *self.peek() == Tok::LParen { self.args()? } else { Vec::new() };
                    builtin(bi, args, start.join(self.prev_end()))?
                } else if is_const(&s) {
                    self.bump();
                    match s.as_str() {
                        "Unit" => ExprKind::UnitTy,
                        "Bool" => ExprKind::BoolTy,
                        "Nat" => ExprKind::NatTy,
                        "U" => ExprKind::Universe,
                        "true" => ExprKind::True,
                        "false" => ExprKind::False,
                        _ => ExprKind::Nil,
                    }
                } else if is_keyword(&s) {
                    return self.err(format!("unexpected keyword `{}`", s));
                } else {
                    self.bump();
                    ExprKind::Var(s)
                }
            }
            Tok::LParen => {
                self.bump();
                if *self.peek() == Tok::RParen {
                    self.bump();
                    ExprKind::Star
                } else if matches!(self.peek(), Tok::Ident(s) if !is_keyword(s))
                    && matches!(self.peek_at(1), Tok::Caret | Tok::Colon)
                {
                    let name = self.name()?;
                    let usage = if *self.peek() == Tok::Caret { Some(self.usage()?) } else { None };
                    self.expect(Tok::Colon)?;
                    let ty = self.expr()?;
                    self.expect(Tok::RParen)?;
                    ExprKind::Binder { name, usage, ty: Box::new(ty) }
                } else {
                    let e = self.expr()?;
                    match self.peek() {
                        Tok::Comma => {
                            let mut items = vec![e];
                            while *self.peek() == Tok::Comma {
                                self.bump();
                                items.push(self.expr()?);
                            }
                            self.expect(Tok::RParen)?;
                            ExprKind::Tuple(items)
                        }
                        Tok::Colon => {
                            self.bump();
                            let ty = self.expr()?;
                            self.expect(Tok::RParen)?;
                            ExprKind::Ann(Box::new(e), Box::new(ty))
                        }
                        _ => {
                            self.expect(Tok::RParen)?;
                            return Ok(Expr::new(e.kind, start.join(self.prev_end())));
                        }
                    }
                }
            }
            other => return self.err(format!("expected an expression, found {}", other.describe())),
        };
        Ok(Expr::new(kind, start.join(self.prev_end())))
    }
}

fn is_const(s: &str) -> bool {
    matches!(s, "Unit" | "Bool" | "Nat" | "U" | "true" | "false" | "nil")
}

fn builtin(bi: Builtin, args: Vec<Expr>, span: Span) -> DiagResult<ExprKind> {
    if !bi.arities().contains(&args.len()) {
        let want: Vec<String> = bi.arities().iter().map(|n| n.to_string()).collect();
        return Err(Diagnostic::syntax(
            span,
            format!("`{}` takes {} argument(s), found {}", bi.name(), want.join(" or "), args.len()),
        ));
    }
    Ok(ExprKind::Builtin(bi, args))
}

/// Turns a leftover `(x : A)` into an annotation.
fn finalize(e: Expr) -> DiagResult<Expr> {
    match e.kind {
        ExprKind::Binder { name, usage: None, ty } => {
            let var = Expr::new(ExprKind::Var(name), e.span);
            Ok(Expr::new(ExprKind::Ann(Box::new(var), ty), e.span))
        }
        ExprKind::Binder { usage: Some(_), .. } => {
            Err(Diagnostic::syntax(e.span, "a usage annotation must be followed by `->` or `*`"))
        }
        _ => Ok(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(s: &str) -> ExprKind {
        parse_expr(s).unwrap().kind
    }

    #[test]
    fn minimal_declaration() {
        let m = parse("def id ^1 : (x ^1 : Bool) -> Bool = \\x. x").unwrap();
        assert_eq!(m.decls.len(), 1);
        assert_eq!(m.decls[0].sigma, 1);
        assert!(matches!(m.decls[0].ty.kind, ExprKind::Pi { usage: 1, .. }));
    }

    #[test]
    fn sigma_zero_declaration_parses() {
        let m = parse("#regime consfree\ndef two ^0 : Nat = succ(succ(zero))").unwrap();
        assert_eq!(m.regime.as_deref(), Some("consfree"));
        assert_eq!(m.decls[0].sigma, 0);
    }

    #[test]
    fn unbalanced_parenthesis_has_span() {
        let e = parse("def x : Bool = (true").unwrap_err();
        assert_eq!(e.label, "syntax");
        assert_eq!(e.span.start, 20);
    }

    #[test]
    fn arrows_and_products_associate_right() {
        match kind("A * B -> C -> D") {
            ExprKind::Pi { dom, cod, .. } => {
                assert!(matches!(dom.kind, ExprKind::Sigma { .. }));
                assert!(matches!(cod.kind, ExprKind::Pi { .. }));
            }
            k => panic!("{:?}", k),
        }
    }

    #[test]
    fn binder_versus_annotation() {
        assert!(matches!(kind("(x : Nat) -> Bool"), ExprKind::Pi { name: Some(_), usage: 1, .. }));
        assert!(matches!(kind("(x ^0 : Nat) * Bool"), ExprKind::Sigma { usage: 0, .. }));
        assert!(matches!(kind("(x : Nat)"), ExprKind::Ann(..)));
        assert!(parse_expr("(x ^0 : Nat)").is_err());
    }

    #[test]
    fn rec_arms_must_agree_on_diamonds() {
        assert!(parse_expr("rec n with | zero d => d | succ m p => p").is_err());
        assert!(matches!(
            kind("rec n with | zero d => zero(d) | succ d m p => succ(d, p)"),
            ExprKind::Rec { zero_d: Some(_), succ_d: Some(_), .. }
        ));
    }

    #[test]
    fn builtin_arity_checked() {
        assert!(parse_expr("cons(x)").is_err());
        assert!(matches!(kind("zero"), ExprKind::Builtin(Builtin::Zero, ref a) if a.is_empty()));
    }
}
