use super::Span;
use super::{Diagnostic, DiagResult};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    Pragma(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Backslash,
    Arrow,
    FatArrow,
    Star,
    Eq,
    Bar,
    Caret,
    Colon,
    DiamondTy,
    DiamondStar,
    RInv,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{}`", s),
            Tok::Num(n) => format!("`{}`", n),
            Tok::Pragma(p) => format!("`#{}`", p),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Backslash => "`\\`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::Star => "`*`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Colon => "`:`".into(),
            Tok::DiamondTy => "`<>`".into(),
            Tok::DiamondStar => "`<*>`".into(),
            Tok::RInv => "`R^-1`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(src: &str) -> DiagResult<Vec<Token>> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let at = |k: usize| chars.get(k).map(|p| p.1);
    let off = |k: usize| chars.get(k).map_or(src.len(), |p| p.0);
    while i < chars.len() {
        let c = chars[i].1;
        let start = off(i);
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '-' && at(i + 1) == Some('-') {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '{' && at(i + 1) == Some('-') {
            let mut depth = 0usize;
            loop {
                match (at(i), at(i + 1)) {
                    (Some('{'), Some('-')) => {
                        depth += 1;
                        i += 2;
                    }
                    (Some('-'), Some('}')) => {
                        depth -= 1;
                        i += 2;
                        if depth == 0 {
                            break;
                        }
                    }
                    (Some(_), _) => i += 1,
                    (None, _) => {
                        return Err(Diagnostic::syntax(Span::new(src, start, src.len()), "unterminated block comment"))
                    }
                }
            }
            continue;
        }
        let simple = |t: Tok, n: usize| (t, n);
        let (tok, len) = match c {
            '(' => simple(Tok::LParen, 1),
            ')' => simple(Tok::RParen, 1),
            ',' => simple(Tok::Comma, 1),
            '.' => simple(Tok::Dot, 1),
            '\\' | 'λ' => simple(Tok::Backslash, 1),
            '*' => simple(Tok::Star, 1),
            '|' => simple(Tok::Bar, 1),
            '^' => simple(Tok::Caret, 1),
            ':' => simple(Tok::Colon, 1),
            '-' if at(i + 1) == Some('>') => simple(Tok::Arrow, 2),
            '=' if at(i + 1) == Some('>') => simple(Tok::FatArrow, 2),
            '=' => simple(Tok::Eq, 1),
            '<' if at(i + 1) == Some('>') => simple(Tok::DiamondTy, 2),
            '<' if at(i + 1) == Some('*') && at(i + 2) == Some('>') => simple(Tok::DiamondStar, 3),
            '#' => {
                let mut j = i + 1;
                while at(j).is_some_and(is_ident_char) {
                    j += 1;
                }
                let name: String = chars[i + 1..j].iter().map(|p| p.1).collect();
                (Tok::Pragma(name), j - i)
            }
            'R' if at(i + 1) == Some('^') && at(i + 2) == Some('-') && at(i + 3) == Some('1') => simple(Tok::RInv, 4),
            c if c.is_ascii_digit() => {
                let mut j = i;
                while at(j).is_some_and(|c| c.is_ascii_digit()) {
                    j += 1;
                }
                let text: String = chars[i..j].iter().map(|p| p.1).collect();
                let n = text
                    .parse()
                    .map_err(|_| Diagnostic::syntax(Span::new(src, start, off(j)), "number literal too large"))?;
                (Tok::Num(n), j - i)
            }
            c if is_ident_start(c) => {
                let mut j = i;
                while at(j).is_some_and(is_ident_char) {
                    j += 1;
                }
                (Tok::Ident(chars[i..j].iter().map(|p| p.1).collect()), j - i)
            }
            other => {
                return Err(Diagnostic::syntax(
                    Span::new(src, start, off(i + 1)),
                    format!("unexpected character `{}`", other),
                ))
            }
        };
        out.push(Token { tok, span: Span::new(src, start, off(i + len)) });
        i += len;
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(src, src.len(), src.len()) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn symbols_and_comments() {
        assert_eq!(
            toks("\\x. x -- trailing\n{- block {- nested -} -} <*> <> R^-1 =>"),
            vec![
                Tok::Backslash,
                Tok::Ident("x".into()),
                Tok::Dot,
                Tok::Ident("x".into()),
                Tok::DiamondStar,
                Tok::DiamondTy,
                Tok::RInv,
                Tok::FatArrow,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn pragma_and_usage() {
        assert_eq!(
            toks("#regime lfpl (x ^0 : Nat)"),
            vec![
                Tok::Pragma("regime".into()),
                Tok::Ident("lfpl".into()),
                Tok::LParen,
                Tok::Ident("x".into()),
                Tok::Caret,
                Tok::Num(0),
                Tok::Colon,
                Tok::Ident("Nat".into()),
                Tok::RParen,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn unterminated_comment_has_span() {
        let e = lex("def {- oops").unwrap_err();
        assert_eq!(e.span.start, 4);
    }
}
