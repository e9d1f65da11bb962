//! Concrete syntax:
//!
//! ```text
//! append(Nil, ys) = ys;
//! append(Cons(x, xs), ys) = Cons(x, append(xs, ys));
//! expression: append(append(xs, ys), zs)
//! ```
//!
//! Definitions end with `;`. `--` starts a line comment. An optional final
//! `expression:` directive names the target expression. Zero-arity
//! constructors may be written with or without `()`.

use super::{CallKind, Clause, Def, Exp, LangError, Name, Pattern, Program};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    LIdent(String),
    UIdent(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Eq,
    Colon,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.src.get(self.pos) {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'-') if self.src.get(self.pos + 1) == Some(&b'-') => {
                    while let Some(c) = self.bump() {
                        if c == b'\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize, usize), LangError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let err = |msg: String| LangError::Syntax { line, col, msg };
        let c = match self.src.get(self.pos) {
            None => return Ok((Tok::Eof, line, col)),
            Some(&c) => c,
        };
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b';' => Tok::Semi,
            b'=' => Tok::Eq,
            b':' => Tok::Colon,
            c if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .map_or(false, |c| c.is_ascii_alphanumeric() || *c == b'_')
                {
                    self.bump();
                }
                let s = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ascii")
                    .to_string();
                let tok = if c.is_ascii_uppercase() {
                    Tok::UIdent(s)
                } else {
                    Tok::LIdent(s)
                };
                return Ok((tok, line, col));
            }
            c => return Err(err(format!("unexpected character `{}`", c as char))),
        };
        self.bump();
        Ok((tok, line, col))
    }
}

struct Parser<'a> {
    lx: Lexer<'a>,
    tok: Tok,
    line: usize,
    col: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, LangError> {
        let mut lx = Lexer::new(src);
        let (tok, line, col) = lx.next()?;
        Ok(Parser { lx, tok, line, col })
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LangError> {
        Err(LangError::Syntax { line: self.line, col: self.col, msg: msg.into() })
    }

    fn advance(&mut self) -> Result<Tok, LangError> {
        let (tok, line, col) = self.lx.next()?;
        self.line = line;
        self.col = col;
        Ok(std::mem::replace(&mut self.tok, tok))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), LangError> {
        if self.tok == tok {
            self.advance()?;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn lident(&mut self, what: &str) -> Result<Name, LangError> {
        match &self.tok {
            Tok::LIdent(_) => match self.advance()? {
                Tok::LIdent(s) => Ok(s),
                _ => unreachable!(),
            },
            Tok::UIdent(_) => self.err(format!(
                "expected {what} (must start with a lowercase letter)"
            )),
            _ => self.err(format!("expected {what}")),
        }
    }

    /// Comma-separated list inside parentheses; `()` yields an empty list.
    fn paren_list<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, LangError>,
    ) -> Result<Vec<T>, LangError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut items = Vec::new();
        if self.tok != Tok::RParen {
            loop {
                items.push(item(self)?);
                if self.tok == Tok::Comma {
                    self.advance()?;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(items)
    }

    fn exp(&mut self) -> Result<Exp, LangError> {
        match self.tok.clone() {
            Tok::LIdent(name) => {
                self.advance()?;
                if self.tok == Tok::LParen {
                    let args = self.paren_list(Self::exp)?;
                    Ok(Exp::Call(CallKind::Fun(name), args))
                } else {
                    Ok(Exp::Var(name))
                }
            }
            Tok::UIdent(name) => {
                self.advance()?;
                let args = if self.tok == Tok::LParen {
                    self.paren_list(Self::exp)?
                } else {
                    Vec::new()
                };
                Ok(Exp::Call(CallKind::Ctr(name), args))
            }
            _ => self.err("expected an expression"),
        }
    }

    fn pattern(&mut self, ctr: Name) -> Result<Pattern, LangError> {
        let vars = if self.tok == Tok::LParen {
            self.paren_list(|p| p.lident("a pattern variable"))?
        } else {
            Vec::new()
        };
        Ok(Pattern { ctr, vars })
    }

    /// One definition: `name(arg, ...) = exp ;`. Returns the clause head
    /// split into an optional pattern (pattern-matching definition) and the
    /// remaining parameters.
    fn def(&mut self, name: Name) -> Result<RawDef, LangError> {
        self.expect(Tok::LParen, "`(` after the function name")?;
        let mut pat = None;
        let mut params = Vec::new();
        if self.tok != Tok::RParen {
            match self.tok.clone() {
                Tok::UIdent(ctr) => {
                    self.advance()?;
                    pat = Some(self.pattern(ctr)?);
                }
                Tok::LIdent(_) => params.push(self.lident("a parameter")?),
                _ => return self.err("expected a parameter or a pattern"),
            }
            while self.tok == Tok::Comma {
                self.advance()?;
                // tolerate a trailing comma before `)`, as in `g(Nil(), )`
                if self.tok == Tok::RParen {
                    break;
                }
                params.push(self.lident("a parameter")?);
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Eq, "`=`")?;
        let body = self.exp()?;
        self.expect(Tok::Semi, "`;` after the definition")?;
        Ok(RawDef { name, pat, params, body })
    }

    fn file(&mut self) -> Result<(Vec<RawDef>, Option<Exp>), LangError> {
        let mut defs = Vec::new();
        loop {
            match self.tok.clone() {
                Tok::Eof => return Ok((defs, None)),
                Tok::LIdent(name) => {
                    self.advance()?;
                    if name == "expression" && self.tok == Tok::Colon {
                        self.advance()?;
                        let target = self.exp()?;
                        if self.tok != Tok::Eof {
                            return self.err("`expression:` must be the last item");
                        }
                        return Ok((defs, Some(target)));
                    }
                    defs.push(self.def(name)?);
                }
                _ => return self.err("expected a definition or `expression:`"),
            }
        }
    }
}

struct RawDef {
    name: Name,
    pat: Option<Pattern>,
    params: Vec<Name>,
    body: Exp,
}

/// Parses a source file: definitions plus an optional target expression.
pub fn parse_program(text: &str) -> Result<(Program, Option<Exp>), LangError> {
    let (raw, target) = Parser::new(text)?.file()?;

    // Group pattern-matching clauses by function name, in order of first
    // appearance. Mixing clause styles under one name is rejected.
    let mut defs: Vec<Def> = Vec::new();
    for rd in raw {
        let existing = defs.iter_mut().find(|d| d.name() == rd.name);
        match (existing, rd.pat) {
            (None, None) => defs.push(Def::Ordinary {
                name: rd.name,
                params: rd.params,
                body: rd.body,
            }),
            (None, Some(pat)) => defs.push(Def::PatternMatch {
                name: rd.name,
                clauses: vec![Clause { pat, params: rd.params, body: rd.body }],
            }),
            (Some(Def::PatternMatch { clauses, .. }), Some(pat)) => {
                clauses.push(Clause { pat, params: rd.params, body: rd.body });
            }
            (Some(_), _) => return Err(LangError::DuplicateDef(rd.name)),
        }
    }

    let program = Program::new(defs)?;
    if let Some(t) = &target {
        program.check_exp(t)?;
    }
    Ok((program, target))
}

/// Parses a single expression.
pub fn parse_exp(text: &str) -> Result<Exp, LangError> {
    let mut p = Parser::new(text)?;
    let e = p.exp()?;
    if p.tok != Tok::Eof {
        return p.err("trailing input after the expression");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{CallKind, Def, Exp};

    #[test]
    fn parses_append() {
        let src = "append(Nil, ys) = ys; append(Cons(x, xs), ys) = Cons(x, append(xs, ys));";
        let (p, target) = parse_program(src).unwrap();
        assert!(target.is_none());
        match p.lookup("append").unwrap() {
            Def::PatternMatch { clauses, .. } => {
                assert_eq!(clauses.len(), 2);
                assert_eq!(clauses[0].pat.ctr, "Nil");
                assert_eq!(clauses[1].pat.vars, vec!["x", "xs"]);
            }
            _ => panic!("append should be pattern-matching"),
        }
    }

    #[test]
    fn parses_ordinary_def() {
        let (p, _) = parse_program("f(w) = B(w, w);").unwrap();
        match p.lookup("f").unwrap() {
            Def::Ordinary { params, body, .. } => {
                assert_eq!(params, &["w".to_string()]);
                assert_eq!(
                    body,
                    &Exp::Call(
                        CallKind::Ctr("B".into()),
                        vec![Exp::var("w"), Exp::var("w")]
                    )
                );
            }
            _ => panic!("f should be ordinary"),
        }
    }

    #[test]
    fn parses_empty_input() {
        let (p, target) = parse_program("").unwrap();
        assert!(p.defs().is_empty());
        assert!(target.is_none());
    }

    #[test]
    fn parses_expression_directive_and_comments() {
        let src = "-- a comment\nid(x) = x;\nexpression: id(Nil)\n";
        let (_, target) = parse_program(src).unwrap();
        assert_eq!(target, Some(Exp::fun("id", vec![Exp::ctr("Nil", vec![])])));
    }

    #[test]
    fn rejects_undefined_function() {
        let err = parse_program("f(x) = g(x);").unwrap_err();
        assert_eq!(err, LangError::UndefinedFun("g".into()));
    }

    #[test]
    fn rejects_arity_mismatch() {
        let err = parse_program("f(x) = x; h(x) = f(x, x);").unwrap_err();
        assert_eq!(err, LangError::CallArity("f".into(), 2, 1));
    }

    #[test]
    fn rejects_overlapping_clauses() {
        let err = parse_program("g(Nil) = Nil; g(Nil) = Nil;").unwrap_err();
        assert_eq!(err, LangError::OverlappingClauses("g".into(), "Nil".into()));
    }

    #[test]
    fn rejects_non_exhaustive() {
        let src = "g(Nil) = Nil; h(Nil) = Nil; h(Cons(x, xs)) = Nil;";
        let err = parse_program(src).unwrap_err();
        assert_eq!(err, LangError::NonExhaustive("g".into(), "Cons".into()));
    }

    #[test]
    fn rejects_case_violation() {
        assert!(matches!(
            parse_program("F(x) = x;"),
            Err(LangError::Syntax { .. })
        ));
    }

    #[test]
    fn reports_position() {
        match parse_program("f(x) = ;") {
            Err(LangError::Syntax { line: 1, col: 8, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }
}
