//! Concrete syntax.
//!
//! Terms: `\x:U^1. x`, juxtaposition application (left-associative),
//! `M {{ M1, ..., Mk }}` conditional, `M << M1, ..., Mk >>` recursion.
//! Types: `U^3`, `A -o B` (right-associative). A source file may start
//! with a prelude of `algebra Name { c1/2, c2/0 }` declarations.
//! Line comments start with `--`. Bare integers encode unary numerals,
//! `b"0110"` encodes binary strings, and `@Name` (optionally `@Name@i`)
//! splices in a library term at tier `i`.

use std::collections::HashMap;

use thiserror::Error;

use crate::algebra::{encode_binstring, encode_nat, AlgebraFamily, Constructor, FreeAlgebra};
use crate::stdlib;
use crate::term::{Term, Var};
use crate::ty::Type;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{pos}: unexpected character `{ch}`")]
    UnexpectedChar { pos: Pos, ch: char },
    #[error("{pos}: unexpected {found}, expected {expected}")]
    Unexpected {
        pos: Pos,
        found: String,
        expected: String,
    },
    #[error("{pos}: unknown constructor `{name}`")]
    UnknownConstructor { pos: Pos, name: String },
    #[error("{pos}: unknown algebra `{name}`")]
    UnknownAlgebra { pos: Pos, name: String },
    #[error("{pos}: unknown library term `{name}`")]
    UnknownLibraryTerm { pos: Pos, name: String },
    #[error("{pos}: {count} branches given but algebra `{alg}` has {expected} constructors")]
    BranchCountMismatch {
        pos: Pos,
        count: usize,
        expected: usize,
        alg: String,
    },
    #[error("{pos}: {msg}")]
    Malformed { pos: Pos, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Nat(u64),
    BinString(String),
    Lambda,
    Dot,
    Colon,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    DLBrace,
    DRBrace,
    LAngle2,
    RAngle2,
    Arrow, // -o
    Caret,
    At,
    Slash,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{}`", s),
            Tok::Nat(n) => return write!(f, "number `{}`", n),
            Tok::BinString(s) => return write!(f, "bit string `{}`", s),
            Tok::Lambda => "`\\`",
            Tok::Dot => "`.`",
            Tok::Colon => "`:`",
            Tok::Comma => "`,`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::DLBrace => "`{{`",
            Tok::DRBrace => "`}}`",
            Tok::LAngle2 => "`<<`",
            Tok::RAngle2 => "`>>`",
            Tok::Arrow => "`-o`",
            Tok::Caret => "`^`",
            Tok::At => "`@`",
            Tok::Slash => "`/`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line = 1u32;
    let mut col = 1u32;
    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        }};
    }
    loop {
        let pos = Pos { line, col };
        let c = match chars.peek() {
            None => {
                toks.push((Tok::Eof, pos));
                return Ok(toks);
            }
            Some(c) => *c,
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '-' => {
                bump!();
                match chars.peek() {
                    Some('o') => {
                        bump!();
                        toks.push((Tok::Arrow, pos));
                    }
                    Some('-') => {
                        while let Some(&c) = chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            bump!();
                        }
                    }
                    _ => return Err(ParseError::UnexpectedChar { pos, ch: '-' }),
                }
            }
            '\\' => {
                bump!();
                toks.push((Tok::Lambda, pos));
            }
            '.' => {
                bump!();
                toks.push((Tok::Dot, pos));
            }
            ':' => {
                bump!();
                toks.push((Tok::Colon, pos));
            }
            ',' => {
                bump!();
                toks.push((Tok::Comma, pos));
            }
            '(' => {
                bump!();
                toks.push((Tok::LParen, pos));
            }
            ')' => {
                bump!();
                toks.push((Tok::RParen, pos));
            }
            '^' => {
                bump!();
                toks.push((Tok::Caret, pos));
            }
            '@' => {
                bump!();
                toks.push((Tok::At, pos));
            }
            '/' => {
                bump!();
                toks.push((Tok::Slash, pos));
            }
            '{' => {
                bump!();
                if chars.peek() == Some(&'{') {
                    bump!();
                    toks.push((Tok::DLBrace, pos));
                } else {
                    toks.push((Tok::LBrace, pos));
                }
            }
            '}' => {
                bump!();
                if chars.peek() == Some(&'}') {
                    bump!();
                    toks.push((Tok::DRBrace, pos));
                } else {
                    toks.push((Tok::RBrace, pos));
                }
            }
            '<' => {
                bump!();
                if chars.peek() == Some(&'<') {
                    bump!();
                    toks.push((Tok::LAngle2, pos));
                } else {
                    return Err(ParseError::UnexpectedChar { pos, ch: '<' });
                }
            }
            '>' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    toks.push((Tok::RAngle2, pos));
                } else {
                    return Err(ParseError::UnexpectedChar { pos, ch: '>' });
                }
            }
            '0'..='9' => {
                let mut n: u64 = 0;
                while let Some(&c) = chars.peek() {
                    if let Some(d) = c.to_digit(10) {
                        n = n * 10 + d as u64;
                        bump!();
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Nat(n), pos));
            }
            'b' => {
                // either a bit string b"0110" or an identifier starting with b
                let mut it = chars.clone();
                it.next();
                if it.peek() == Some(&'"') {
                    bump!();
                    bump!();
                    let mut s = String::new();
                    loop {
                        match bump!() {
                            Some('"') => break,
                            Some(c @ ('0' | '1')) => s.push(c),
                            Some(ch) => return Err(ParseError::UnexpectedChar { pos, ch }),
                            None => {
                                return Err(ParseError::Malformed {
                                    pos,
                                    msg: "unterminated bit string".into(),
                                })
                            }
                        }
                    }
                    toks.push((Tok::BinString(s), pos));
                } else {
                    let id = lex_ident(&mut chars, &mut line, &mut col);
                    toks.push((Tok::Ident(id), pos));
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let id = lex_ident(&mut chars, &mut line, &mut col);
                toks.push((Tok::Ident(id), pos));
            }
            ch => return Err(ParseError::UnexpectedChar { pos, ch }),
        }
    }
}

fn lex_ident(
    chars: &mut std::iter::Peekable<std::str::Chars>,
    line: &mut u32,
    col: &mut u32,
) -> String {
    let mut s = String::new();
    while let Some(&c) = chars.peek() {
        if c.is_alphanumeric() || c == '_' || c == '\'' {
            s.push(c);
            chars.next();
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        } else {
            break;
        }
    }
    s
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    family: &'a AlgebraFamily,
    scopes: Vec<(String, Var)>,
    /// free variables seen so far, by name (so repeated mentions agree)
    free: HashMap<String, Var>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ParseError> {
        let (t, pos) = self.next();
        if t == tok {
            Ok(pos)
        } else {
            Err(ParseError::Unexpected {
                pos,
                found: t.to_string(),
                expected: tok.to_string(),
            })
        }
    }

    fn parse_type(&mut self) -> Result<Type, ParseError> {
        let lhs = self.parse_type_atom()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            let rhs = self.parse_type()?;
            Ok(Type::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_type_atom(&mut self) -> Result<Type, ParseError> {
        match self.next() {
            (Tok::LParen, _) => {
                let t = self.parse_type()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            (Tok::Ident(name), pos) => {
                let alg = self
                    .family
                    .lookup_algebra(&name)
                    .ok_or(ParseError::UnknownAlgebra { pos, name })?;
                self.expect(Tok::Caret)?;
                match self.next() {
                    (Tok::Nat(n), _) => Ok(Type::Base(alg, n as u32)),
                    (t, pos) => Err(ParseError::Unexpected {
                        pos,
                        found: t.to_string(),
                        expected: "tier".into(),
                    }),
                }
            }
            (t, pos) => Err(ParseError::Unexpected {
                pos,
                found: t.to_string(),
                expected: "type".into(),
            }),
        }
    }

    fn parse_term(&mut self) -> Result<Term, ParseError> {
        if *self.peek() == Tok::Lambda {
            self.next();
            let (t, pos) = self.next();
            let name = match t {
                Tok::Ident(s) => s,
                t => {
                    return Err(ParseError::Unexpected {
                        pos,
                        found: t.to_string(),
                        expected: "binder name".into(),
                    })
                }
            };
            self.expect(Tok::Colon)?;
            let ty = self.parse_type()?;
            self.expect(Tok::Dot)?;
            let v = Var::fresh(&name);
            self.scopes.push((name, v.clone()));
            let body = self.parse_term()?;
            self.scopes.pop();
            Ok(Term::abs(v, ty, body))
        } else {
            self.parse_postfix()
        }
    }

    fn parse_postfix(&mut self) -> Result<Term, ParseError> {
        let mut t = self.parse_app()?;
        loop {
            match self.peek() {
                Tok::DLBrace => {
                    let pos = self.pos();
                    self.next();
                    let branches = self.parse_branches(Tok::DRBrace)?;
                    self.check_branch_count(pos, &t, branches.len())?;
                    t = Term::cond(t, branches);
                }
                Tok::LAngle2 => {
                    let pos = self.pos();
                    self.next();
                    let branches = self.parse_branches(Tok::RAngle2)?;
                    self.check_branch_count(pos, &t, branches.len())?;
                    t = Term::rec(t, branches);
                }
                _ => return Ok(t),
            }
        }
    }

    fn check_branch_count(&self, pos: Pos, scrut: &Term, count: usize) -> Result<(), ParseError> {
        // best-effort static check when the scrutinee is constructor-headed
        let mut head = scrut;
        while let Term::App(f, _) = head {
            head = f;
        }
        if let Term::Cons(c, _) = head {
            let alg = self.family.algebra(c.alg);
            if alg.len() != count {
                return Err(ParseError::BranchCountMismatch {
                    pos,
                    count,
                    expected: alg.len(),
                    alg: alg.name.clone(),
                });
            }
        }
        Ok(())
    }

    fn parse_branches(&mut self, close: Tok) -> Result<Vec<Term>, ParseError> {
        let mut out = vec![self.parse_term()?];
        loop {
            if *self.peek() == Tok::Comma {
                self.next();
                out.push(self.parse_term()?);
            } else {
                self.expect(close)?;
                return Ok(out);
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_) | Tok::Nat(_) | Tok::BinString(_) | Tok::LParen | Tok::At
        )
    }

    fn parse_app(&mut self) -> Result<Term, ParseError> {
        let mut t = self.parse_atom()?;
        while self.starts_atom() {
            let a = self.parse_atom()?;
            t = Term::app(t, a);
        }
        Ok(t)
    }

    fn parse_atom(&mut self) -> Result<Term, ParseError> {
        match self.next() {
            (Tok::LParen, _) => {
                let t = self.parse_term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            (Tok::Nat(n), _) => Ok(Term::from_algebraic(&encode_nat(n))),
            (Tok::BinString(s), _) => Ok(Term::from_algebraic(&encode_binstring(&s))),
            (Tok::At, pos) => {
                let name = match self.next() {
                    (Tok::Ident(s), _) => s,
                    (t, pos) => {
                        return Err(ParseError::Unexpected {
                            pos,
                            found: t.to_string(),
                            expected: "library term name".into(),
                        })
                    }
                };
                let tier = if *self.peek() == Tok::At {
                    self.next();
                    match self.next() {
                        (Tok::Nat(n), _) => n as u32,
                        (t, pos) => {
                            return Err(ParseError::Unexpected {
                                pos,
                                found: t.to_string(),
                                expected: "tier".into(),
                            })
                        }
                    }
                } else {
                    0
                };
                stdlib::build(&name, tier)
                    .ok_or(ParseError::UnknownLibraryTerm { pos, name })
            }
            (Tok::Ident(name), pos) => {
                // innermost binding wins; otherwise constructor; otherwise free
                if let Some((_, v)) = self.scopes.iter().rev().find(|(n, _)| *n == name) {
                    return Ok(Term::var(v));
                }
                if let Some(c) = self.family.lookup_cons(&name) {
                    let tier = if *self.peek() == Tok::At {
                        self.next();
                        match self.next() {
                            (Tok::Nat(n), _) => Some(n as u32),
                            (t, pos) => {
                                return Err(ParseError::Unexpected {
                                    pos,
                                    found: t.to_string(),
                                    expected: "tier".into(),
                                })
                            }
                        }
                    } else {
                        None
                    };
                    return Ok(Term::Cons(c, tier));
                }
                if looks_like_constructor(&name, self.family) {
                    return Err(ParseError::UnknownConstructor { pos, name });
                }
                let v = self
                    .free
                    .entry(name.clone())
                    .or_insert_with(|| Var::fresh(&name))
                    .clone();
                Ok(Term::var(v))
            }
            (t, pos) => Err(ParseError::Unexpected {
                pos,
                found: t.to_string(),
                expected: "term".into(),
            }),
        }
    }

    fn parse_prelude(&mut self) -> Result<Vec<FreeAlgebra>, ParseError> {
        let mut out = Vec::new();
        while let Tok::Ident(s) = self.peek() {
            if s != "algebra" {
                break;
            }
            self.next();
            let (t, pos) = self.next();
            let name = match t {
                Tok::Ident(s) => s,
                t => {
                    return Err(ParseError::Unexpected {
                        pos,
                        found: t.to_string(),
                        expected: "algebra name".into(),
                    })
                }
            };
            self.expect(Tok::LBrace)?;
            let mut constructors = Vec::new();
            loop {
                let (t, pos) = self.next();
                let cname = match t {
                    Tok::Ident(s) => s,
                    t => {
                        return Err(ParseError::Unexpected {
                            pos,
                            found: t.to_string(),
                            expected: "constructor name".into(),
                        })
                    }
                };
                self.expect(Tok::Slash)?;
                let arity = match self.next() {
                    (Tok::Nat(n), _) => n as usize,
                    (t, pos) => {
                        return Err(ParseError::Unexpected {
                            pos,
                            found: t.to_string(),
                            expected: "arity".into(),
                        })
                    }
                };
                constructors.push(Constructor {
                    name: format!("{}_{}", cname, name),
                    arity,
                });
                match self.next() {
                    (Tok::Comma, _) => continue,
                    (Tok::RBrace, _) => break,
                    (t, pos) => {
                        return Err(ParseError::Unexpected {
                            pos,
                            found: t.to_string(),
                            expected: "`,` or `}`".into(),
                        })
                    }
                }
            }
            out.push(FreeAlgebra { name, constructors });
        }
        Ok(out)
    }
}

fn looks_like_constructor(name: &str, family: &AlgebraFamily) -> bool {
    if let Some((head, alg)) = name.rsplit_once('_') {
        if family.lookup_algebra(alg).is_some() {
            return head.starts_with('c') && head[1..].chars().all(|c| c.is_ascii_digit());
        }
    }
    false
}

/// Parse a term against an existing family (no prelude allowed).
pub fn parse_term(source: &str, family: &AlgebraFamily) -> Result<Term, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        at: 0,
        family,
        scopes: Vec::new(),
        free: HashMap::new(),
    };
    let t = p.parse_term()?;
    let (tok, pos) = p.next();
    if tok != Tok::Eof {
        return Err(ParseError::Unexpected {
            pos,
            found: tok.to_string(),
            expected: "end of input".into(),
        });
    }
    Ok(t)
}

/// Parse an optional algebra prelude followed by a term. Returns the
/// extended family together with the term.
pub fn parse_program(source: &str) -> Result<(AlgebraFamily, Term), ParseError> {
    let toks = lex(source)?;
    let base = AlgebraFamily::new();
    let mut pre = Parser {
        toks: toks.clone(),
        at: 0,
        family: &base,
        scopes: Vec::new(),
        free: HashMap::new(),
    };
    let decls = pre.parse_prelude()?;
    let resume = pre.at;
    let mut family = base.clone();
    for d in decls {
        family
            .declare(d)
            .map_err(|e| ParseError::Malformed { pos: Pos { line: 1, col: 1 }, msg: e.to_string() })?;
    }
    let mut p = Parser {
        toks,
        at: resume,
        family: &family,
        scopes: Vec::new(),
        free: HashMap::new(),
    };
    let t = p.parse_term()?;
    let (tok, pos) = p.next();
    if tok != Tok::Eof {
        return Err(ParseError::Unexpected {
            pos,
            found: tok.to_string(),
            expected: "end of input".into(),
        });
    }
    Ok((family, t))
}

pub fn parse_type(source: &str, family: &AlgebraFamily) -> Result<Type, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        at: 0,
        family,
        scopes: Vec::new(),
        free: HashMap::new(),
    };
    let t = p.parse_type()?;
    let (tok, pos) = p.next();
    if tok != Tok::Eof {
        return Err(ParseError::Unexpected {
            pos,
            found: tok.to_string(),
            expected: "end of input".into(),
        });
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ALG_U, C1_U, C2_U};

    #[test]
    fn parses_abstraction() {
        let fam = AlgebraFamily::new();
        let t = parse_term("\\x:U^1. x", &fam).unwrap();
        match t {
            Term::Abs(x, ty, body) => {
                assert_eq!(ty, Type::Base(ALG_U, 1));
                assert_eq!(*body, Term::var(&x));
            }
            _ => panic!("expected abstraction"),
        }
    }

    #[test]
    fn application_is_juxtaposition() {
        let fam = AlgebraFamily::new();
        let t = parse_term("c1_U c2_U", &fam).unwrap();
        assert_eq!(t, Term::app(Term::cons(C1_U), Term::cons(C2_U)));
    }

    #[test]
    fn recursion_former() {
        let fam = AlgebraFamily::new();
        let t = parse_term("x <<y, z>>", &fam).unwrap();
        match t {
            Term::Rec(s, br) => {
                assert!(matches!(*s, Term::Var(_)));
                assert_eq!(br.len(), 2);
            }
            _ => panic!("expected recursion"),
        }
    }

    #[test]
    fn numerals_and_bitstrings() {
        let fam = AlgebraFamily::new();
        let two = parse_term("2", &fam).unwrap();
        assert_eq!(two, Term::from_algebraic(&encode_nat(2)));
        let s = parse_term("b\"01\"", &fam).unwrap();
        assert_eq!(s, Term::from_algebraic(&encode_binstring("01")));
    }

    #[test]
    fn constructor_annotations() {
        let fam = AlgebraFamily::new();
        let t = parse_term("c1_U@3", &fam).unwrap();
        assert_eq!(t, Term::cons_at(C1_U, 3));
    }

    #[test]
    fn unknown_constructor_is_an_error() {
        let fam = AlgebraFamily::new();
        assert!(matches!(
            parse_term("c9_U", &fam),
            Err(ParseError::UnknownConstructor { .. })
        ));
    }

    #[test]
    fn branch_count_checked_when_head_is_known() {
        let fam = AlgebraFamily::new();
        assert!(matches!(
            parse_term("c2_U <<x, y, z>>", &fam),
            Err(ParseError::BranchCountMismatch { .. })
        ));
        assert!(parse_term("c2_U <<x, y>>", &fam).is_ok());
    }

    #[test]
    fn prelude_declares_algebras() {
        let (fam, t) = parse_program("algebra T { c1/2, c2/0 }\nc1_T c2_T c2_T").unwrap();
        assert!(fam.lookup_cons("c1_T").is_some());
        assert!(t.is_algebraic());
    }

    #[test]
    fn comments_and_types() {
        let fam = AlgebraFamily::new();
        let t = parse_term("-- a comment\n\\f:(U^1 -o U^0) -o U^0. f", &fam).unwrap();
        match t {
            Term::Abs(_, ty, _) => {
                let u1 = Type::Base(ALG_U, 1);
                let u0 = Type::Base(ALG_U, 0);
                assert_eq!(
                    ty,
                    Type::arrow(Type::arrow(u1, u0.clone()), u0)
                );
            }
            _ => panic!(),
        }
    }

    #[test]
    fn print_parse_roundtrip() {
        let fam = AlgebraFamily::new();
        for src in [
            "\\x:U^1. x",
            "\\x:U^1. \\y:U^0. x <<\\w:U^1. \\z:U^0. c1_U z, y>>",
            "(\\x:U^0. x) (c1_U c2_U)",
            "x {{\\y:U^1. y, c2_U@1}}",
            "c1_C@2 c2_C c2_C",
        ] {
            let t = parse_term(src, &fam).unwrap();
            let printed = t.display(&fam).to_string();
            let t2 = parse_term(&printed, &fam).unwrap();
            // print∘parse is the identity on printed output, and closed
            // terms reparse alpha-equal
            assert_eq!(t2.display(&fam).to_string(), printed, "src {}", src);
            if t.is_closed() {
                assert!(t.alpha_eq(&t2), "{} reparsed as {}", src, printed);
            }
        }
    }
}
