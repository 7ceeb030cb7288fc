//! Recursive-descent parser for infix expressions.
//!
//! ```text
//! expr  := term  (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := INT | IDENT '(' expr ')' | IDENT | '(' expr ')'
//! ```

use super::{ConstClass, ExprId, ExprStore, Func};
use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{name}` at {pos}")]
    UnknownFunction { pos: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
    End,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n: BigInt = text[start..i].parse().expect("digits");
            out.push((start, Tok::Int(n)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ParseError::Syntax { pos: i, msg: format!("unexpected character `{c}`") });
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'s> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    store: &'s mut ExprStore,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == &Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ParseError::Syntax { pos: self.pos(), msg: format!("expected `{c}`") })
        }
    }

    fn expr(&mut self) -> Result<ExprId, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                let t = self.term()?;
                terms.push(self.store.neg(t));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms[0] } else { self.store.add(terms) })
    }

    fn term(&mut self) -> Result<ExprId, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat('*') {
                factors.push(self.unary()?);
            } else if self.eat('/') {
                let d = self.unary()?;
                factors.push(self.store.recip(d));
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 { factors[0] } else { self.store.mul(factors) })
    }

    fn unary(&mut self) -> Result<ExprId, ParseError> {
        if self.eat('-') {
            let u = self.unary()?;
            Ok(self.store.neg(u))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<ExprId, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            Ok(self.store.pow(base, exp))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<ExprId, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(self.store.int(n)),
            Tok::Ident(name) => {
                if self.eat('(') {
                    let f = Func::from_name(&name)
                        .ok_or(ParseError::UnknownFunction { pos, name: name.clone() })?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    Ok(self.store.func(f, arg))
                } else if let Some(c) = ConstClass::from_token(&name) {
                    Ok(self.store.constant(c))
                } else if Func::from_name(&name).is_some() {
                    Err(ParseError::Syntax { pos, msg: format!("function `{name}` needs an argument") })
                } else {
                    Ok(self.store.var(&name))
                }
            }
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::End => Err(ParseError::Syntax { pos, msg: "unexpected end of input".into() }),
            Tok::Sym(c) => Err(ParseError::Syntax { pos, msg: format!("unexpected `{c}`") }),
        }
    }
}

impl ExprStore {
    /// Parses an infix expression into canonical form.
    pub fn parse(&mut self, text: &str) -> Result<ExprId, ParseError> {
        let toks = lex(text)?;
        let mut p = Parser { toks, at: 0, store: self };
        let e = p.expr()?;
        if p.peek() != &Tok::End {
            return Err(ParseError::Syntax { pos: p.pos(), msg: "trailing input".into() });
        }
        Ok(e)
    }
}
