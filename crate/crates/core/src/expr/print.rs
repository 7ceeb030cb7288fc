use super::{ConstClass, ExprId, ExprStore, Func, Node};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    /// Leading unary minus.
    Neg,
    Product,
    Power,
    Atom,
}

fn wrap(s: String, have: Prec, need: Prec) -> String {
    if have < need {
        format!("({s})")
    } else {
        s
    }
}

impl ExprStore {
    /// Human-readable infix form. `parse(print_infix(e)) == e` for canonical
    /// `e`.
    pub fn print_infix(&self, e: ExprId) -> String {
        self.render(e).0
    }

    fn render(&self, e: ExprId) -> (String, Prec) {
        match self.node(e) {
            Node::Int(n) if n.is_negative() => (n.to_string(), Prec::Neg),
            Node::Int(n) => (n.to_string(), Prec::Atom),
            Node::Const(c) => (c.token().to_string(), Prec::Atom),
            Node::Var(v) => (v.clone(), Prec::Atom),
            Node::Func(f, a) => (format!("{}({})", f.name(), self.render(*a).0), Prec::Atom),
            Node::Pow(b, x) => match self.negative_rational(*x) {
                Some(k) => (format!("1/{}", self.render_power(*b, &k)), Prec::Product),
                None => {
                    let (bs, bp) = self.render(*b);
                    let (xs, xp) = self.render(*x);
                    (format!("{}^{}", wrap(bs, bp, Prec::Atom), wrap(xs, xp, Prec::Atom)), Prec::Power)
                }
            },
            Node::Mul(fs) => self.render_mul(fs),
            Node::Add(ts) => {
                let mut out = self.render(ts[0]).0;
                for &t in &ts[1..] {
                    let s = self.render(t).0;
                    match s.strip_prefix('-') {
                        Some(rest) => {
                            out.push_str(" - ");
                            out.push_str(rest);
                        }
                        None => {
                            out.push_str(" + ");
                            out.push_str(&s);
                        }
                    }
                }
                (out, Prec::Sum)
            }
        }
    }

    /// `-exponent` when the exponent is a negative rational.
    fn negative_rational(&self, x: ExprId) -> Option<BigRational> {
        self.as_rational(x).filter(|q| q.is_negative()).map(|q| -q)
    }

    /// `b^k` for a positive rational `k`, at power precedence or tighter.
    fn render_power(&self, b: ExprId, k: &BigRational) -> String {
        let (bs, bp) = self.render(b);
        if k.is_integer() && k.numer() == &BigInt::from(1) {
            wrap(bs, bp, Prec::Power)
        } else if k.is_integer() {
            format!("{}^{}", wrap(bs, bp, Prec::Atom), k.numer())
        } else {
            format!("{}^({}/{})", wrap(bs, bp, Prec::Atom), k.numer(), k.denom())
        }
    }

    fn render_mul(&self, fs: &[ExprId]) -> (String, Prec) {
        let mut coeff: Option<BigInt> = None;
        let mut num = Vec::new();
        let mut den = Vec::new();
        for (i, &f) in fs.iter().enumerate() {
            if i == 0 {
                if let Some(n) = self.as_integer(f) {
                    coeff = Some(n.clone());
                    continue;
                }
            }
            match self.node(f) {
                Node::Pow(b, x) => match self.negative_rational(*x) {
                    Some(k) => den.push(self.render_power(*b, &k)),
                    None => {
                        let (s, p) = self.render(f);
                        num.push(wrap(s, p, Prec::Power));
                    }
                },
                _ => {
                    let (s, p) = self.render(f);
                    num.push(wrap(s, p, Prec::Power));
                }
            }
        }
        let negative = coeff.as_ref().is_some_and(|c| c.is_negative());
        if let Some(c) = coeff.map(|c| c.abs()) {
            // `-(a + b)*c` would read as `(-(a + b))*c`, which distributes
            let leading_paren = num.first().is_some_and(|s| s.starts_with('('));
            if c != BigInt::from(1) || num.is_empty() || (negative && leading_paren) {
                num.insert(0, c.to_string());
            }
        }
        if num.is_empty() {
            num.push("1".to_string());
        }
        let mut s = num.join("*");
        for d in den {
            s.push('/');
            s.push_str(&d);
        }
        if negative {
            (format!("-{s}"), Prec::Neg)
        } else {
            (s, Prec::Product)
        }
    }

    /// Prefix serialization with explicit arity after n-ary heads, e.g.
    /// `Add 2 x Mul 2 3 Sin x`.
    pub fn to_prefix(&self, e: ExprId) -> String {
        let mut toks = Vec::new();
        self.prefix_tokens(e, &mut toks);
        toks.join(" ")
    }

    fn prefix_tokens(&self, e: ExprId, out: &mut Vec<String>) {
        match self.node(e) {
            Node::Int(n) => out.push(n.to_string()),
            Node::Const(c) => out.push(c.token().to_string()),
            Node::Var(v) => out.push(v.clone()),
            Node::Func(f, a) => {
                out.push(f.head().to_string());
                self.prefix_tokens(*a, out);
            }
            Node::Pow(b, x) => {
                out.push("Pow".to_string());
                self.prefix_tokens(*b, out);
                self.prefix_tokens(*x, out);
            }
            Node::Mul(xs) | Node::Add(xs) => {
                let head = if matches!(self.node(e), Node::Mul(_)) { "Mul" } else { "Add" };
                out.push(head.to_string());
                out.push(xs.len().to_string());
                for &c in xs {
                    self.prefix_tokens(c, out);
                }
            }
        }
    }

    /// Parses the prefix serialization, canonicalizing on the way.
    pub fn from_prefix(&mut self, text: &str) -> Result<ExprId, PrefixError> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let mut at = 0;
        let e = self.prefix_node(&toks, &mut at)?;
        if at != toks.len() {
            return Err(PrefixError::Trailing(at));
        }
        Ok(e)
    }

    fn prefix_node(&mut self, toks: &[&str], at: &mut usize) -> Result<ExprId, PrefixError> {
        let tok = *toks.get(*at).ok_or(PrefixError::UnexpectedEnd)?;
        *at += 1;
        if let Some(f) = Func::from_head(tok) {
            let a = self.prefix_node(toks, at)?;
            return Ok(self.func(f, a));
        }
        if let Some(c) = ConstClass::from_token(tok) {
            return Ok(self.constant(c));
        }
        match tok {
            "Pow" => {
                let b = self.prefix_node(toks, at)?;
                let x = self.prefix_node(toks, at)?;
                Ok(self.pow(b, x))
            }
            "Add" | "Mul" => {
                let arity_tok = *toks.get(*at).ok_or(PrefixError::UnexpectedEnd)?;
                *at += 1;
                let arity: usize =
                    arity_tok.parse().map_err(|_| PrefixError::BadArity(arity_tok.to_string()))?;
                if arity < 2 {
                    return Err(PrefixError::BadArity(arity_tok.to_string()));
                }
                let mut xs = Vec::with_capacity(arity);
                for _ in 0..arity {
                    xs.push(self.prefix_node(toks, at)?);
                }
                Ok(if tok == "Add" { self.add(xs) } else { self.mul(xs) })
            }
            _ => {
                if let Ok(n) = tok.parse::<BigInt>() {
                    Ok(self.int(n))
                } else if tok.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
                    Ok(self.var(tok))
                } else {
                    Err(PrefixError::UnknownToken(tok.to_string()))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefixError {
    #[error("unexpected end of prefix expression")]
    UnexpectedEnd,
    #[error("trailing tokens after position {0}")]
    Trailing(usize),
    #[error("bad arity `{0}`")]
    BadArity(String),
    #[error("unknown token `{0}`")]
    UnknownToken(String),
}
