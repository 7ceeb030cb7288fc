use super::{ConstClass, ExprId, Func, Node};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::HashMap;

/// Integer powers are folded only while the result stays below this many bits.
const MAX_FOLD_BITS: u64 = 4096;

/// Append-only arena of interned nodes.
#[derive(Clone, Debug, Default)]
pub struct ExprStore {
    nodes: Vec<Node>,
    index: HashMap<Node, ExprId>,
}

impl ExprStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of interned nodes. Never decreases.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: ExprId) -> &Node {
        &self.nodes[id.index()]
    }

    /// Interns `node` as is, without canonicalization.
    pub fn intern(&mut self, node: Node) -> ExprId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = ExprId(u32::try_from(self.nodes.len()).expect("expression store overflow"));
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        id
    }

    /// Canonical total order: node kind first, then a recursive
    /// lexicographic comparison.
    pub fn cmp(&self, a: ExprId, b: ExprId) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        let (na, nb) = (self.node(a), self.node(b));
        na.rank().cmp(&nb.rank()).then_with(|| match (na, nb) {
            (Node::Int(x), Node::Int(y)) => x.cmp(y),
            (Node::Const(x), Node::Const(y)) => x.cmp(y),
            (Node::Var(x), Node::Var(y)) => x.cmp(y),
            (Node::Func(f, x), Node::Func(g, y)) => f.cmp(g).then_with(|| self.cmp(*x, *y)),
            (Node::Pow(b1, e1), Node::Pow(b2, e2)) => {
                self.cmp(*b1, *b2).then_with(|| self.cmp(*e1, *e2))
            }
            (Node::Mul(xs), Node::Mul(ys)) | (Node::Add(xs), Node::Add(ys)) => {
                for (x, y) in xs.iter().zip(ys) {
                    match self.cmp(*x, *y) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
                xs.len().cmp(&ys.len())
            }
            _ => unreachable!("ranks differ"),
        })
    }

    fn sort_canonical(&self, ids: &mut [ExprId]) {
        ids.sort_by(|a, b| self.cmp(*a, *b));
    }

    // ---- leaves ----------------------------------------------------------

    pub fn int(&mut self, n: impl Into<BigInt>) -> ExprId {
        self.intern(Node::Int(n.into()))
    }

    pub fn zero(&mut self) -> ExprId {
        self.int(0)
    }

    pub fn one(&mut self) -> ExprId {
        self.int(1)
    }

    pub fn var(&mut self, name: &str) -> ExprId {
        self.intern(Node::Var(name.to_string()))
    }

    /// The integration variable `x`.
    pub fn x(&mut self) -> ExprId {
        self.var("x")
    }

    pub fn constant(&mut self, class: ConstClass) -> ExprId {
        self.intern(Node::Const(class))
    }

    /// Canonical node for a rational number.
    pub fn rational(&mut self, q: &BigRational) -> ExprId {
        if q.is_integer() {
            return self.int(q.numer().clone());
        }
        let den = self.int(q.denom().clone());
        let minus_one = self.int(-1);
        let recip = self.intern(Node::Pow(den, minus_one));
        if q.numer().is_one() {
            recip
        } else {
            let num = self.int(q.numer().clone());
            self.intern(Node::Mul(vec![num, recip]))
        }
    }

    pub fn as_integer(&self, id: ExprId) -> Option<&BigInt> {
        match self.node(id) {
            Node::Int(n) => Some(n),
            _ => None,
        }
    }

    /// The value of `id` if it is a canonical rational number.
    pub fn as_rational(&self, id: ExprId) -> Option<BigRational> {
        match self.node(id) {
            Node::Int(n) => Some(BigRational::from_integer(n.clone())),
            Node::Pow(b, e) => self.reciprocal_int(*b, *e),
            Node::Mul(xs) if xs.len() == 2 => {
                let n = self.as_integer(xs[0])?;
                match self.node(xs[1]) {
                    Node::Pow(b, e) => {
                        self.reciprocal_int(*b, *e).map(|r| r * BigRational::from_integer(n.clone()))
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn reciprocal_int(&self, b: ExprId, e: ExprId) -> Option<BigRational> {
        let d = self.as_integer(b)?;
        let k = self.as_integer(e)?;
        if k == &BigInt::from(-1) && !d.is_zero() {
            Some(BigRational::new(BigInt::one(), d.clone()))
        } else {
            None
        }
    }

    pub fn is_zero(&self, id: ExprId) -> bool {
        matches!(self.node(id), Node::Int(n) if n.is_zero())
    }

    pub fn is_one(&self, id: ExprId) -> bool {
        matches!(self.node(id), Node::Int(n) if n.is_one())
    }

    /// Splits a term into its rational coefficient and the remaining
    /// factors. A bare rational returns `(q, 1)`.
    pub fn split_coeff(&mut self, id: ExprId) -> (BigRational, ExprId) {
        if let Some(q) = self.as_rational(id) {
            return (q, self.one());
        }
        let factors = match self.node(id) {
            Node::Mul(xs) => xs.clone(),
            _ => return (BigRational::one(), id),
        };
        let mut coeff = BigRational::one();
        let mut rest = Vec::with_capacity(factors.len());
        for f in factors {
            match self.as_rational(f) {
                Some(q) => coeff *= q,
                None => rest.push(f),
            }
        }
        let rest = match rest.len() {
            0 => self.one(),
            1 => rest[0],
            _ => self.intern(Node::Mul(rest)),
        };
        (coeff, rest)
    }

    // ---- canonical constructors -----------------------------------------

    pub fn func(&mut self, f: Func, arg: ExprId) -> ExprId {
        if let Some(q) = self.as_rational(arg) {
            let folded = match f {
                Func::Sin | Func::Tan | Func::Arctan | Func::Arcsin if q.is_zero() => Some(0),
                Func::Cos | Func::Exp if q.is_zero() => Some(1),
                Func::Ln if q.is_one() => Some(0),
                Func::Sqrt if q.is_zero() => Some(0),
                _ => None,
            };
            if let Some(v) = folded {
                return self.int(v);
            }
            if f == Func::Sqrt && q.is_positive() {
                let (n, d) = (q.numer(), q.denom());
                let (rn, rd) = (n.sqrt(), d.sqrt());
                if &(&rn * &rn) == n && &(&rd * &rd) == d {
                    return self.rational(&BigRational::new(rn, rd));
                }
            }
        }
        match (f, self.node(arg)) {
            (Func::Ln, Node::Func(Func::Exp, inner)) => return *inner,
            (Func::Exp, Node::Func(Func::Ln, inner)) => return *inner,
            _ => {}
        }
        self.intern(Node::Func(f, arg))
    }

    pub fn pow(&mut self, base: ExprId, exp: ExprId) -> ExprId {
        if let Some(e) = self.as_rational(exp) {
            if e.is_zero() {
                return self.one();
            }
            if e.is_one() {
                return base;
            }
            if let Some(b) = self.as_rational(base) {
                if b.is_one() {
                    return self.one();
                }
                if b.is_zero() && e.is_positive() {
                    return self.zero();
                }
                if b.is_zero() && e.is_integer() {
                    // undefined; one canonical spelling for every negative power
                    let m1 = self.int(-1);
                    return self.intern(Node::Pow(base, m1));
                }
                if e.is_integer() {
                    if let Some(v) = pow_rational(&b, e.numer()) {
                        return self.rational(&v);
                    }
                }
            }
            if e.is_integer() {
                match self.node(base).clone() {
                    Node::Pow(b2, e2) => {
                        let combined = self.mul(vec![e2, exp]);
                        return self.pow(b2, combined);
                    }
                    Node::Mul(fs) => {
                        let powered = fs.into_iter().map(|f| self.pow(f, exp)).collect();
                        return self.mul(powered);
                    }
                    _ => {}
                }
            }
        } else if self.is_one(base) {
            return base;
        }
        self.intern(Node::Pow(base, exp))
    }

    pub fn mul(&mut self, factors: Vec<ExprId>) -> ExprId {
        let mut flat = Vec::with_capacity(factors.len());
        for f in factors {
            match self.node(f) {
                Node::Mul(xs) => flat.extend_from_slice(xs),
                _ => flat.push(f),
            }
        }
        let mut coeff = BigRational::one();
        // base -> exponents, in first-seen order
        let mut bases: Vec<(ExprId, Vec<ExprId>)> = Vec::new();
        let mut slot: HashMap<ExprId, usize> = HashMap::new();
        for f in flat {
            if let Some(q) = self.as_rational(f) {
                coeff *= q;
                continue;
            }
            let (b, e) = match self.node(f) {
                Node::Pow(b, e) => (*b, *e),
                _ => (f, self.one()),
            };
            match slot.get(&b) {
                Some(&i) => bases[i].1.push(e),
                None => {
                    slot.insert(b, bases.len());
                    bases.push((b, vec![e]));
                }
            }
        }
        if coeff.is_zero() {
            return self.zero();
        }
        let mut out = Vec::with_capacity(bases.len());
        let mut needs_refold = false;
        for (b, es) in bases {
            let e = if es.len() == 1 { es[0] } else { self.add(es) };
            let p = self.pow(b, e);
            if self.is_one(p) {
                continue;
            }
            if self.as_rational(p).is_some() || matches!(self.node(p), Node::Mul(_)) {
                needs_refold = true;
            }
            out.push(p);
        }
        if needs_refold {
            let c = self.rational(&coeff);
            out.push(c);
            return self.mul(out);
        }
        if out.is_empty() {
            return self.rational(&coeff);
        }
        if !coeff.is_one() && out.len() == 1 {
            if let Node::Add(terms) = self.node(out[0]).clone() {
                let c = self.rational(&coeff);
                let scaled = terms.into_iter().map(|t| self.mul(vec![c, t])).collect();
                return self.add(scaled);
            }
        }
        if coeff.is_one() && out.len() == 1 {
            return out[0];
        }
        self.sort_canonical(&mut out);
        if !coeff.is_one() {
            let mut all = Vec::with_capacity(out.len() + 2);
            if !coeff.numer().is_one() {
                all.push(self.int(coeff.numer().clone()));
            }
            if !coeff.denom().is_one() {
                let d = self.int(coeff.denom().clone());
                let m1 = self.int(-1);
                all.push(self.intern(Node::Pow(d, m1)));
            }
            all.extend(out);
            self.sort_canonical(&mut all);
            out = all;
        }
        self.intern(Node::Mul(out))
    }

    pub fn add(&mut self, terms: Vec<ExprId>) -> ExprId {
        let mut flat = Vec::with_capacity(terms.len());
        for t in terms {
            match self.node(t) {
                Node::Add(xs) => flat.extend_from_slice(xs),
                _ => flat.push(t),
            }
        }
        let mut constant = BigRational::zero();
        let mut rests: Vec<(ExprId, BigRational)> = Vec::new();
        let mut slot: HashMap<ExprId, usize> = HashMap::new();
        for t in flat {
            if let Some(q) = self.as_rational(t) {
                constant += q;
                continue;
            }
            let (c, rest) = self.split_coeff(t);
            match slot.get(&rest) {
                Some(&i) => rests[i].1 += c,
                None => {
                    slot.insert(rest, rests.len());
                    rests.push((rest, c));
                }
            }
        }
        let mut out = Vec::with_capacity(rests.len() + 1);
        for (rest, c) in rests {
            if c.is_zero() {
                continue;
            }
            let term = if c.is_one() {
                rest
            } else {
                let cn = self.rational(&c);
                self.mul(vec![cn, rest])
            };
            out.push(term);
        }
        if !constant.is_zero() {
            out.push(self.rational(&constant));
        }
        match out.len() {
            0 => self.zero(),
            1 => out[0],
            _ => {
                self.sort_canonical(&mut out);
                self.intern(Node::Add(out))
            }
        }
    }

    pub fn add2(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.add(vec![a, b])
    }

    pub fn mul2(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mul(vec![a, b])
    }

    pub fn neg(&mut self, a: ExprId) -> ExprId {
        let m1 = self.int(-1);
        self.mul(vec![m1, a])
    }

    pub fn sub(&mut self, a: ExprId, b: ExprId) -> ExprId {
        let nb = self.neg(b);
        self.add(vec![a, nb])
    }

    pub fn recip(&mut self, a: ExprId) -> ExprId {
        let m1 = self.int(-1);
        self.pow(a, m1)
    }

    pub fn div(&mut self, a: ExprId, b: ExprId) -> ExprId {
        let r = self.recip(b);
        self.mul(vec![a, r])
    }

    pub fn powi(&mut self, base: ExprId, k: i64) -> ExprId {
        let e = self.int(k);
        self.pow(base, e)
    }

    pub fn scale(&mut self, q: &BigRational, a: ExprId) -> ExprId {
        let c = self.rational(q);
        self.mul(vec![c, a])
    }
}

/// `b^e` for integer `e`, or `None` when undefined (0 to a negative power)
/// or too large to fold.
fn pow_rational(b: &BigRational, e: &BigInt) -> Option<BigRational> {
    let k = e.to_i64()?;
    if b.is_zero() && k < 0 {
        return None;
    }
    let mag = k.unsigned_abs();
    let bits = b.numer().bits().max(b.denom().bits()).max(1);
    if mag > 512 || bits.saturating_mul(mag) > MAX_FOLD_BITS {
        return None;
    }
    let mag = u32::try_from(mag).ok()?;
    let num = num_traits::pow(b.numer().clone(), mag as usize);
    let den = num_traits::pow(b.denom().clone(), mag as usize);
    Some(if k >= 0 {
        BigRational::new(num, den)
    } else {
        BigRational::new(den, num)
    })
}
