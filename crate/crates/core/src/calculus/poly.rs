//! Dense univariate polynomials over the rationals.

use crate::expr::{ExprId, ExprStore, Node};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

/// Polynomial with coefficients from low to high degree, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    c: Vec<Q>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { c: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub fn constant(q: Q) -> Self {
        Poly::from_coeffs(vec![q])
    }

    pub fn x() -> Self {
        Poly::from_coeffs(vec![Q::zero(), Q::one()])
    }

    pub fn from_coeffs(mut c: Vec<Q>) -> Self {
        while c.last().is_some_and(|q| q.is_zero()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Poly::from_coeffs(c.iter().map(|&n| Q::from_integer(n.into())).collect())
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn coeff(&self, i: usize) -> Q {
        self.c.get(i).cloned().unwrap_or_else(Q::zero)
    }

    pub fn lc(&self) -> Q {
        self.c.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::from_coeffs((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::from_coeffs((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![Q::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::from_coeffs(c)
    }

    pub fn scale(&self, q: &Q) -> Poly {
        Poly::from_coeffs(self.c.iter().map(|a| a * q).collect())
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        self.scale(&self.lc().recip())
    }

    pub fn derivative(&self) -> Poly {
        Poly::from_coeffs(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, a)| a * Q::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn integral(&self) -> Poly {
        let mut c = vec![Q::zero()];
        c.extend(
            self.c
                .iter()
                .enumerate()
                .map(|(i, a)| a / Q::from_integer(BigInt::from(i + 1))),
        );
        Poly::from_coeffs(c)
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let mut r = self.c.clone();
        let dd = d.degree();
        let lc = d.lc();
        if r.len() < d.c.len() {
            return (Poly::zero(), self.clone());
        }
        let mut q = vec![Q::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let coef = &r[k + dd] / &lc;
            if !coef.is_zero() {
                for (j, b) in d.c.iter().enumerate() {
                    r[k + j] -= &coef * b;
                }
            }
            q[k] = coef;
        }
        r.truncate(dd);
        (Poly::from_coeffs(q), Poly::from_coeffs(r))
    }

    pub fn exact_div(&self, d: &Poly) -> Poly {
        let (q, r) = self.div_rem(d);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Monic greatest common divisor.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    pub fn eval(&self, x: &Q) -> Q {
        let mut acc = Q::zero();
        for a in self.c.iter().rev() {
            acc = acc * x + a;
        }
        acc
    }

    /// Square-free decomposition of a monic polynomial (Yun): factors
    /// `s_1, s_2, ...` with `self = s_1 * s_2^2 * s_3^3 * ...`.
    pub fn squarefree(&self) -> Vec<Poly> {
        let f = self.monic();
        if f.degree() == 0 {
            return Vec::new();
        }
        let fp = f.derivative();
        let a0 = Poly::gcd(&f, &fp);
        let mut b = f.exact_div(&a0);
        let c = fp.exact_div(&a0);
        let mut d = c.sub(&b.derivative());
        let mut out = Vec::new();
        while b.degree() > 0 {
            let a = Poly::gcd(&b, &d);
            b = b.exact_div(&a);
            let c = d.exact_div(&a);
            d = c.sub(&b.derivative());
            out.push(a);
        }
        while out.last().is_some_and(|p| p.degree() == 0) {
            out.pop();
        }
        out
    }

    /// Rational roots of a nonzero polynomial, each listed once. Gives up
    /// (returns `None`) when the coefficients are too large to enumerate
    /// divisors. `tick` is called once per candidate.
    pub fn rational_roots(&self, tick: &mut dyn FnMut() -> bool) -> Option<Vec<Q>> {
        let mut p = self.clone();
        let mut roots = Vec::new();
        if p.degree() == 0 {
            return Some(roots);
        }
        if p.coeff(0).is_zero() {
            roots.push(Q::zero());
            while p.coeff(0).is_zero() {
                p = Poly::from_coeffs(p.c[1..].to_vec());
            }
        }
        if p.degree() == 0 {
            return Some(roots);
        }
        let ints = p.integer_coeffs();
        let a0 = ints.first()?.abs().to_u64()?;
        let an = ints.last()?.abs().to_u64()?;
        const LIMIT: u64 = 1_000_000_000_000;
        if a0 > LIMIT || an > LIMIT {
            return None;
        }
        let (ps, qs) = (divisors(a0), divisors(an));
        let mut cands: Vec<Q> = Vec::new();
        for &num in &ps {
            for &den in &qs {
                for sign in [1i64, -1] {
                    let r = Q::new(BigInt::from(num) * sign, BigInt::from(den));
                    if !cands.contains(&r) {
                        cands.push(r);
                    }
                }
            }
        }
        cands.sort();
        for r in cands {
            if !tick() {
                return None;
            }
            if p.eval(&r).is_zero() {
                roots.push(r);
            }
        }
        Some(roots)
    }

    /// Primitive integer multiple of `self` (content removed).
    pub fn integer_coeffs(&self) -> Vec<BigInt> {
        let l = self.c.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let ints: Vec<BigInt> = self.c.iter().map(|q| (q * Q::from_integer(l.clone())).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, n| acc.gcd(n));
        if g.is_zero() {
            ints
        } else {
            ints.into_iter().map(|n| n / &g).collect()
        }
    }

    /// Canonical expression `sum c_i * var^i`.
    pub fn to_expr(&self, s: &mut ExprStore, var: ExprId) -> ExprId {
        let terms = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, q)| !q.is_zero())
            .map(|(i, q)| {
                let p = s.powi(var, i as i64);
                s.scale(q, p)
            })
            .collect();
        s.add(terms)
    }
}

fn divisors(n: u64) -> Vec<u64> {
    if n == 0 {
        return vec![1];
    }
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut i = 1u64;
    while i * i <= n {
        if n.is_multiple_of(i) {
            small.push(i);
            if i != n / i {
                large.push(n / i);
            }
        }
        i += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// A rational function `num / den` with `den` monic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFunc {
    pub num: Poly,
    pub den: Poly,
}

impl RatFunc {
    pub fn new(num: Poly, den: Poly) -> Self {
        let g = Poly::gcd(&num, &den);
        let (num, den) = if g.degree() > 0 { (num.exact_div(&g), den.exact_div(&g)) } else { (num, den) };
        let lc = den.lc();
        RatFunc { num: num.scale(&lc.recip()), den: den.monic() }
    }

    fn poly(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }

    fn add(&self, o: &RatFunc) -> RatFunc {
        RatFunc::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den))
    }

    fn mul(&self, o: &RatFunc) -> RatFunc {
        RatFunc::new(self.num.mul(&o.num), self.den.mul(&o.den))
    }

    /// Interprets `e` as a rational function of `var`. `None` when `e`
    /// involves anything else or the degree exceeds `max_degree`.
    pub fn from_expr(s: &ExprStore, e: ExprId, var: ExprId, max_degree: usize) -> Option<RatFunc> {
        let r = Self::convert(s, e, var, max_degree)?;
        Some(r)
    }

    fn convert(s: &ExprStore, e: ExprId, var: ExprId, max_degree: usize) -> Option<RatFunc> {
        if let Some(q) = s.as_rational(e) {
            return Some(RatFunc::poly(Poly::constant(q)));
        }
        if e == var {
            return Some(RatFunc::poly(Poly::x()));
        }
        let out = match s.node(e) {
            Node::Add(ts) => {
                let mut acc = RatFunc::poly(Poly::zero());
                for &t in ts {
                    acc = acc.add(&Self::convert(s, t, var, max_degree)?);
                    if acc.num.degree() > max_degree || acc.den.degree() > max_degree {
                        return None;
                    }
                }
                acc
            }
            Node::Mul(fs) => {
                let mut acc = RatFunc::poly(Poly::one());
                for &f in fs {
                    acc = acc.mul(&Self::convert(s, f, var, max_degree)?);
                    if acc.num.degree() > max_degree || acc.den.degree() > max_degree {
                        return None;
                    }
                }
                acc
            }
            Node::Pow(b, k) => {
                let k = s.as_integer(*k)?.to_i64()?;
                let base = Self::convert(s, *b, var, max_degree)?;
                let m = u32::try_from(k.unsigned_abs()).ok()?;
                if (base.num.degree().max(base.den.degree()) as u64) * (m as u64) > max_degree as u64 {
                    return None;
                }
                if k >= 0 {
                    RatFunc::new(base.num.pow(m), base.den.pow(m))
                } else {
                    if base.num.is_zero() {
                        return None;
                    }
                    RatFunc::new(base.den.pow(m), base.num.pow(m))
                }
            }
            _ => return None,
        };
        Some(out)
    }
}

/// Solves `a * sol = b` over the rationals by Gaussian elimination; `None`
/// if the system is singular.
pub fn solve_linear(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        let pivot = a[col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            for (dst, p) in a[r].iter_mut().zip(&pivot).skip(col) {
                *dst -= &f * p;
            }
            let v = &f * &b[col];
            b[r] -= v;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}
