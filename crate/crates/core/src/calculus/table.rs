//! Table-driven integration: linearity plus antiderivative patterns matched
//! against `f(a*x + b)`.

use super::poly::{Poly, RatFunc, Q};
use super::{Cx, Fail, Res};
use crate::expr::{ExprId, Func, Node};
use num_traits::{One, Signed, Zero};

pub(crate) fn integrate(cx: &mut Cx, e: ExprId) -> Res<ExprId> {
    cx.tick(1)?;
    let mut out = Vec::new();
    for t in cx.s.terms(e) {
        out.push(term(cx, t)?);
    }
    Ok(cx.s.add(out))
}

fn term(cx: &mut Cx, t: ExprId) -> Res<ExprId> {
    cx.tick(1)?;
    let (k, deps) = cx.split_free(t);
    let r = match deps.as_slice() {
        [] => cx.x,
        [f] => single(cx, *f)?,
        [f, g] => match pair(cx, *f, *g)? {
            Some(r) => r,
            None => pair(cx, *g, *f)?.ok_or(Fail::NotApplicable)?,
        },
        _ => return Err(Fail::NotApplicable),
    };
    Ok(cx.s.mul2(k, r))
}

/// Coefficients `(a, b)` when `e == a*x + b` with `a != 0`.
pub(crate) fn linear(cx: &Cx, e: ExprId) -> Option<(Q, Q)> {
    let p = polynomial(cx, e, 1)?;
    (p.degree() == 1).then(|| (p.coeff(1), p.coeff(0)))
}

/// Coefficients `(a, b, c)` when `e == a*x^2 + b*x + c` with `a != 0`.
pub(crate) fn quadratic(cx: &Cx, e: ExprId) -> Option<(Q, Q, Q)> {
    let p = polynomial(cx, e, 2)?;
    (p.degree() == 2).then(|| (p.coeff(2), p.coeff(1), p.coeff(0)))
}

fn polynomial(cx: &Cx, e: ExprId, max_degree: usize) -> Option<Poly> {
    if cx.free(e) {
        return None;
    }
    let r = RatFunc::from_expr(cx.s, e, cx.x, max_degree)?;
    (r.den.degree() == 0).then_some(r.num)
}

/// Splits a factor into base and `x`-free exponent.
fn base_exp(cx: &mut Cx, f: ExprId) -> (ExprId, ExprId) {
    match *cx.s.node(f) {
        Node::Pow(b, n) if cx.free(n) => (b, n),
        _ => (f, cx.s.one()),
    }
}

fn func_of(cx: &Cx, e: ExprId) -> Option<(Func, ExprId)> {
    match *cx.s.node(e) {
        Node::Func(f, a) => Some((f, a)),
        _ => None,
    }
}

fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

impl Cx<'_> {
    fn num(&mut self, v: &Q) -> ExprId {
        self.s.rational(v)
    }

    fn f(&mut self, f: Func, a: ExprId) -> ExprId {
        self.s.func(f, a)
    }

    fn powq(&mut self, b: ExprId, k: &Q) -> ExprId {
        let k = self.s.rational(k);
        self.s.pow(b, k)
    }

    /// `sqrt(v)` for a positive rational `v`.
    fn sqrt_q(&mut self, v: &Q) -> ExprId {
        let n = self.num(v);
        self.s.func(Func::Sqrt, n)
    }
}

fn single(cx: &mut Cx, f: ExprId) -> Res<ExprId> {
    cx.tick(1)?;
    let (b, n) = base_exp(cx, f);
    let nq = cx.s.as_rational(n);

    // power rule on a linear base
    if let Some((a, _)) = linear(cx, b) {
        let nq = nq.ok_or(Fail::NotApplicable)?;
        let ia = a.recip();
        return Ok(if nq == q(-1) {
            let l = cx.f(Func::Ln, b);
            cx.s.scale(&ia, l)
        } else {
            let m = &nq + q(1);
            let p = cx.powq(b, &m);
            cx.s.scale(&(ia / m), p)
        });
    }

    // c^(a*x + b) with c constant
    if let Node::Pow(c, l) = *cx.s.node(f) {
        if cx.free(c) {
            let (a, _) = linear(cx, l).ok_or(Fail::NotApplicable)?;
            let lc = cx.f(Func::Ln, c);
            let den = cx.s.recip(lc);
            let ra = cx.s.rational(&a.recip());
            return Ok(cx.s.mul(vec![ra, den, f]));
        }
    }

    if let Some((g, arg)) = func_of(cx, b) {
        if let Some((a, _)) = linear(cx, arg) {
            let nq = nq.ok_or(Fail::NotApplicable)?;
            let r = func_power(cx, g, arg, &nq).ok_or(Fail::NotApplicable)?;
            return Ok(cx.s.scale(&a.recip(), r));
        }
        // 1/sqrt(alpha x^2 + beta x + gamma) with alpha < 0 and two real roots
        if g == Func::Sqrt && nq == Some(q(-1)) {
            if let Some((al, be, ga)) = quadratic(cx, arg) {
                let disc = &be * &be - q(4) * &al * &ga;
                if al.is_negative() && disc.is_positive() {
                    // arcsin((-2 al x - be) / sqrt(disc)) / sqrt(-al)
                    let lin = Poly::from_coeffs(vec![-be, -(q(2) * &al)]).to_expr(cx.s, cx.x);
                    let sd = cx.sqrt_q(&disc);
                    let inv_sd = cx.s.recip(sd);
                    let inner = cx.s.mul2(lin, inv_sd);
                    let asin = cx.f(Func::Arcsin, inner);
                    let sa = cx.sqrt_q(&-al);
                    let inv_sa = cx.s.recip(sa);
                    return Ok(cx.s.mul2(inv_sa, asin));
                }
            }
        }
        return Err(Fail::NotApplicable);
    }

    // 1/(alpha x^2 + beta x + gamma) with negative discriminant
    if nq == Some(q(-1)) {
        if let Some((al, be, ga)) = quadratic(cx, b) {
            let disc = &be * &be - q(4) * &al * &ga;
            if disc.is_negative() {
                // 2/sqrt(-disc) * arctan((2 al x + be) / sqrt(-disc))
                let lin = Poly::from_coeffs(vec![be, q(2) * &al]).to_expr(cx.s, cx.x);
                let sd = cx.sqrt_q(&-disc);
                let inv_sd = cx.s.recip(sd);
                let inner = cx.s.mul2(lin, inv_sd);
                let at = cx.f(Func::Arctan, inner);
                let two = cx.s.int(2);
                return Ok(cx.s.mul(vec![two, inv_sd, at]));
            }
        }
    }
    Err(Fail::NotApplicable)
}

/// Antiderivative of `g(L)^n` with respect to `L`.
fn func_power(cx: &mut Cx, g: Func, l: ExprId, n: &Q) -> Option<ExprId> {
    let half = Q::new(1.into(), 2.into());
    let quarter = Q::new(1.into(), 4.into());
    let s = &mut *cx.s;
    let out = match g {
        Func::Sqrt if *n == q(-2) => s.func(Func::Ln, l),
        Func::Sqrt => {
            // sqrt(L)^n = L^(n/2)
            let m = n + q(2);
            let mid = s.rational(&m);
            let sq = s.func(Func::Sqrt, l);
            let p = s.pow(sq, mid);
            s.scale(&(q(2) / m), p)
        }
        Func::Exp if !n.is_zero() => {
            let ex = s.func(Func::Exp, l);
            let nn = s.rational(n);
            let p = s.pow(ex, nn);
            s.scale(&n.recip(), p)
        }
        _ if n.is_one() => match g {
            Func::Sin => {
                let c = s.func(Func::Cos, l);
                s.neg(c)
            }
            Func::Cos => s.func(Func::Sin, l),
            Func::Tan => {
                let c = s.func(Func::Cos, l);
                let lc = s.func(Func::Ln, c);
                s.neg(lc)
            }
            Func::Ln => {
                // L ln L - L
                let ll = s.func(Func::Ln, l);
                let p = s.mul2(l, ll);
                s.sub(p, l)
            }
            Func::Arctan => {
                // L arctan L - ln(1 + L^2)/2
                let at = s.func(Func::Arctan, l);
                let p = s.mul2(l, at);
                let one = s.one();
                let sq = s.powi(l, 2);
                let inner = s.add2(one, sq);
                let lg = s.func(Func::Ln, inner);
                let h = s.scale(&-half, lg);
                s.add2(p, h)
            }
            Func::Arcsin => {
                // L arcsin L + sqrt(1 - L^2)
                let asn = s.func(Func::Arcsin, l);
                let p = s.mul2(l, asn);
                let one = s.one();
                let sq = s.powi(l, 2);
                let msq = s.neg(sq);
                let inner = s.add2(one, msq);
                let r = s.func(Func::Sqrt, inner);
                s.add2(p, r)
            }
            Func::Exp | Func::Sqrt => unreachable!("handled above"),
        },
        Func::Sin | Func::Cos if *n == q(2) => {
            // L/2 -+ sin(2L)/4
            let two_l = s.scale(&q(2), l);
            let s2 = s.func(Func::Sin, two_l);
            let sign = if g == Func::Sin { -quarter } else { quarter };
            let a = s.scale(&half, l);
            let b = s.scale(&sign, s2);
            s.add2(a, b)
        }
        Func::Tan if *n == q(2) => {
            let t = s.func(Func::Tan, l);
            s.sub(t, l)
        }
        Func::Tan if *n == q(-1) => {
            // cot L = cos L / sin L
            let sn = s.func(Func::Sin, l);
            s.func(Func::Ln, sn)
        }
        Func::Cos if *n == q(-2) => s.func(Func::Tan, l),
        Func::Sin if *n == q(-2) => {
            // -cot L
            let c = s.func(Func::Cos, l);
            let sn = s.func(Func::Sin, l);
            let r = s.recip(sn);
            let p = s.mul2(c, r);
            s.neg(p)
        }
        _ => return None,
    };
    Some(out)
}

/// Two-factor patterns `f * g`, in that order.
fn pair(cx: &mut Cx, f: ExprId, g: ExprId) -> Res<Option<ExprId>> {
    cx.tick(1)?;
    let (b1, n1) = base_exp(cx, f);
    let (b2, n2) = base_exp(cx, g);
    let (Some(m1), Some(m2)) = (cx.s.as_rational(n1), cx.s.as_rational(n2)) else {
        return Ok(None);
    };
    let x = cx.x;

    if let (Some((g1, l1)), Some((g2, l2))) = (func_of(cx, b1), func_of(cx, b2)) {
        if l1 == l2 {
            let Some((a, _)) = linear(cx, l1) else { return Ok(None) };
            let ia = a.recip();
            let s = &mut *cx.s;
            let r = match (g1, g2) {
                // sin^m cos and cos^m sin
                (Func::Sin | Func::Cos, Func::Cos | Func::Sin) if g1 != g2 && m2.is_one() => {
                    let sign = if g1 == Func::Sin { q(1) } else { q(-1) };
                    if m1 == q(-1) {
                        let lg = s.func(Func::Ln, b1);
                        Some(s.scale(&(sign * ia), lg))
                    } else {
                        let m = &m1 + q(1);
                        let mm = s.rational(&m);
                        let p = s.pow(b1, mm);
                        Some(s.scale(&(sign * ia / m), p))
                    }
                }
                // exp sin and exp cos
                (Func::Exp, Func::Sin | Func::Cos) if m1.is_one() && m2.is_one() => {
                    let sn = s.func(Func::Sin, l1);
                    let cs = s.func(Func::Cos, l1);
                    let inner = if g2 == Func::Sin { s.sub(sn, cs) } else { s.add2(sn, cs) };
                    let p = s.mul2(b1, inner);
                    Some(s.scale(&(ia / q(2)), p))
                }
                _ => None,
            };
            return Ok(r);
        }
        return Ok(None);
    }

    // ln(L)^m / L
    if let Some((Func::Ln, l)) = func_of(cx, b1) {
        if l == b2 && m2 == q(-1) {
            let Some((a, _)) = linear(cx, l) else { return Ok(None) };
            let ia = a.recip();
            let s = &mut *cx.s;
            return Ok(Some(if m1 == q(-1) {
                let ll = s.func(Func::Ln, b1);
                s.scale(&ia, ll)
            } else {
                let m = &m1 + q(1);
                let mm = s.rational(&m);
                let p = s.pow(b1, mm);
                s.scale(&(ia / m), p)
            }));
        }
        return Ok(None);
    }

    // x * (alpha x^2 + gamma)^m and x * sqrt(alpha x^2 + gamma)^m
    if b1 == x && m1.is_one() {
        let (quad, sqrt) = match func_of(cx, b2) {
            Some((Func::Sqrt, inner)) => (inner, true),
            Some(_) => return Ok(None),
            None => (b2, false),
        };
        let Some((al, be, _)) = quadratic(cx, quad) else { return Ok(None) };
        if !be.is_zero() {
            return Ok(None);
        }
        let s = &mut *cx.s;
        // as a power of the quadratic itself
        let m = if sqrt { &m2 / q(2) } else { m2 };
        let base = quad;
        return Ok(Some(if m == q(-1) {
            let lg = s.func(Func::Ln, base);
            s.scale(&(q(1) / (q(2) * al)), lg)
        } else {
            let k = &m + q(1);
            let p = if sqrt {
                let sq = s.func(Func::Sqrt, quad);
                let e = s.rational(&(q(2) * &k));
                s.pow(sq, e)
            } else {
                let e = s.rational(&k);
                s.pow(base, e)
            };
            s.scale(&(q(1) / (q(2) * al * k)), p)
        }));
    }
    Ok(None)
}
