//! Integration by parts with LIATE ranking and cycle detection.

use super::poly::{RatFunc, Q};
use super::{differentiate, table, Cx, Fail, Res};
use crate::expr::{ExprId, Func, Node};
use num_traits::{One, Zero};

/// Maximum number of nested parts steps.
const MAX_DEPTH: usize = 4;

pub(crate) fn integrate(cx: &mut Cx, e: ExprId) -> Res<ExprId> {
    let mut out = Vec::new();
    for t in cx.s.terms(e) {
        out.push(top(cx, t)?);
    }
    Ok(cx.s.add(out))
}

/// `integral t` for one term, solving `I = P + c*I` when the integrand
/// reappears.
fn top(cx: &mut Cx, t: ExprId) -> Res<ExprId> {
    cx.tick(1)?;
    let (k, deps) = cx.split_free(t);
    if deps.is_empty() {
        return Ok(cx.s.mul2(k, cx.x));
    }
    let root = cx.s.mul(deps);
    let mut seen = Vec::new();
    let (p, c) = step(cx, root, root, 0, &mut seen)?;
    if c.is_one() {
        return Err(Fail::NotApplicable);
    }
    let scale = (Q::one() - c).recip();
    let p = cx.s.scale(&scale, p);
    Ok(cx.s.mul2(k, p))
}

/// Returns `(P, c)` with `integral j = P + c * integral root`.
fn step(cx: &mut Cx, j: ExprId, root: ExprId, depth: usize, seen: &mut Vec<ExprId>) -> Res<(ExprId, Q)> {
    cx.tick(1)?;
    let (k, deps) = cx.split_free(j);
    let r = cx.s.mul(deps.clone());
    if depth > 0 {
        match table::integrate(cx, r) {
            Ok(f) => return Ok((cx.s.mul2(k, f), Q::zero())),
            Err(Fail::Budget) => return Err(Fail::Budget),
            Err(Fail::NotApplicable) => {}
        }
        if let Some(f) = divided(cx, r)? {
            return Ok((cx.s.mul2(k, f), Q::zero()));
        }
        if r == root {
            let kq = cx.s.as_rational(k).ok_or(Fail::NotApplicable)?;
            return Ok((cx.s.zero(), kq));
        }
        if seen.contains(&r) {
            return Err(Fail::NotApplicable);
        }
        if depth >= MAX_DEPTH {
            return Err(Fail::NotApplicable);
        }
    }
    seen.push(r);
    let mut order = deps;
    order.sort_by(|&a, &b| liate(cx, a).cmp(&liate(cx, b)).then_with(|| cx.s.cmp(a, b)));
    for u in order {
        cx.tick(1)?;
        let dv = cx.s.div(r, u);
        let v = match table::integrate(cx, dv) {
            Ok(v) => v,
            Err(Fail::Budget) => return Err(Fail::Budget),
            Err(Fail::NotApplicable) => continue,
        };
        let du = differentiate(cx.s, u, cx.x);
        let w = cx.s.mul2(du, v);
        let mut ps = Vec::new();
        let mut c = Q::zero();
        let mut ok = true;
        for wt in cx.s.terms(w) {
            if cx.free(wt) && cx.s.is_zero(wt) {
                continue;
            }
            match step(cx, wt, root, depth + 1, seen) {
                Ok((p, ct)) => {
                    ps.push(p);
                    c += ct;
                }
                Err(Fail::Budget) => return Err(Fail::Budget),
                Err(Fail::NotApplicable) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        // integral r = u v - integral w
        let uv = cx.s.mul2(u, v);
        let pw = cx.s.add(ps);
        let inner = cx.s.sub(uv, pw);
        let kq = cx.s.as_rational(k);
        if !c.is_zero() && kq.is_none() {
            return Err(Fail::NotApplicable);
        }
        let c = match kq {
            Some(kq) => -(kq * c),
            None => Q::zero(),
        };
        seen.pop();
        return Ok((cx.s.mul2(k, inner), c));
    }
    seen.pop();
    Err(Fail::NotApplicable)
}

/// LIATE rank: logarithmic, inverse trigonometric, algebraic, trigonometric,
/// exponential. Lower ranks are differentiated first.
fn liate(cx: &Cx, f: ExprId) -> u8 {
    let b = match *cx.s.node(f) {
        Node::Pow(b, n) if cx.free(n) => b,
        Node::Pow(c, _) if cx.free(c) => return 4,
        _ => f,
    };
    match cx.s.node(b) {
        Node::Func(Func::Ln, _) => 0,
        Node::Func(Func::Arctan | Func::Arcsin, _) => 1,
        Node::Func(Func::Sin | Func::Cos | Func::Tan, _) => 3,
        Node::Func(Func::Exp, _) => 4,
        _ => 2,
    }
}

/// An improper rational remainder split into polynomial and proper parts
/// and handed back to the table.
fn divided(cx: &mut Cx, r: ExprId) -> Res<Option<ExprId>> {
    let Some(rf) = RatFunc::from_expr(cx.s, r, cx.x, 8) else { return Ok(None) };
    if rf.den.degree() == 0 || rf.num.degree() < rf.den.degree() {
        return Ok(None);
    }
    let (quot, rem) = rf.num.div_rem(&rf.den);
    let qe = quot.to_expr(cx.s, cx.x);
    let ne = rem.to_expr(cx.s, cx.x);
    let de = rf.den.to_expr(cx.s, cx.x);
    let frac = cx.s.div(ne, de);
    let split = cx.s.add2(qe, frac);
    match table::integrate(cx, split) {
        Ok(f) => Ok(Some(f)),
        Err(Fail::Budget) => Err(Fail::Budget),
        Err(Fail::NotApplicable) => Ok(None),
    }
}
