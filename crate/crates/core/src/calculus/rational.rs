//! Integration of rational functions: direct partial fractions and Hermite
//! reduction.

use super::poly::{solve_linear, Poly, RatFunc, Q};
use super::{Cx, Fail, Res};
use crate::expr::{ExprId, Func};
use num_traits::{One, Signed, Zero};

/// Largest numerator or denominator degree either method accepts.
const MAX_DEGREE: usize = 16;

fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

/// Splits `e` into its polynomial part and a proper fraction `rem / den`.
fn prepare(cx: &mut Cx, e: ExprId) -> Res<(Poly, Poly, Poly)> {
    cx.tick(1)?;
    let rf = RatFunc::from_expr(cx.s, e, cx.x, MAX_DEGREE).ok_or(Fail::NotApplicable)?;
    cx.tick(rf.num.degree() + rf.den.degree())?;
    let (quot, rem) = rf.num.div_rem(&rf.den);
    Ok((quot, rem, rf.den))
}

pub(crate) fn partial_fractions(cx: &mut Cx, e: ExprId) -> Res<ExprId> {
    let (quot, rem, den) = prepare(cx, e)?;
    let mut out = vec![quot.integral().to_expr(cx.s, cx.x)];
    if !rem.is_zero() {
        let mut factors = Vec::new();
        for (i, s) in den.squarefree().into_iter().enumerate() {
            for p in irreducible_factors(cx, &s)? {
                factors.push((p, i + 1));
            }
        }
        out.extend(fraction_terms(cx, &rem, &den, &factors)?);
    }
    Ok(cx.s.add(out))
}

pub(crate) fn hermite(cx: &mut Cx, e: ExprId) -> Res<ExprId> {
    let (quot, rem, den) = prepare(cx, e)?;
    let mut out = vec![quot.integral().to_expr(cx.s, cx.x)];
    if rem.is_zero() {
        return Ok(cx.s.add(out));
    }
    let g = Poly::gcd(&den, &den.derivative());
    let s = den.exact_div(&g);
    let (a, b) = if g.degree() == 0 {
        (Poly::zero(), rem.clone())
    } else {
        // rem = A' S - A T + B G with T = G' S / G, deg A < deg G, deg B < deg S
        let t = g.derivative().mul(&s).exact_div(&g);
        let (m, n) = (g.degree(), s.degree());
        let size = den.degree();
        cx.tick(size * size)?;
        let mut cols: Vec<Poly> = Vec::with_capacity(size);
        for i in 0..m {
            let xi = Poly::x().pow(i as u32);
            cols.push(xi.derivative().mul(&s).sub(&xi.mul(&t)));
        }
        for j in 0..n {
            cols.push(Poly::x().pow(j as u32).mul(&g));
        }
        let sol = solve_columns(&cols, &rem, size).ok_or(Fail::NotApplicable)?;
        (Poly::from_coeffs(sol[..m].to_vec()), Poly::from_coeffs(sol[m..].to_vec()))
    };
    if !a.is_zero() {
        // A / G with G = prod s_i^(i-1) kept in factored form
        let mut num = a;
        let mut factors = vec![];
        for (i, si) in den.squarefree().into_iter().enumerate() {
            if i == 0 || si.degree() == 0 {
                continue;
            }
            let (prim, lead) = primitive(&si);
            num = num.scale(&lead.pow(i as i32));
            let pe = prim.to_expr(cx.s, cx.x);
            factors.push(cx.s.powi(pe, -(i as i64)));
        }
        factors.push(num.to_expr(cx.s, cx.x));
        out.push(cx.s.mul(factors));
    }
    if !b.is_zero() {
        let factors = irreducible_factors(cx, &s)?.into_iter().map(|p| (p, 1)).collect::<Vec<_>>();
        out.extend(fraction_terms(cx, &b, &s, &factors)?);
    }
    Ok(cx.s.add(out))
}

/// Primitive integer multiple `c * p` of a monic `p`, returned with `c`.
fn primitive(p: &Poly) -> (Poly, Q) {
    let ints = p.integer_coeffs();
    let prim = Poly::from_coeffs(ints.into_iter().map(Q::from_integer).collect());
    let lead = prim.lc();
    (prim, lead)
}

/// Solves `sum_k sol_k * cols_k == rhs` coefficientwise.
fn solve_columns(cols: &[Poly], rhs: &Poly, size: usize) -> Option<Vec<Q>> {
    let a = (0..size).map(|row| cols.iter().map(|c| c.coeff(row)).collect()).collect();
    let b = (0..size).map(|row| rhs.coeff(row)).collect();
    solve_linear(a, b)
}

/// Monic factors of a monic square-free polynomial over the rationals when
/// all of them are linear or irreducible quadratics.
fn irreducible_factors(cx: &mut Cx, p: &Poly) -> Res<Vec<Poly>> {
    if p.degree() == 0 {
        return Ok(Vec::new());
    }
    let mut budget_hit = false;
    let roots = p.rational_roots(&mut || {
        let ok = cx.tick(1).is_ok();
        budget_hit |= !ok;
        ok
    });
    if budget_hit {
        return Err(Fail::Budget);
    }
    let roots = roots.ok_or(Fail::NotApplicable)?;
    let mut rest = p.clone();
    let mut out = Vec::new();
    for r in roots {
        let lin = Poly::from_coeffs(vec![-r, Q::one()]);
        rest = rest.exact_div(&lin);
        out.push(lin);
    }
    match rest.degree() {
        0 => {}
        2 => {
            let (b, c) = (rest.coeff(1), rest.coeff(0));
            if (&b * &b - q(4) * c).is_negative() {
                out.push(rest.monic());
            } else {
                return Err(Fail::NotApplicable);
            }
        }
        _ => return Err(Fail::NotApplicable),
    }
    Ok(out)
}

/// Antiderivative terms of the proper fraction `num / den` where
/// `den = prod p^m` over `factors`.
fn fraction_terms(cx: &mut Cx, num: &Poly, den: &Poly, factors: &[(Poly, usize)]) -> Res<Vec<ExprId>> {
    let size = den.degree();
    cx.tick(size * size)?;
    // one unknown per linear basis element, two per quadratic
    let mut cols = Vec::new();
    let mut basis = Vec::new();
    for (fi, (p, m)) in factors.iter().enumerate() {
        for j in 1..=*m {
            let cof = den.exact_div(&p.pow(j as u32));
            if p.degree() == 2 {
                cols.push(cof.mul(&Poly::x()));
                basis.push((fi, j, 1));
            }
            cols.push(cof);
            basis.push((fi, j, 0));
        }
    }
    let sol = solve_columns(&cols, num, size).ok_or(Fail::NotApplicable)?;
    let mut out = Vec::new();
    let mut k = 0;
    while k < basis.len() {
        let (fi, j, _) = basis[k];
        let p = &factors[fi].0;
        if p.degree() == 1 {
            out.push(linear_term(cx, &sol[k], p, j));
            k += 1;
        } else {
            out.extend(quadratic_term(cx, &sol[k], &sol[k + 1], p, j));
            k += 2;
        }
    }
    Ok(out)
}

/// `integral a / p^j` for a monic linear `p`.
fn linear_term(cx: &mut Cx, a: &Q, p: &Poly, j: usize) -> ExprId {
    if a.is_zero() {
        return cx.s.zero();
    }
    let (prim, lead) = primitive(p);
    let pe = prim.to_expr(cx.s, cx.x);
    if j == 1 {
        let l = cx.s.func(Func::Ln, pe);
        cx.s.scale(a, l)
    } else {
        // p^k = prim^k / lead^k
        let k = 1 - j as i64;
        let pw = cx.s.powi(pe, k);
        let c = a * lead.pow(-(k as i32)) / q(k);
        cx.s.scale(&c, pw)
    }
}

/// `integral (b x + c) / p^j` for a monic irreducible quadratic `p`.
fn quadratic_term(cx: &mut Cx, b: &Q, c: &Q, p: &Poly, j: usize) -> Vec<ExprId> {
    let (pb, pc) = (p.coeff(1), p.coeff(0));
    let mut out = Vec::new();
    let (prim, lead) = primitive(p);
    let pe = prim.to_expr(cx.s, cx.x);
    // b/2 * (2x + pb)/p^j
    let half_b = b / q(2);
    if !half_b.is_zero() {
        if j == 1 {
            let l = cx.s.func(Func::Ln, pe);
            out.push(cx.s.scale(&half_b, l));
        } else {
            let k = 1 - j as i64;
            let pw = cx.s.powi(pe, k);
            let coef = half_b * lead.pow(-(k as i32)) / q(k);
            out.push(cx.s.scale(&coef, pw));
        }
    }
    // (c - b pb / 2) / p^j
    let d = c - b * &pb / q(2);
    if !d.is_zero() {
        let jk = reduce_power(cx, &pb, &pc, j);
        out.push(cx.s.scale(&d, jk));
    }
    out
}

/// `J_j = integral 1/p^j` for monic `p = x^2 + pb x + pc` with negative
/// discriminant, via `J_{k+1} = t/(2 k delta p^k) + (2k - 1)/(2 k delta) J_k`
/// where `t = x + pb/2` and `delta = pc - pb^2/4`.
fn reduce_power(cx: &mut Cx, pb: &Q, pc: &Q, j: usize) -> ExprId {
    let x = cx.x;
    let delta = pc - pb * pb / q(4);
    let p = Poly::from_coeffs(vec![pc.clone(), pb.clone(), Q::one()]);
    let (prim, lead) = primitive(&p);
    let pe = prim.to_expr(cx.s, x);
    // J_1 = 2/sqrt(4 delta) arctan((2x + pb)/sqrt(4 delta))
    let four_delta = q(4) * &delta;
    let root = cx.s.rational(&four_delta);
    let root = cx.s.func(Func::Sqrt, root);
    let inv_root = cx.s.recip(root);
    let lin = Poly::from_coeffs(vec![pb.clone(), q(2)]).to_expr(cx.s, x);
    let arg = cx.s.mul2(lin, inv_root);
    let at = cx.s.func(Func::Arctan, arg);
    let two = cx.s.int(2);
    let mut jk = cx.s.mul(vec![two, inv_root, at]);
    let t = Poly::from_coeffs(vec![pb / q(2), Q::one()]).to_expr(cx.s, x);
    for k in 1..j {
        let kq = q(k as i64);
        // 1/p^k = lead^k / prim^k
        let pw = cx.s.powi(pe, -(k as i64));
        let c1 = lead.pow(k as i32) / (q(2) * &kq * &delta);
        let first = cx.s.mul2(t, pw);
        let first = cx.s.scale(&c1, first);
        let c2 = (q(2) * &kq - q(1)) / (q(2) * &kq * &delta);
        let second = cx.s.scale(&c2, jk);
        jk = cx.s.add2(first, second);
    }
    jk
}
