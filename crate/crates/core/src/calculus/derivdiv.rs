//! Derivative-divides: substitution `u = g(x)` when `integrand / g'` is an
//! expression in `g` alone.

use super::{differentiate, table, Cx, Fail, Res};
use crate::expr::{ExprId, Node};

/// Maximum nesting of substitutions inside one outer integral.
const MAX_DEPTH: usize = 2;

/// Candidate subterms considered per term.
const MAX_CANDIDATES: usize = 24;

pub(crate) fn integrate(cx: &mut Cx, e: ExprId) -> Res<ExprId> {
    let mut out = Vec::new();
    for t in cx.s.terms(e) {
        out.push(term(cx, t, 0)?);
    }
    Ok(cx.s.add(out))
}

fn term(cx: &mut Cx, t: ExprId, depth: usize) -> Res<ExprId> {
    cx.tick(1)?;
    let x = cx.x;
    let u = cx.s.var(&format!("u_{depth}"));
    for g in candidates(cx, t) {
        cx.tick(1)?;
        let dg = differentiate(cx.s, g, x);
        if cx.s.is_zero(dg) {
            continue;
        }
        let quotient = cx.s.div(t, dg);
        let h = cx.s.replace(quotient, g, u);
        if !cx.s.free_of(h, x) {
            continue;
        }
        cx.x = u;
        let outer = match table::integrate(cx, h) {
            Err(Fail::NotApplicable) if depth < MAX_DEPTH && g != x => {
                let mut parts = Vec::new();
                let mut r = Ok(());
                for ht in cx.s.terms(h) {
                    match term(cx, ht, depth + 1) {
                        Ok(p) => parts.push(p),
                        Err(f) => {
                            r = Err(f);
                            break;
                        }
                    }
                }
                r.map(|_| cx.s.add(parts))
            }
            r => r,
        };
        cx.x = x;
        match outer {
            Ok(f) => return Ok(cx.s.replace(f, u, g)),
            Err(Fail::Budget) => return Err(Fail::Budget),
            Err(Fail::NotApplicable) => {}
        }
    }
    Err(Fail::NotApplicable)
}

/// Composite `x`-dependent subterms of `t` (excluding `t`), largest first,
/// followed by `x` itself.
fn candidates(cx: &Cx, t: ExprId) -> Vec<ExprId> {
    let s = &*cx.s;
    let mut cs: Vec<ExprId> = s
        .subterms(t)
        .into_iter()
        .filter(|&g| g != t && g != cx.x && !cx.free(g))
        .filter(|&g| !matches!(s.node(g), Node::Var(_)))
        .collect();
    cs.sort_by(|&a, &b| s.tree_size(b).cmp(&s.tree_size(a)).then_with(|| s.cmp(a, b)));
    cs.truncate(MAX_CANDIDATES);
    cs.push(cx.x);
    cs
}
