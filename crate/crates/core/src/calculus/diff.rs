//! Symbolic differentiation.

use crate::expr::{ExprId, ExprStore, Func, Node};
use num_rational::BigRational;
use std::collections::HashMap;

/// Exact derivative of `e` with respect to the variable `var`, in canonical
/// form.
pub fn differentiate(s: &mut ExprStore, e: ExprId, var: ExprId) -> ExprId {
    let mut memo = HashMap::new();
    d(s, e, var, &mut memo)
}

fn d(s: &mut ExprStore, e: ExprId, var: ExprId, memo: &mut HashMap<ExprId, ExprId>) -> ExprId {
    if let Some(&r) = memo.get(&e) {
        return r;
    }
    let out = if e == var {
        s.one()
    } else if s.free_of(e, var) {
        s.zero()
    } else {
        match s.node(e).clone() {
            Node::Int(_) | Node::Const(_) | Node::Var(_) => s.zero(),
            Node::Func(f, a) => {
                let da = d(s, a, var, memo);
                let outer = func_derivative(s, f, a);
                s.mul2(outer, da)
            }
            Node::Pow(b, x) => {
                let b_free = s.free_of(b, var);
                let x_free = s.free_of(x, var);
                if x_free {
                    // x * b^(x - 1) * b'
                    let db = d(s, b, var, memo);
                    let m1 = s.int(-1);
                    let xm1 = s.add2(x, m1);
                    let p = s.pow(b, xm1);
                    s.mul(vec![x, p, db])
                } else if b_free {
                    let dx = d(s, x, var, memo);
                    let lb = s.func(Func::Ln, b);
                    s.mul(vec![e, lb, dx])
                } else {
                    // b^x * (x' ln b + x b'/b)
                    let dx = d(s, x, var, memo);
                    let db = d(s, b, var, memo);
                    let lb = s.func(Func::Ln, b);
                    let t1 = s.mul2(dx, lb);
                    let rb = s.recip(b);
                    let t2 = s.mul(vec![x, db, rb]);
                    let inner = s.add2(t1, t2);
                    s.mul2(e, inner)
                }
            }
            Node::Mul(fs) => {
                let mut terms = Vec::new();
                for i in 0..fs.len() {
                    if s.free_of(fs[i], var) {
                        continue;
                    }
                    let di = d(s, fs[i], var, memo);
                    let mut prod: Vec<ExprId> =
                        fs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &f)| f).collect();
                    prod.push(di);
                    terms.push(s.mul(prod));
                }
                s.add(terms)
            }
            Node::Add(ts) => {
                let ds = ts.iter().map(|&t| d(s, t, var, memo)).collect();
                s.add(ds)
            }
        }
    };
    memo.insert(e, out);
    out
}

/// `f'(a)` for an elementary function `f`.
fn func_derivative(s: &mut ExprStore, f: Func, a: ExprId) -> ExprId {
    match f {
        Func::Sin => s.func(Func::Cos, a),
        Func::Cos => {
            let sin = s.func(Func::Sin, a);
            s.neg(sin)
        }
        Func::Tan => {
            let cos = s.func(Func::Cos, a);
            s.powi(cos, -2)
        }
        Func::Exp => s.func(Func::Exp, a),
        Func::Ln => s.recip(a),
        Func::Sqrt => {
            let r = s.func(Func::Sqrt, a);
            let inv = s.recip(r);
            let half = BigRational::new(1.into(), 2.into());
            s.scale(&half, inv)
        }
        Func::Arctan => {
            let one = s.one();
            let sq = s.powi(a, 2);
            let den = s.add2(one, sq);
            s.recip(den)
        }
        Func::Arcsin => {
            let one = s.one();
            let sq = s.powi(a, 2);
            let msq = s.neg(sq);
            let inner = s.add2(one, msq);
            let root = s.func(Func::Sqrt, inner);
            s.recip(root)
        }
    }
}
