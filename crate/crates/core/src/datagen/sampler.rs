//! Random expression sampling.

use crate::expr::{ExprId, ExprStore, Func};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Internal operators the sampler can emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Arctan,
    Arcsin,
}

impl Op {
    pub const ALL: [Op; 13] = [
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Div,
        Op::Pow,
        Op::Sin,
        Op::Cos,
        Op::Tan,
        Op::Exp,
        Op::Ln,
        Op::Sqrt,
        Op::Arctan,
        Op::Arcsin,
    ];

    fn func(self) -> Option<Func> {
        Some(match self {
            Op::Sin => Func::Sin,
            Op::Cos => Func::Cos,
            Op::Tan => Func::Tan,
            Op::Exp => Func::Exp,
            Op::Ln => Func::Ln,
            Op::Sqrt => Func::Sqrt,
            Op::Arctan => Func::Arctan,
            Op::Arcsin => Func::Arcsin,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerParams {
    /// Upper bound on internal operators; the count is uniform in
    /// `1..=max_ops`.
    pub max_ops: usize,
    /// Relative operator frequencies; missing operators are never drawn.
    pub op_weights: BTreeMap<Op, f64>,
    /// Relative weight of the leaf `x` against an integer leaf.
    pub leaf_x_weight: f64,
    pub leaf_int_weight: f64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        let w = [
            (Op::Add, 3.0),
            (Op::Sub, 1.0),
            (Op::Mul, 3.0),
            (Op::Div, 1.5),
            (Op::Pow, 1.5),
            (Op::Sin, 1.0),
            (Op::Cos, 1.0),
            (Op::Tan, 0.3),
            (Op::Exp, 1.0),
            (Op::Ln, 1.0),
            (Op::Sqrt, 0.5),
            (Op::Arctan, 0.3),
            (Op::Arcsin, 0.2),
        ];
        SamplerParams {
            max_ops: 5,
            op_weights: w.into_iter().collect(),
            leaf_x_weight: 2.0,
            leaf_int_weight: 1.0,
        }
    }
}

impl SamplerParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_ops == 0 {
            return Err("sampler max_ops must be at least 1".into());
        }
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !self.op_weights.values().all(|&w| ok(w)) || self.op_weights.values().sum::<f64>() <= 0.0 {
            return Err("operator weights must be non-negative with a positive sum".into());
        }
        if !ok(self.leaf_x_weight) || !ok(self.leaf_int_weight) || self.leaf_x_weight + self.leaf_int_weight <= 0.0 {
            return Err("leaf weights must be non-negative with a positive sum".into());
        }
        Ok(())
    }

    /// Same parameters with a different operator bound.
    pub fn with_max_ops(&self, max_ops: usize) -> SamplerParams {
        SamplerParams { max_ops, ..self.clone() }
    }
}

/// An expression exactly as sampled, before canonicalization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawExpr {
    X,
    Int(i64),
    Unary(Op, Box<RawExpr>),
    Binary(Op, Box<RawExpr>, Box<RawExpr>),
}

impl RawExpr {
    /// Operators in pre-order.
    pub fn ops(&self) -> Vec<Op> {
        let mut out = Vec::new();
        self.collect_ops(&mut out);
        out
    }

    fn collect_ops(&self, out: &mut Vec<Op>) {
        match self {
            RawExpr::X | RawExpr::Int(_) => {}
            RawExpr::Unary(op, a) => {
                out.push(*op);
                a.collect_ops(out);
            }
            RawExpr::Binary(op, a, b) => {
                out.push(*op);
                a.collect_ops(out);
                b.collect_ops(out);
            }
        }
    }

    /// Canonical expression in `s`.
    pub fn build(&self, s: &mut ExprStore) -> ExprId {
        match self {
            RawExpr::X => s.x(),
            RawExpr::Int(n) => s.int(*n),
            RawExpr::Unary(op, a) => {
                let a = a.build(s);
                s.func(op.func().expect("unary operator"), a)
            }
            RawExpr::Binary(op, a, b) => {
                let (a, b) = (a.build(s), b.build(s));
                match op {
                    Op::Add => s.add2(a, b),
                    Op::Sub => s.sub(a, b),
                    Op::Mul => s.mul2(a, b),
                    Op::Div => s.div(a, b),
                    Op::Pow => s.pow(a, b),
                    _ => unreachable!("binary operator"),
                }
            }
        }
    }
}

/// Integer leaves come from `[-5, 5]` without zero.
fn int_leaf(rng: &mut impl Rng) -> i64 {
    let v = rng.gen_range(1..=5);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Samples a raw expression with between 1 and `max_ops` operators. A
/// power's exponent is an integer leaf.
pub fn sample_raw(p: &SamplerParams, rng: &mut impl Rng) -> RawExpr {
    let n = rng.gen_range(1..=p.max_ops);
    let ops: Vec<Op> = Op::ALL.into_iter().filter(|o| p.op_weights.get(o).copied().unwrap_or(0.0) > 0.0).collect();
    let weights: Vec<f64> = ops.iter().map(|o| p.op_weights[o]).collect();
    let op_dist = WeightedIndex::new(&weights).expect("validated weights");
    let leaf_dist = WeightedIndex::new([p.leaf_x_weight, p.leaf_int_weight]).expect("validated weights");
    tree(n, &ops, &op_dist, &leaf_dist, rng)
}

fn tree(n: usize, ops: &[Op], od: &WeightedIndex<f64>, ld: &WeightedIndex<f64>, rng: &mut impl Rng) -> RawExpr {
    if n == 0 {
        return if ld.sample(rng) == 0 { RawExpr::X } else { RawExpr::Int(int_leaf(rng)) };
    }
    let op = ops[od.sample(rng)];
    match op {
        Op::Pow => {
            let base = tree(n - 1, ops, od, ld, rng);
            RawExpr::Binary(op, Box::new(base), Box::new(RawExpr::Int(int_leaf(rng))))
        }
        Op::Add | Op::Sub | Op::Mul | Op::Div => {
            let left = rng.gen_range(0..n);
            let a = tree(left, ops, od, ld, rng);
            let b = tree(n - 1 - left, ops, od, ld, rng);
            RawExpr::Binary(op, Box::new(a), Box::new(b))
        }
        _ => RawExpr::Unary(op, Box::new(tree(n - 1, ops, od, ld, rng))),
    }
}

/// Canonical random expression in `s`.
pub fn sample_random_expr(s: &mut ExprStore, p: &SamplerParams, rng: &mut impl Rng) -> ExprId {
    sample_raw(p, rng).build(s)
}
