use super::{ExprId, ExprStore, Func, Node};
use num_traits::ToPrimitive;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: &'static str },
    #[error("placeholder constant `{0}` has no numeric value")]
    Placeholder(&'static str),
}

impl ExprStore {
    /// Evaluates `e` in double precision. Domain violations (logarithm of a
    /// non-positive number, division by zero, non-finite results, ...) are
    /// reported with the offending subexpression instead of yielding NaN.
    pub fn eval_numeric(&self, e: ExprId, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        let mut memo = HashMap::new();
        self.eval_memo(e, bindings, &mut memo)
    }

    fn eval_memo(
        &self,
        e: ExprId,
        bindings: &[(&str, f64)],
        memo: &mut HashMap<ExprId, f64>,
    ) -> Result<f64, EvalError> {
        if let Some(&v) = memo.get(&e) {
            return Ok(v);
        }
        let domain = |reason| EvalError::Domain { expr: self.print_infix(e), reason };
        let v = match self.node(e) {
            Node::Int(n) => n.to_f64().ok_or_else(|| domain("integer out of range"))?,
            Node::Const(c) => return Err(EvalError::Placeholder(c.token())),
            Node::Var(name) => bindings
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?,
            Node::Func(f, a) => {
                let a = self.eval_memo(*a, bindings, memo)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => {
                        if a.cos().abs() < 1e-12 {
                            return Err(domain("tangent pole"));
                        }
                        a.tan()
                    }
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(domain("logarithm of a non-positive number"));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(domain("square root of a negative number"));
                        }
                        a.sqrt()
                    }
                    Func::Arctan => a.atan(),
                    Func::Arcsin => {
                        if !(-1.0..=1.0).contains(&a) {
                            return Err(domain("arcsine outside [-1, 1]"));
                        }
                        a.asin()
                    }
                }
            }
            Node::Pow(b, x) => {
                let base = self.eval_memo(*b, bindings, memo)?;
                let int_exp = self.as_integer(*x).and_then(|k| k.to_i32());
                match int_exp {
                    Some(k) => {
                        if base == 0.0 && k < 0 {
                            return Err(domain("division by zero"));
                        }
                        base.powi(k)
                    }
                    None => {
                        let ex = self.eval_memo(*x, bindings, memo)?;
                        if base < 0.0 {
                            return Err(domain("negative base with non-integer exponent"));
                        }
                        if base == 0.0 && ex <= 0.0 {
                            return Err(domain("division by zero"));
                        }
                        base.powf(ex)
                    }
                }
            }
            Node::Mul(xs) => {
                let mut acc = 1.0;
                for &c in xs {
                    acc *= self.eval_memo(c, bindings, memo)?;
                }
                acc
            }
            Node::Add(xs) => {
                let mut acc = 0.0;
                for &c in xs {
                    acc += self.eval_memo(c, bindings, memo)?;
                }
                acc
            }
        };
        if !v.is_finite() {
            return Err(domain("non-finite value"));
        }
        memo.insert(e, v);
        Ok(v)
    }
}
