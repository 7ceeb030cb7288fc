//! Hash-consed expression DAGs.
//!
//! Every expression lives in an [`ExprStore`]. Nodes are interned, so two
//! structurally identical subexpressions always share one [`ExprId`], and
//! the smart constructors (`add`, `mul`, `pow`, `func`) keep every node in
//! a canonical form:
//!
//! * `Add` and `Mul` are n-ary, flattened, have at least two children and
//!   keep their children sorted by [`ExprStore::cmp`];
//! * numeric parts are folded (rationals are `Mul(n, Pow(d, -1))`);
//! * like terms and like factors are collected (`x + x` is `2*x`, `x*x`
//!   is `x^2`);
//! * a numeric coefficient times a single sum is distributed.
//!
//! Canonical forms make structural equality identifier equality.

mod eval;
mod ops;
mod parse;
mod print;
mod store;

pub use eval::EvalError;
pub use parse::ParseError;
pub use print::PrefixError;
pub use store::ExprStore;

use num_bigint::BigInt;
use std::fmt;

/// Identifier of an interned node. Only meaningful together with the store
/// that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExprId(u32);

impl ExprId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Elementary functions of one argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Arctan,
    Arcsin,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Arctan,
        Func::Arcsin,
    ];

    /// Infix spelling, e.g. `sin`.
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Arctan => "arctan",
            Func::Arcsin => "arcsin",
        }
    }

    /// Prefix-format head, e.g. `Sin`.
    pub fn head(self) -> &'static str {
        match self {
            Func::Sin => "Sin",
            Func::Cos => "Cos",
            Func::Tan => "Tan",
            Func::Exp => "Exp",
            Func::Ln => "Ln",
            Func::Sqrt => "Sqrt",
            Func::Arctan => "Arctan",
            Func::Arcsin => "Arcsin",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn from_head(head: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.head() == head)
    }
}

/// Placeholder leaves that stand in for integers after constant
/// normalization (see `datagen::normalize_constants`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstClass {
    /// Single digit outside `[-2, 2]`.
    Const,
    /// Two digits.
    Const2,
    /// Three or more digits.
    Const3,
}

impl ConstClass {
    pub fn token(self) -> &'static str {
        match self {
            ConstClass::Const => "CONST",
            ConstClass::Const2 => "CONST2",
            ConstClass::Const3 => "CONST3",
        }
    }

    pub fn from_token(tok: &str) -> Option<ConstClass> {
        match tok {
            "CONST" => Some(ConstClass::Const),
            "CONST2" => Some(ConstClass::Const2),
            "CONST3" => Some(ConstClass::Const3),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Int(BigInt),
    Const(ConstClass),
    Var(String),
    Func(Func, ExprId),
    Pow(ExprId, ExprId),
    Mul(Vec<ExprId>),
    Add(Vec<ExprId>),
}

impl Node {
    /// Position of the node kind in the canonical order.
    pub fn rank(&self) -> u8 {
        match self {
            Node::Int(_) => 0,
            Node::Const(_) => 1,
            Node::Var(_) => 2,
            Node::Func(..) => 3,
            Node::Pow(..) => 4,
            Node::Mul(_) => 5,
            Node::Add(_) => 6,
        }
    }

    /// Calls `f` on every child in order.
    pub fn for_each_child(&self, mut f: impl FnMut(ExprId)) {
        match self {
            Node::Int(_) | Node::Const(_) | Node::Var(_) => {}
            Node::Func(_, a) => f(*a),
            Node::Pow(b, e) => {
                f(*b);
                f(*e);
            }
            Node::Mul(xs) | Node::Add(xs) => xs.iter().copied().for_each(f),
        }
    }
}

/// Borrowed view for `Display`.
pub struct Infix<'a> {
    store: &'a ExprStore,
    id: ExprId,
}

impl fmt::Display for Infix<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.store.print_infix(self.id))
    }
}

impl ExprStore {
    pub fn display(&self, id: ExprId) -> Infix<'_> {
        Infix { store: self, id }
    }
}
