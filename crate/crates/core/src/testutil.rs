//! Random expression generators shared by unit tests.

use crate::expr::{ExprId, ExprStore, Func};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub enum Ast {
    X,
    Int(i64),
    F(Func, Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, i64),
}

pub fn build(s: &mut ExprStore, a: &Ast) -> ExprId {
    match a {
        Ast::X => s.x(),
        Ast::Int(n) => s.int(*n),
        Ast::F(f, a) => {
            let a = build(s, a);
            s.func(*f, a)
        }
        Ast::Add(a, b) => {
            let (a, b) = (build(s, a), build(s, b));
            s.add2(a, b)
        }
        Ast::Sub(a, b) => {
            let (a, b) = (build(s, a), build(s, b));
            s.sub(a, b)
        }
        Ast::Mul(a, b) => {
            let (a, b) = (build(s, a), build(s, b));
            s.mul2(a, b)
        }
        Ast::Div(a, b) => {
            let (a, b) = (build(s, a), build(s, b));
            s.div(a, b)
        }
        Ast::Pow(a, k) => {
            let a = build(s, a);
            s.powi(a, *k)
        }
    }
}

pub fn tree_count(a: &Ast) -> usize {
    match a {
        Ast::X | Ast::Int(_) => 1,
        Ast::F(_, a) | Ast::Pow(a, _) => 1 + tree_count(a),
        Ast::Add(a, b) | Ast::Sub(a, b) | Ast::Mul(a, b) | Ast::Div(a, b) => {
            1 + tree_count(a) + tree_count(b)
        }
    }
}

pub fn arb_ast() -> impl Strategy<Value = Ast> {
    let leaf = prop_oneof![Just(Ast::X), (-12i64..=12).prop_map(Ast::Int)];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (prop::sample::select(Func::ALL.to_vec()), inner.clone())
                .prop_map(|(f, a)| Ast::F(f, Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Div(Box::new(a), Box::new(b))),
            (inner, -3i64..=4).prop_map(|(a, k)| Ast::Pow(Box::new(a), k)),
        ]
    })
}
