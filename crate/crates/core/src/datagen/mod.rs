//! Verified integrand/antiderivative pairs, their labels, and corpus
//! assembly.
//!
//! Four generators produce pairs:
//!
//! * FWD samples `f` and integrates it with the portfolio;
//! * BWD samples `F` and differentiates it;
//! * IBP combines two samples `f`, `g` via `f g' = (f g)' - f' g`;
//! * SUB composes an existing pair with an inner function `g` via
//!   `f(g(x)) g'(x) = F(g(x))'`.
//!
//! Every emitted pair is checked numerically. Labeling then runs the whole
//! portfolio on the integrand and marks the sub-algorithms whose output is
//! smallest.

mod corpus;
mod sampler;


pub use corpus::{
    build_corpus, disagreement, read_manifest, read_records, write_corpus, write_manifest, write_records, CorpusError, CorpusSummary, GeneratorStats,
    Manifest,
};
pub use sampler::{sample_random_expr, sample_raw, Op, RawExpr, SamplerParams};

use crate::calculus::{differentiate, integrate_with, verify_pair, Status, SubAlgorithmId};
use crate::expr::{ConstClass, ExprId, ExprStore, Node};
use num_bigint::BigInt;
use num_traits::Signed;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;

/// Sample points used when checking a pair before it is emitted.
pub const EMIT_TRIALS: usize = 40;

/// Largest operator count of the inner function used by SUB.
pub const SUB_INNER_OPS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    #[serde(rename = "FWD")]
    Fwd,
    #[serde(rename = "BWD")]
    Bwd,
    #[serde(rename = "IBP")]
    Ibp,
    #[serde(rename = "SUB")]
    Sub,
}

impl Generator {
    pub const ALL: [Generator; 4] = [Generator::Fwd, Generator::Bwd, Generator::Ibp, Generator::Sub];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Fwd => "FWD",
            Generator::Bwd => "BWD",
            Generator::Ibp => "IBP",
            Generator::Sub => "SUB",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A verified pair living in some store.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratedPair {
    pub integrand: ExprId,
    pub antiderivative: ExprId,
    pub generator: Generator,
    pub seed: u64,
}

/// Settings every generator needs.
#[derive(Clone, Debug)]
pub struct GenContext<'a> {
    pub sampler: &'a SamplerParams,
    pub budget: usize,
    pub node_cap: usize,
    pub seed: u64,
}

/// A pair in serialized form, used as SUB's pool.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolPair {
    pub integrand_prefix: String,
    pub antiderivative_prefix: String,
}

/// Samples an `x`-dependent expression.
fn sample_dependent(s: &mut ExprStore, p: &SamplerParams, rng: &mut impl Rng) -> ExprId {
    let x = s.x();
    loop {
        let e = sample_random_expr(s, p, rng);
        if !s.free_of(e, x) {
            return e;
        }
    }
}

/// Accepts a candidate pair if it is nonzero, within the cap and checks out
/// numerically.
fn accept(s: &mut ExprStore, cx: &GenContext, f: ExprId, big_f: ExprId, generator: Generator) -> Option<GeneratedPair> {
    let x = s.x();
    if s.is_zero(f) || s.tree_size(f) > cx.node_cap {
        return None;
    }
    if verify_pair(s, f, big_f, x, EMIT_TRIALS) != Ok(true) {
        return None;
    }
    Some(GeneratedPair { integrand: f, antiderivative: big_f, generator, seed: cx.seed })
}

/// First successful portfolio member, in fixed order.
fn portfolio_integral(s: &mut ExprStore, e: ExprId, budget: usize) -> Option<ExprId> {
    let x = s.x();
    SubAlgorithmId::ALL.into_iter().find_map(|alg| integrate_with(s, alg, e, x, budget).output)
}

/// FWD: integrate a random `f` with the portfolio; `None` if every member
/// fails.
pub fn gen_fwd(s: &mut ExprStore, cx: &GenContext, rng: &mut impl Rng) -> Option<GeneratedPair> {
    let f = sample_dependent(s, cx.sampler, rng);
    fwd_from(s, cx, f)
}

fn fwd_from(s: &mut ExprStore, cx: &GenContext, f: ExprId) -> Option<GeneratedPair> {
    if s.tree_size(f) > cx.node_cap {
        return None;
    }
    let big_f = portfolio_integral(s, f, cx.budget)?;
    accept(s, cx, f, big_f, Generator::Fwd)
}

/// Maximum resamples inside BWD before giving up.
const BWD_ATTEMPTS: usize = 1000;

/// BWD: differentiate a random `F`. Resamples until the pair is valid.
pub fn gen_bwd(s: &mut ExprStore, cx: &GenContext, rng: &mut impl Rng) -> Option<GeneratedPair> {
    for _ in 0..BWD_ATTEMPTS {
        let big_f = sample_dependent(s, cx.sampler, rng);
        if let Some(p) = bwd_from(s, cx, big_f) {
            return Some(p);
        }
    }
    None
}

fn bwd_from(s: &mut ExprStore, cx: &GenContext, big_f: ExprId) -> Option<GeneratedPair> {
    let x = s.x();
    let f = differentiate(s, big_f, x);
    accept(s, cx, f, big_f, Generator::Bwd)
}

/// IBP: `integral f g' = f g - integral f' g` for random `f`, `g`, with the
/// remaining integral resolved by the portfolio.
pub fn gen_ibp(s: &mut ExprStore, cx: &GenContext, rng: &mut impl Rng) -> Option<GeneratedPair> {
    let half = cx.sampler.with_max_ops(cx.sampler.max_ops.div_ceil(2));
    let f = sample_random_expr(s, &half, rng);
    let g = sample_dependent(s, &half, rng);
    ibp_from(s, cx, f, g)
}

fn ibp_from(s: &mut ExprStore, cx: &GenContext, f: ExprId, g: ExprId) -> Option<GeneratedPair> {
    let x = s.x();
    let df = differentiate(s, f, x);
    let dg = differentiate(s, g, x);
    let rest = s.mul2(df, g);
    let rest_int = if s.is_zero(rest) { s.zero() } else { portfolio_integral(s, rest, cx.budget)? };
    let integrand = s.mul2(f, dg);
    let fg = s.mul2(f, g);
    let anti = s.sub(fg, rest_int);
    accept(s, cx, integrand, anti, Generator::Ibp)
}

/// SUB: `f(g(x)) g'(x)` integrates to `F(g(x))` for a pool pair `(f, F)`
/// and a random inner `g` with at most four operators.
pub fn gen_sub(s: &mut ExprStore, cx: &GenContext, pool: &[PoolPair], rng: &mut impl Rng) -> Option<GeneratedPair> {
    assert!(!pool.is_empty(), "SUB needs a non-empty pool");
    let pair = &pool[rng.gen_range(0..pool.len())];
    let f = s.from_prefix(&pair.integrand_prefix).ok()?;
    let big_f = s.from_prefix(&pair.antiderivative_prefix).ok()?;
    let inner = cx.sampler.with_max_ops(SUB_INNER_OPS.min(cx.sampler.max_ops));
    let g = sample_dependent(s, &inner, rng);
    sub_from(s, cx, f, big_f, g)
}

fn sub_from(s: &mut ExprStore, cx: &GenContext, f: ExprId, big_f: ExprId, g: ExprId) -> Option<GeneratedPair> {
    let x = s.x();
    let dg = differentiate(s, g, x);
    let fg = s.substitute(f, x, g);
    let integrand = s.mul2(fg, dg);
    let anti = s.substitute(big_f, x, g);
    accept(s, cx, integrand, anti, Generator::Sub)
}

/// Replaces integers outside `[-2, 2]` by a placeholder chosen by the
/// digit count of the absolute value. The result is rebuilt structurally
/// without re-canonicalization, so placeholders never fold together.
pub fn normalize_constants(s: &mut ExprStore, e: ExprId) -> ExprId {
    let mut memo = HashMap::new();
    normalize_memo(s, e, &mut memo)
}

/// Placeholder class for an integer, or `None` if it stays literal.
pub fn constant_class(n: &BigInt) -> Option<ConstClass> {
    if n.abs() <= BigInt::from(2) {
        return None;
    }
    Some(match n.abs().to_string().len() {
        1 => ConstClass::Const,
        2 => ConstClass::Const2,
        _ => ConstClass::Const3,
    })
}

fn normalize_memo(s: &mut ExprStore, e: ExprId, memo: &mut HashMap<ExprId, ExprId>) -> ExprId {
    if let Some(&r) = memo.get(&e) {
        return r;
    }
    let out = match s.node(e).clone() {
        Node::Int(n) => match constant_class(&n) {
            Some(c) => s.constant(c),
            None => e,
        },
        Node::Const(_) | Node::Var(_) => e,
        Node::Func(f, a) => {
            let a = normalize_memo(s, a, memo);
            s.intern(Node::Func(f, a))
        }
        Node::Pow(b, x) => {
            let b = normalize_memo(s, b, memo);
            let x = normalize_memo(s, x, memo);
            s.intern(Node::Pow(b, x))
        }
        Node::Mul(xs) => {
            let ys = xs.iter().map(|&c| normalize_memo(s, c, memo)).collect();
            s.intern(Node::Mul(ys))
        }
        Node::Add(xs) => {
            let ys = xs.iter().map(|&c| normalize_memo(s, c, memo)).collect();
            s.intern(Node::Add(ys))
        }
    };
    memo.insert(e, out);
    out
}

/// Prefix serialization of the normalized integrand: the dedup key.
pub fn normalized_key(prefix: &str) -> String {
    let mut s = ExprStore::new();
    let e = s.from_prefix(prefix).expect("stored prefixes parse");
    let n = normalize_constants(&mut s, e);
    s.to_prefix(n)
}

/// Keeps the first record of every normalized form.
pub fn dedup(records: Vec<IntegrandRecord>) -> Vec<IntegrandRecord> {
    let mut seen = HashSet::new();
    records.into_iter().filter(|r| seen.insert(normalized_key(&r.integrand_prefix))).collect()
}

/// One portfolio member's result on a record's integrand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub algorithm: SubAlgorithmId,
    pub status: Status,
    pub size: Option<usize>,
    pub output_prefix: Option<String>,
    pub steps_used: usize,
}

/// A labeled integrand. `outcomes` and `labels` follow
/// [`SubAlgorithmId::ALL`] order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrandRecord {
    pub id: String,
    pub generator: Generator,
    pub integrand_prefix: String,
    pub integrand_infix: String,
    pub antiderivative_prefix: String,
    pub outcomes: Vec<OutcomeRecord>,
    pub labels: Vec<u8>,
    pub optimal_size: usize,
}

impl IntegrandRecord {
    /// Size achieved by `alg`, if it succeeded.
    pub fn size_of(&self, alg: SubAlgorithmId) -> Option<usize> {
        self.outcomes[alg.index()].size
    }

    pub fn is_optimal(&self, alg: SubAlgorithmId) -> bool {
        self.labels[alg.index()] == 1
    }
}

/// Labels from stored outcomes: the successful members of minimal size.
/// `None` when nothing succeeded.
pub fn labels_from_outcomes(outcomes: &[OutcomeRecord]) -> Option<(Vec<u8>, usize)> {
    let best = outcomes.iter().filter(|o| o.status == Status::Success).filter_map(|o| o.size).min()?;
    let labels = outcomes
        .iter()
        .map(|o| u8::from(o.status == Status::Success && o.size == Some(best)))
        .collect();
    Some((labels, best))
}

/// Runs the whole portfolio on the pair's integrand; `None` (drop) if every
/// member fails.
pub fn label_record(s: &mut ExprStore, p: &GeneratedPair, id: String, budget: usize) -> Option<IntegrandRecord> {
    let x = s.x();
    let outcomes: Vec<OutcomeRecord> = SubAlgorithmId::ALL
        .into_iter()
        .map(|alg| {
            let o = integrate_with(s, alg, p.integrand, x, budget);
            OutcomeRecord {
                algorithm: alg,
                status: o.status,
                size: o.size,
                output_prefix: o.output.map(|y| s.to_prefix(y)),
                steps_used: o.steps_used,
            }
        })
        .collect();
    let (labels, optimal_size) = labels_from_outcomes(&outcomes)?;
    Some(IntegrandRecord {
        id,
        generator: p.generator,
        integrand_prefix: s.to_prefix(p.integrand),
        integrand_infix: s.print_infix(p.integrand),
        antiderivative_prefix: s.to_prefix(p.antiderivative),
        outcomes,
        labels,
        optimal_size,
    })
}
