//! Differentiation, the integration portfolio and numeric verification.
//!
//! The portfolio has five sub-algorithms, each a separate procedure with its
//! own domain of applicability:
//!
//! * [`SubAlgorithmId::RuleTable`]: linearity plus a table of antiderivative
//!   patterns matched against `f(a*x + b)`;
//! * [`SubAlgorithmId::DerivDivides`]: substitution `u = g(x)` when the
//!   integrand divided by `g'` is an expression in `g` alone;
//! * [`SubAlgorithmId::Parts`]: integration by parts with LIATE ranking and
//!   cycle detection;
//! * [`SubAlgorithmId::PartialFractions`]: rational integrands, factored over
//!   the rationals into linear and irreducible quadratic factors;
//! * [`SubAlgorithmId::Hermite`]: rational integrands, Hermite reduction of
//!   the rational part followed by partial fractions on the log part.
//!
//! A `Success` is only reported after the result differentiates back to the
//! integrand numerically.

mod derivdiv;
mod diff;
mod parts;
mod poly;
mod rational;
mod table;

#[cfg(test)]
mod tests;

pub use diff::differentiate;
pub use poly::{solve_linear, Poly, RatFunc};

use crate::expr::{ExprId, ExprStore, Node};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Default number of elementary steps an integration call may take.
pub const DEFAULT_BUDGET: usize = 10_000;

/// Number of sample points used by the internal success check.
pub const VERIFY_TRIALS: usize = 20;

/// The label set: one entry per portfolio member.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubAlgorithmId {
    RuleTable,
    DerivDivides,
    Parts,
    PartialFractions,
    Hermite,
}

impl SubAlgorithmId {
    pub const ALL: [SubAlgorithmId; 5] = [
        SubAlgorithmId::RuleTable,
        SubAlgorithmId::DerivDivides,
        SubAlgorithmId::Parts,
        SubAlgorithmId::PartialFractions,
        SubAlgorithmId::Hermite,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SubAlgorithmId::RuleTable => "RuleTable",
            SubAlgorithmId::DerivDivides => "DerivDivides",
            SubAlgorithmId::Parts => "Parts",
            SubAlgorithmId::PartialFractions => "PartialFractions",
            SubAlgorithmId::Hermite => "Hermite",
        }
    }

    pub fn from_name(name: &str) -> Option<SubAlgorithmId> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

impl fmt::Display for SubAlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Success,
    Failure,
    BudgetExceeded,
}

/// Result of one integration attempt. `output` and `size` are present iff
/// the status is `Success`; `output` refers to the store passed in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegrationOutcome {
    pub status: Status,
    pub output: Option<ExprId>,
    pub size: Option<usize>,
    pub steps_used: usize,
}

impl IntegrationOutcome {
    pub fn is_success(&self) -> bool {
        self.status == Status::Success
    }
}

/// Why an integrator gave up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Fail {
    NotApplicable,
    Budget,
}

pub(crate) type Res<T> = Result<T, Fail>;

/// Shared state of one integration call.
pub(crate) struct Cx<'a> {
    pub s: &'a mut ExprStore,
    pub x: ExprId,
    used: usize,
    limit: usize,
}

impl<'a> Cx<'a> {
    pub fn new(s: &'a mut ExprStore, x: ExprId, limit: usize) -> Self {
        Cx { s, x, used: 0, limit }
    }

    /// Charges `n` steps against the budget.
    pub fn tick(&mut self, n: usize) -> Res<()> {
        self.used += n;
        if self.used > self.limit {
            Err(Fail::Budget)
        } else {
            Ok(())
        }
    }

    pub fn free(&self, e: ExprId) -> bool {
        self.s.free_of(e, self.x)
    }

    /// Splits a term into its `x`-free factor and the `x`-dependent factors.
    pub fn split_free(&mut self, t: ExprId) -> (ExprId, Vec<ExprId>) {
        let (mut free, mut dep) = (Vec::new(), Vec::new());
        for f in self.s.factors(t) {
            if self.free(f) {
                free.push(f);
            } else {
                dep.push(f);
            }
        }
        (self.s.mul(free), dep)
    }
}

/// Runs one sub-algorithm on `e` with respect to `var` within `budget` steps.
/// Deterministic in its inputs.
pub fn integrate_with(
    s: &mut ExprStore,
    alg: SubAlgorithmId,
    e: ExprId,
    var: ExprId,
    budget: usize,
) -> IntegrationOutcome {
    assert!(budget > 0, "integration budget must be positive");
    let mut cx = Cx::new(s, var, budget);
    let r = run(&mut cx, alg, e);
    let steps_used = cx.used.min(budget);
    let fail = |status| IntegrationOutcome { status, output: None, size: None, steps_used };
    match r {
        Ok(out) => {
            if verify_pair(s, e, out, var, VERIFY_TRIALS) == Ok(true) {
                IntegrationOutcome {
                    status: Status::Success,
                    output: Some(out),
                    size: Some(s.dag_size(out)),
                    steps_used,
                }
            } else {
                fail(Status::Failure)
            }
        }
        Err(Fail::Budget) => fail(Status::BudgetExceeded),
        Err(Fail::NotApplicable) => fail(Status::Failure),
    }
}

/// The raw candidate antiderivative without the numeric check.
pub(crate) fn run(cx: &mut Cx, alg: SubAlgorithmId, e: ExprId) -> Res<ExprId> {
    match alg {
        SubAlgorithmId::RuleTable => table::integrate(cx, e),
        SubAlgorithmId::DerivDivides => derivdiv::integrate(cx, e),
        SubAlgorithmId::Parts => parts::integrate(cx, e),
        SubAlgorithmId::PartialFractions => rational::partial_fractions(cx, e),
        SubAlgorithmId::Hermite => rational::hermite(cx, e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("no sample point in the domain of both expressions")]
    InconclusiveDomain,
}

/// Seed of the sampler used by [`verify_pair`].
const VERIFY_SEED: u64 = 0x1d1f_f00d;

/// Checks numerically that `antiderivative' == integrand` at `trials`
/// points, using a fixed-seed sampler.
pub fn verify_pair(
    s: &mut ExprStore,
    integrand: ExprId,
    antiderivative: ExprId,
    var: ExprId,
    trials: usize,
) -> Result<bool, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    verify_pair_with(s, integrand, antiderivative, var, trials, &mut rng)
}

/// [`verify_pair`] with a caller-supplied random source.
pub fn verify_pair_with(
    s: &mut ExprStore,
    integrand: ExprId,
    antiderivative: ExprId,
    var: ExprId,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<bool, VerifyError> {
    assert!(trials >= 1, "at least one trial is required");
    let name = match s.node(var) {
        Node::Var(v) => v.clone(),
        _ => panic!("verify_pair needs a variable"),
    };
    let deriv = differentiate(s, antiderivative, var);
    let (mut valid, mut attempts) = (0, 0);
    while valid < trials && attempts < 10 * trials {
        attempts += 1;
        // mostly near the origin, sometimes wider for domains away from it
        let t: f64 = if rng.gen_bool(0.75) { rng.gen_range(-4.0..4.0) } else { rng.gen_range(-16.0..16.0) };
        let b = [(name.as_str(), t)];
        let (Ok(f), Ok(g)) = (s.eval_numeric(integrand, &b), s.eval_numeric(deriv, &b)) else {
            continue;
        };
        let scale = f.abs().max(1.0);
        if (f - g).abs() > 1e-6 * scale {
            return Ok(false);
        }
        valid += 1;
    }
    if valid == 0 {
        Err(VerifyError::InconclusiveDomain)
    } else {
        Ok(true)
    }
}
