//! Choosing a sub-algorithm per record and scoring the choices.
//!
//! Selection replays the outcomes stored in each record, so evaluation
//! never re-runs an integrator.

use crate::calculus::{Status, SubAlgorithmId};
use crate::datagen::{Generator, IntegrandRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Priority order of the fixed baseline: cheap pattern methods first.
pub const BASELINE_ORDER: [SubAlgorithmId; 5] = [
    SubAlgorithmId::RuleTable,
    SubAlgorithmId::DerivDivides,
    SubAlgorithmId::PartialFractions,
    SubAlgorithmId::Hermite,
    SubAlgorithmId::Parts,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// The successful sub-algorithm, if any.
    pub chosen: Option<SubAlgorithmId>,
    /// Sub-algorithms tried, in order.
    pub attempts: Vec<SubAlgorithmId>,
    pub status: Status,
    pub achieved_size: Option<usize>,
    pub optimal_size: usize,
}

impl SelectionResult {
    /// `achieved / optimal`, if something succeeded.
    pub fn ratio(&self) -> Option<f64> {
        self.achieved_size.map(|a| a as f64 / self.optimal_size as f64)
    }

    pub fn is_exact(&self) -> bool {
        self.achieved_size == Some(self.optimal_size)
    }

    /// Within `percent` of optimal, in exact integer arithmetic.
    pub fn within(&self, percent: usize) -> bool {
        self.achieved_size.is_some_and(|a| a * 100 <= self.optimal_size * (100 + percent))
    }
}

/// Tries `order` until a stored outcome is a success.
pub fn select_in_order(order: &[SubAlgorithmId], r: &IntegrandRecord) -> SelectionResult {
    let mut attempts = Vec::new();
    for &alg in order {
        attempts.push(alg);
        let o = &r.outcomes[alg.index()];
        if o.status == Status::Success {
            return SelectionResult {
                chosen: Some(alg),
                attempts,
                status: Status::Success,
                achieved_size: o.size,
                optimal_size: r.optimal_size,
            };
        }
    }
    SelectionResult { chosen: None, attempts, status: Status::Failure, achieved_size: None, optimal_size: r.optimal_size }
}

/// Sub-algorithms by decreasing probability; equal probabilities keep the
/// fixed [`SubAlgorithmId::ALL`] order.
pub fn probability_order(probs: &[f64]) -> Vec<SubAlgorithmId> {
    assert_eq!(probs.len(), SubAlgorithmId::ALL.len(), "one probability per sub-algorithm");
    let mut order = SubAlgorithmId::ALL.to_vec();
    order.sort_by(|a, b| probs[b.index()].total_cmp(&probs[a.index()]).then(a.index().cmp(&b.index())));
    order
}

/// Most probable sub-algorithm first, falling back to the next one on
/// failure.
pub fn select_with_fallback(probs: &[f64], r: &IntegrandRecord) -> SelectionResult {
    select_in_order(&probability_order(probs), r)
}

pub fn baseline_meta(r: &IntegrandRecord) -> SelectionResult {
    select_in_order(&BASELINE_ORDER, r)
}

/// Always picks an optimal sub-algorithm: the upper bound.
pub fn oracle(r: &IntegrandRecord) -> SelectionResult {
    let probs: Vec<f64> = r.labels.iter().map(|&l| f64::from(l)).collect();
    select_with_fallback(&probs, r)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginCounts {
    pub total: usize,
    pub exact_optimal: usize,
    pub within_5pct: usize,
    pub within_10pct: usize,
    pub all_failed: usize,
}

impl MarginCounts {
    fn add(&mut self, s: &SelectionResult) {
        self.total += 1;
        self.exact_optimal += usize::from(s.is_exact());
        self.within_5pct += usize::from(s.within(5));
        self.within_10pct += usize::from(s.within(10));
        self.all_failed += usize::from(s.status != Status::Success);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategy: String,
    pub config_hash: String,
    #[serde(flatten)]
    pub counts: MarginCounts,
    /// Records on which this strategy alone (among the compared
    /// competitors) is optimal.
    pub unique_wins: usize,
    pub per_generator: BTreeMap<Generator, MarginCounts>,
    /// How often each sub-algorithm was finally used.
    pub chosen: BTreeMap<SubAlgorithmId, usize>,
}

/// Scores one strategy's selections; `unique_wins` is filled in by
/// [`compare`].
pub fn evaluate(strategy: &str, config_hash: &str, records: &[IntegrandRecord], sel: &[SelectionResult]) -> EvalReport {
    assert_eq!(records.len(), sel.len(), "one selection per record");
    let mut counts = MarginCounts::default();
    let mut per_generator: BTreeMap<Generator, MarginCounts> = BTreeMap::new();
    let mut chosen: BTreeMap<SubAlgorithmId, usize> = SubAlgorithmId::ALL.iter().map(|&a| (a, 0)).collect();
    for (r, s) in records.iter().zip(sel) {
        counts.add(s);
        per_generator.entry(r.generator).or_default().add(s);
        if let Some(a) = s.chosen {
            *chosen.get_mut(&a).unwrap() += 1;
        }
    }
    EvalReport { strategy: strategy.to_string(), config_hash: config_hash.to_string(), counts, unique_wins: 0, per_generator, chosen }
}

/// Reports for several strategies in the given row order. Unique wins are
/// counted among the strategies flagged as competitors, so an oracle row
/// does not absorb every win.
pub fn compare(
    config_hash: &str,
    records: &[IntegrandRecord],
    strategies: &[(String, bool, Vec<SelectionResult>)],
) -> Vec<EvalReport> {
    let mut reports: Vec<EvalReport> =
        strategies.iter().map(|(name, _, sel)| evaluate(name, config_hash, records, sel)).collect();
    for i in 0..records.len() {
        let winners: Vec<usize> = strategies
            .iter()
            .enumerate()
            .filter(|(_, (_, competes, sel))| *competes && sel[i].is_exact())
            .map(|(k, _)| k)
            .collect();
        if let [only] = winners[..] {
            reports[only].unique_wins += 1;
        }
    }
    reports
}

/// Fixed-width comparison table.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut out = format!(
        "{:<10} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}\n",
        "strategy", "total", "exact", "<=5%", "<=10%", "failed", "unique"
    );
    for r in reports {
        let c = &r.counts;
        let pct = |n: usize| 100.0 * n as f64 / c.total.max(1) as f64;
        out.push_str(&format!(
            "{:<10} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}   ({:.1}% / {:.1}% / {:.1}%)\n",
            r.strategy,
            c.total,
            c.exact_optimal,
            c.within_5pct,
            c.within_10pct,
            c.all_failed,
            r.unique_wins,
            pct(c.exact_optimal),
            pct(c.within_5pct),
            pct(c.within_10pct)
        ));
    }
    out
}

/// Bar-chart data: `strategy<TAB>metric<TAB>count` rows.
pub fn render_bars(reports: &[EvalReport]) -> String {
    let mut out = String::from("strategy\tmetric\tcount\n");
    for r in reports {
        let c = &r.counts;
        for (m, v) in [
            ("exact_optimal", c.exact_optimal),
            ("within_5pct", c.within_5pct),
            ("within_10pct", c.within_10pct),
            ("all_failed", c.all_failed),
            ("unique_wins", r.unique_wins),
        ] {
            out.push_str(&format!("{}\t{m}\t{v}\n", r.strategy));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{labels_from_outcomes, OutcomeRecord};
    use proptest::prelude::*;
    use SubAlgorithmId as A;

    /// Record with the given sizes per sub-algorithm; `None` is a failure.
    pub(crate) fn rec(sizes: [Option<usize>; 5], generator: Generator) -> IntegrandRecord {
        let outcomes: Vec<OutcomeRecord> = A::ALL
            .iter()
            .zip(sizes)
            .map(|(&a, sz)| OutcomeRecord {
                algorithm: a,
                status: if sz.is_some() { Status::Success } else { Status::Failure },
                size: sz,
                output_prefix: None,
                steps_used: 1,
            })
            .collect();
        let (labels, optimal_size) = labels_from_outcomes(&outcomes).unwrap_or((vec![0; 5], 1));
        IntegrandRecord {
            id: String::new(),
            generator,
            integrand_prefix: "x".into(),
            integrand_infix: "x".into(),
            antiderivative_prefix: "x".into(),
            outcomes,
            labels,
            optimal_size,
        }
    }

    // sizes in enum order: RuleTable, DerivDivides, Parts, PartialFractions, Hermite

    #[test]
    fn fallback_examples() {
        let r = rec([Some(3), Some(3), None, None, None], Generator::Fwd);
        let s = select_with_fallback(&[0.9, 0.1, 0.1, 0.1, 0.1], &r);
        assert_eq!((s.chosen, s.attempts.clone()), (Some(A::RuleTable), vec![A::RuleTable]));
        let r = rec([None, Some(3), None, None, None], Generator::Fwd);
        let s = select_with_fallback(&[0.9, 0.8, 0.1, 0.1, 0.1], &r);
        assert_eq!((s.chosen, s.attempts), (Some(A::DerivDivides), vec![A::RuleTable, A::DerivDivides]));
        let r = rec([None, None, None, Some(4), Some(2)], Generator::Fwd);
        let s = select_with_fallback(&[0.5; 5], &r);
        assert_eq!(s.attempts, vec![A::RuleTable, A::DerivDivides, A::Parts, A::PartialFractions]);
        assert_eq!(s.ratio(), Some(2.0));
    }

    #[test]
    fn baseline_examples() {
        let cos = rec([Some(2), Some(2), Some(2), None, None], Generator::Fwd);
        assert_eq!(baseline_meta(&cos).chosen, Some(A::RuleTable));
        let rational = rec([None, None, None, Some(9), Some(8)], Generator::Fwd);
        let s = baseline_meta(&rational);
        assert_eq!(s.chosen, Some(A::PartialFractions));
        assert!(!s.is_exact());
        let parts = rec([None, None, Some(7), None, None], Generator::Ibp);
        let s = baseline_meta(&parts);
        assert_eq!(s.chosen, Some(A::Parts));
        assert_eq!(s.attempts.len(), 5);
        assert_eq!(s.attempts[..4], BASELINE_ORDER[..4]);
    }

    #[test]
    fn all_failed_record() {
        let r = rec([None; 5], Generator::Fwd);
        let s = select_with_fallback(&[0.2; 5], &r);
        assert_eq!((s.chosen, s.status, s.attempts.len()), (None, Status::Failure, 5));
        assert!(!s.within(10));
    }

    /// Ten records whose counts were worked out by hand.
    fn fixture() -> Vec<IntegrandRecord> {
        vec![
            rec([Some(2), Some(2), None, None, None], Generator::Fwd),
            rec([Some(5), Some(4), None, None, None], Generator::Fwd),
            rec([None, Some(21), Some(20), None, None], Generator::Bwd),
            rec([None, None, None, Some(11), Some(10)], Generator::Bwd),
            rec([None, None, Some(7), None, None], Generator::Ibp),
            rec([Some(9), Some(9), Some(8), None, None], Generator::Ibp),
            rec([Some(6), None, None, Some(6), Some(6)], Generator::Sub),
            rec([None, Some(40), Some(38), None, None], Generator::Sub),
            rec([Some(12), None, Some(13), None, None], Generator::Sub),
            rec([None, None, Some(30), Some(33), Some(29)], Generator::Fwd),
        ]
    }

    #[test]
    fn hand_computed_report() {
        let rs = fixture();
        let base: Vec<_> = rs.iter().map(baseline_meta).collect();
        let rep = evaluate("baseline", "h", &rs, &base);
        // baseline sizes/optimal: 2/2 5/4 21/20 11/10 7/7 9/8 6/6 40/38 12/12 33/29
        // exact: records 0,4,6,8; <=5%: adds 21/20; <=10%: adds 11/10 and 40/38
        assert_eq!(rep.counts.total, 10);
        assert_eq!(rep.counts.exact_optimal, 4);
        assert_eq!(rep.counts.within_5pct, 5);
        assert_eq!(rep.counts.within_10pct, 7);
        assert_eq!(rep.counts.all_failed, 0);
        assert_eq!(rep.per_generator[&Generator::Sub].exact_optimal, 2);
        assert_eq!(rep.chosen[&A::RuleTable], 5);

        let orc: Vec<_> = rs.iter().map(oracle).collect();
        let table = compare("h", &rs, &[("oracle".into(), false, orc), ("baseline".into(), true, base.clone())]);
        assert_eq!(table[0].counts.exact_optimal, 10);
        assert_eq!(table[1].unique_wins, 4);
        assert_eq!(table[0].unique_wins, 0);

        // a strategy that always prefers Parts
        let parts: Vec<_> = rs.iter().map(|r| select_with_fallback(&[0.1, 0.2, 0.9, 0.0, 0.0], r)).collect();
        let both = compare("h", &rs, &[("parts".into(), true, parts), ("baseline".into(), true, base)]);
        // order Parts, DerivDivides, RuleTable, ...: exact on 0,1,2,4,5,6,7
        assert_eq!(both[0].counts.exact_optimal, 7);
        assert_eq!(both[0].unique_wins, 4);
        assert_eq!(both[1].unique_wins, 1);
        let text = render_table(&both);
        assert!(text.lines().nth(1).unwrap().starts_with("parts"));
        assert_eq!(render_bars(&both).lines().count(), 11);
    }

    #[test]
    fn anti_oracle_scores_zero() {
        let rs: Vec<_> = (0..10)
            .map(|i| rec([Some(5 + i), Some(4 + i), None, Some(6 + i), None], Generator::Fwd))
            .collect();
        let anti: Vec<_> = rs
            .iter()
            .map(|r| {
                let probs: Vec<f64> = r.labels.iter().map(|&l| 1.0 - f64::from(l)).collect();
                select_with_fallback(&probs, r)
            })
            .collect();
        assert_eq!(evaluate("anti", "h", &rs, &anti).counts.exact_optimal, 0);
    }

    fn arb_record() -> impl Strategy<Value = IntegrandRecord> {
        (proptest::collection::vec(proptest::option::of(1usize..40), 5), 0usize..4).prop_filter_map(
            "needs a success",
            |(sizes, g)| {
                let arr: [Option<usize>; 5] = sizes.try_into().unwrap();
                arr.iter().any(Option::is_some).then(|| rec(arr, Generator::ALL[g]))
            },
        )
    }

    proptest! {
        #[test]
        fn fallback_totality_and_monotone_margins(
            rs in proptest::collection::vec(arb_record(), 1..30),
            probs in proptest::collection::vec(0.0f64..1.0, 5),
        ) {
            let sel: Vec<_> = rs.iter().map(|r| select_with_fallback(&probs, r)).collect();
            for s in &sel {
                prop_assert_eq!(s.status, Status::Success);
                prop_assert!(s.ratio().unwrap() >= 1.0);
                prop_assert!(!s.attempts.is_empty());
            }
            let rep = evaluate("m", "h", &rs, &sel);
            let c = &rep.counts;
            prop_assert!(c.exact_optimal <= c.within_5pct && c.within_5pct <= c.within_10pct && c.within_10pct <= c.total);
            let orc: Vec<_> = rs.iter().map(oracle).collect();
            prop_assert!(evaluate("o", "h", &rs, &orc).counts.exact_optimal >= c.exact_optimal);
            let b1: Vec<_> = rs.iter().map(baseline_meta).collect();
            let b2: Vec<_> = rs.iter().map(baseline_meta).collect();
            prop_assert_eq!(evaluate("b", "h", &rs, &b1), evaluate("b", "h", &rs, &b2));
        }
    }
}
