//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero on any FAIL.

use intsel::calculus::{integrate_with, verify_pair, verify_pair_with, Status, SubAlgorithmId};
use intsel::config::{ModelConfig, Quotas, RunConfig};
use intsel::datagen::{
    constant_class, dedup, gen_bwd, gen_fwd, gen_ibp, gen_sub, label_record, normalize_constants, read_records,
    sample_random_expr, GenContext, GeneratedPair, Generator, IntegrandRecord, PoolPair, SamplerParams,
};
use intsel::encode::TreeEncoding;
use intsel::expr::{ConstClass, ExprStore};
use intsel::nn::{dropout_mask, loss_bce, CellKind, ClassifierStack, Dims, Input, Mode};
use intsel::pipeline::{cmd_eval, cmd_generate, cmd_train, read_reports, Layout};
use intsel::select::{select_with_fallback, EvalReport};
use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::time::{Duration, Instant};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

// --- 1: generator soundness -------------------------------------------------

fn generator_soundness() -> Outcome {
    const PER_GENERATOR: usize = 1000;
    let start = Instant::now();
    let p = SamplerParams::default();
    let cx = GenContext { sampler: &p, budget: intsel::calculus::DEFAULT_BUDGET, node_cap: 200, seed: 0 };
    let mut s = ExprStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pairs: Vec<GeneratedPair> = Vec::new();
    let mut counts = [0usize; 4];
    let mut pool = Vec::new();
    while counts[..3].iter().any(|&c| c < PER_GENERATOR) {
        for g in [Generator::Fwd, Generator::Bwd, Generator::Ibp] {
            if counts[g.index()] >= PER_GENERATOR {
                continue;
            }
            let pair = match g {
                Generator::Fwd => gen_fwd(&mut s, &cx, &mut rng),
                Generator::Bwd => gen_bwd(&mut s, &cx, &mut rng),
                _ => gen_ibp(&mut s, &cx, &mut rng),
            };
            if let Some(pair) = pair {
                counts[g.index()] += 1;
                if g != Generator::Ibp {
                    pool.push(PoolPair {
                        integrand_prefix: s.to_prefix(pair.integrand),
                        antiderivative_prefix: s.to_prefix(pair.antiderivative),
                    });
                }
                pairs.push(pair);
            }
        }
    }
    while counts[3] < PER_GENERATOR {
        if let Some(pair) = gen_sub(&mut s, &cx, &pool, &mut rng) {
            counts[3] += 1;
            pairs.push(pair);
        }
    }
    let x = s.x();
    let bad = pairs
        .iter()
        .filter(|p| verify_pair(&mut s, p.integrand, p.antiderivative, x, 20) != Ok(true))
        .count();
    let elapsed = start.elapsed();
    outcome(
        bad == 0 && elapsed < Duration::from_secs(300),
        format!("{} pairs, {bad} failed verification, {:.1}s", pairs.len(), elapsed.as_secs_f64()),
    )
}

// --- 2: gradient oracle -----------------------------------------------------

/// Central differences with step 1e-5 carry rounding error near 1e-11, so
/// relative errors are measured against at least this magnitude.
const FD_FLOOR: f64 = 1e-6;

fn random_tree(n: usize, vocab: u32, rng: &mut ChaCha8Rng) -> TreeEncoding {
    // parents precede children, which is already a valid pre-order when
    // each node attaches to the most recent open ancestor chain
    let mut ids = Vec::with_capacity(n);
    let mut children = vec![Vec::new(); n];
    let mut chain: Vec<usize> = Vec::new();
    for i in 0..n {
        ids.push(rng.gen_range(2..vocab));
        if i > 0 {
            let keep = rng.gen_range(1..=chain.len());
            chain.truncate(keep);
            children[*chain.last().unwrap()].push(i);
        }
        chain.push(i);
    }
    TreeEncoding { ids, children }
}

fn grad_error(kind: CellKind, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = Dims {
        vocab: rng.gen_range(5..10),
        emb: rng.gen_range(2..6),
        h1: rng.gen_range(2..7),
        h2: rng.gen_range(2..6),
        dense: rng.gen_range(2..6),
    };
    let mut stack = ClassifierStack::init(dims, &mut rng);
    for t in stack.tensors_mut() {
        for v in &mut t.data {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    let n = rng.gen_range(1..9);
    let input = match kind {
        CellKind::Lstm => Input::Sequence((0..n).map(|_| rng.gen_range(2..dims.vocab as u32)).collect()),
        CellKind::Treelstm => Input::tree(&random_tree(n, dims.vocab as u32, &mut rng)),
    };
    let mask = dropout_mask(dims.h2, 0.4, &mut rng);
    let y = f64::from(rng.gen_range(0..2u8));
    let w = rng.gen_range(0.5..3.0);
    let loss = |s: &ClassifierStack| w * loss_bce(s.trace(&input, Some(mask.clone())).p, y);
    let tr = stack.trace(&input, Some(mask.clone()));
    let mut g = ClassifierStack::zeros(dims);
    stack.backward(&input, &tr, y, w, &mut g);
    let analytic: Vec<Vec<f64>> = g.tensors().into_iter().map(|(_, t)| t.data.clone()).collect();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (ti, a) in analytic.iter().enumerate() {
        for (k, &ak) in a.iter().enumerate() {
            let orig = stack.tensors_mut()[ti].data[k];
            stack.tensors_mut()[ti].data[k] = orig + h;
            let up = loss(&stack);
            stack.tensors_mut()[ti].data[k] = orig - h;
            let down = loss(&stack);
            stack.tensors_mut()[ti].data[k] = orig;
            let num = (up - down) / (2.0 * h);
            worst = worst.max((ak - num).abs() / ak.abs().max(num.abs()).max(FD_FLOOR));
        }
    }
    worst
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut configs = 0;
    for kind in CellKind::ALL {
        for seed in 0..8 {
            worst = worst.max(grad_error(kind, 100 + seed));
            configs += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-4 && elapsed < Duration::from_secs(120),
        format!("{configs} configurations, max relative error {worst:.2e}, {:.1}s", elapsed.as_secs_f64()),
    )
}

// --- 3: preprocessing fidelity ----------------------------------------------

fn synthetic_record(prefix: String, i: usize) -> IntegrandRecord {
    IntegrandRecord {
        id: format!("r{i}"),
        generator: Generator::Fwd,
        integrand_infix: prefix.clone(),
        integrand_prefix: prefix,
        antiderivative_prefix: "x".into(),
        outcomes: Vec::new(),
        labels: Vec::new(),
        optimal_size: 1,
    }
}

fn preprocessing_fidelity() -> Outcome {
    let fixture: [(i64, Option<ConstClass>); 6] = [
        (-2, None),
        (2, None),
        (5, Some(ConstClass::Const)),
        (-7, Some(ConstClass::Const)),
        (42, Some(ConstClass::Const2)),
        (123, Some(ConstClass::Const3)),
    ];
    let table_ok = fixture.iter().all(|&(n, want)| constant_class(&BigInt::from(n)) == want);
    // the mapping applied inside an expression
    let mut s = ExprStore::new();
    let e = s.parse("5*x + 42*x^2 + 123*sin(x) + 2*cos(x) - 7*exp(x) - 2*ln(x)").unwrap();
    let n = normalize_constants(&mut s, e);
    let text = s.to_prefix(n);
    let words: Vec<&str> = text.split(' ').collect();
    let embed_ok = ["CONST", "CONST2", "CONST3", "2", "-2"].iter().all(|t| words.contains(t))
        && !words.iter().any(|w| ["5", "-7", "42", "123"].contains(w));

    let p = SamplerParams::default();
    let mut runner = TestRunner::new(PtConfig { cases: 10_000, failure_persistence: None, ..PtConfig::default() });
    let prop = runner.run(&(any::<u64>(), any::<u64>()), |(a, b)| {
        let mut s = ExprStore::new();
        let e = sample_random_expr(&mut s, &p, &mut ChaCha8Rng::seed_from_u64(a));
        let n1 = normalize_constants(&mut s, e);
        prop_assert_eq!(normalize_constants(&mut s, n1), n1);
        let f = sample_random_expr(&mut s, &p, &mut ChaCha8Rng::seed_from_u64(b));
        // stored records always carry integer-valued integrands
        let recs: Vec<_> = [e, f, e].iter().enumerate().map(|(i, &t)| synthetic_record(s.to_prefix(t), i)).collect();
        let once = dedup(recs);
        prop_assert!(once.len() <= 2);
        prop_assert_eq!(dedup(once.clone()), once);
        Ok(())
    });
    let detail = format!(
        "rule table {}, embedding {}, idempotence property {}",
        if table_ok { "exact" } else { "MISMATCH" },
        if embed_ok { "ok" } else { "MISMATCH" },
        match &prop {
            Ok(()) => "held over 10000 cases".to_string(),
            Err(e) => format!("failed: {e}"),
        }
    );
    outcome(table_ok && embed_ok && prop.is_ok(), detail)
}

// --- 4: labeling oracle -----------------------------------------------------

/// Hand-verified optimal label vectors in `SubAlgorithmId::ALL` order.
const LABEL_FIXTURE: [(&str, [u8; 5]); 20] = [
    ("x^2", [1, 1, 1, 1, 1]),
    ("cos(x)", [1, 1, 1, 0, 0]),
    ("1/x", [1, 1, 0, 1, 1]),
    ("x*exp(x)", [0, 0, 1, 0, 0]),
    ("x*cos(x)", [0, 0, 1, 0, 0]),
    ("ln(x)", [1, 1, 1, 0, 0]),
    ("2*x*cos(x^2)", [0, 1, 0, 0, 0]),
    ("1/(x^2-1)", [0, 0, 0, 1, 1]),
    ("x/(x^2+1)", [1, 1, 1, 1, 1]),
    ("1/(x^2+1)", [1, 1, 0, 1, 1]),
    ("(2*x+3)/(x^2+3*x+2)", [0, 1, 0, 0, 0]),
    ("x*ln(x)", [0, 0, 1, 0, 0]),
    ("sin(x)^2*cos(x)", [1, 1, 1, 0, 0]),
    ("1/(x*(x+1))", [0, 0, 0, 1, 1]),
    ("2*x/(x^2+1)^2", [1, 1, 0, 1, 1]),
    ("x*exp(x^2)", [0, 1, 0, 0, 0]),
    ("arctan(x)", [1, 1, 1, 0, 0]),
    ("(x+1)^3", [1, 1, 1, 0, 0]),
    ("tan(x)", [1, 1, 1, 0, 0]),
    ("exp(x)*cos(exp(x))", [0, 1, 0, 0, 0]),
];

/// Labels by running every member, re-checking each output at fresh points
/// and taking the minimal DAG size.
fn brute_force_labels(s: &mut ExprStore, text: &str) -> Vec<u8> {
    let e = s.parse(text).unwrap();
    let x = s.x();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let sizes: Vec<Option<usize>> = SubAlgorithmId::ALL
        .into_iter()
        .map(|alg| {
            let out = integrate_with(s, alg, e, x, intsel::calculus::DEFAULT_BUDGET).output?;
            (verify_pair_with(s, e, out, x, 30, &mut rng) == Ok(true)).then(|| s.dag_size(out))
        })
        .collect();
    let best = sizes.iter().flatten().min().copied();
    sizes.iter().map(|&z| u8::from(z.is_some() && z == best)).collect()
}

fn labeling_oracle() -> Outcome {
    let mut mismatches = Vec::new();
    let mut multi = 0;
    for (i, (text, want)) in LABEL_FIXTURE.iter().enumerate() {
        let mut s = ExprStore::new();
        let e = s.parse(text).unwrap();
        let x = s.x();
        let pair = GeneratedPair { integrand: e, antiderivative: x, generator: Generator::Fwd, seed: 0 };
        let rec = label_record(&mut s, &pair, format!("f{i}"), intsel::calculus::DEFAULT_BUDGET);
        let got = rec.map(|r| r.labels).unwrap_or_default();
        let brute = brute_force_labels(&mut s, text);
        if got != want || brute != want {
            mismatches.push(format!("{text}: labeled {got:?}, brute force {brute:?}, expected {want:?}"));
        }
        multi += usize::from(want.iter().sum::<u8>() >= 2);
    }
    let ok = mismatches.is_empty() && multi > 0;
    let mut detail = format!("{} integrands, {multi} multi-label, {} mismatches", LABEL_FIXTURE.len(), mismatches.len());
    for m in mismatches {
        detail.push_str("\n    ");
        detail.push_str(&m);
    }
    outcome(ok, detail)
}

// --- desk pipeline (5, 6) ---------------------------------------------------

fn desk_config(out: &Path) -> RunConfig {
    RunConfig {
        seed: 7,
        quotas: Quotas { train_per_generator: 1500, test_per_generator: 300 },
        out: out.to_path_buf(),
        ..RunConfig::default()
    }
}

struct DeskRun {
    records: Vec<IntegrandRecord>,
    reports: Vec<EvalReport>,
    table: String,
    train_eval: Duration,
}

fn run_desk(dir: &Path) -> Result<DeskRun, String> {
    let cfg = desk_config(dir);
    cmd_generate(&cfg, false).map_err(|e| e.to_string())?;
    let start = Instant::now();
    for kind in CellKind::ALL {
        cmd_train(&cfg, kind, false).map_err(|e| e.to_string())?;
    }
    let table = cmd_eval(&cfg, false).map_err(|e| e.to_string())?;
    let train_eval = start.elapsed();
    let lay = Layout::new(dir);
    let mut records = read_records(&lay.corpus().join("train.jsonl")).map_err(|e| e.to_string())?;
    records.extend(read_records(&lay.corpus().join("test.jsonl")).map_err(|e| e.to_string())?);
    let reports = read_reports(&lay.eval_reports()).map_err(|e| e.to_string())?;
    Ok(DeskRun { records, reports, table, train_eval })
}

fn monotone(r: &EvalReport) -> bool {
    let c = &r.counts;
    c.exact_optimal <= c.within_5pct && c.within_5pct <= c.within_10pct && c.within_10pct <= c.total
}

fn selection_contract(desk: &DeskRun) -> Outcome {
    let mut runner = TestRunner::new(PtConfig { cases: 256, failure_persistence: None, ..PtConfig::default() });
    let prop = runner.run(&prop::collection::vec(0.0f64..=1.0, 5), |probs| {
        for r in &desk.records {
            prop_assert_eq!(select_with_fallback(&probs, r).status, Status::Success, "{}", r.id);
        }
        Ok(())
    });
    let mono = desk.reports.iter().all(monotone);
    outcome(
        prop.is_ok() && mono,
        format!(
            "fallback over {} records: {}; margins monotone in {} reports: {}",
            desk.records.len(),
            match &prop {
                Ok(()) => "always Success".to_string(),
                Err(e) => format!("failed: {e}"),
            },
            desk.reports.len(),
            mono
        ),
    )
}

fn trend(desk: &DeskRun) -> Outcome {
    let exact = |name: &str| desk.reports.iter().find(|r| r.strategy == name).map(|r| (r.counts.exact_optimal, r.counts.total));
    let (Some((tree, total)), Some((lstm, _)), Some((base, _))) = (exact("treelstm"), exact("lstm"), exact("baseline"))
    else {
        return outcome(false, "missing strategy in eval reports");
    };
    let pct = |n: usize| 100.0 * n as f64 / total as f64;
    let gap = pct(tree) - pct(lstm);
    let fast = desk.train_eval < Duration::from_secs(45 * 60);
    outcome(
        gap >= 5.0 && tree > base && fast,
        format!(
            "exact-optimal of {total}: treelstm {tree} ({:.1}%), lstm {lstm} ({:.1}%), baseline {base} ({:.1}%); gap {gap:.1}pp; train+eval {:.0}s",
            pct(tree),
            pct(lstm),
            pct(base),
            desk.train_eval.as_secs_f64()
        ),
    )
}

// --- 7: degenerate agreement ------------------------------------------------

fn degenerate_agreement() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = Dims { vocab: 12, emb: 6, h1: 8, h2: 5, dense: 4 };
        let mut stack = ClassifierStack::init(dims, &mut rng);
        for t in stack.tensors_mut() {
            for v in &mut t.data {
                *v += rng.gen_range(-0.5..0.5);
            }
        }
        for tok in 0..dims.vocab as u32 {
            let a = stack.forward(&Input::Sequence(vec![tok]), Mode::Eval).unwrap();
            let t = TreeEncoding { ids: vec![tok], children: vec![Vec::new()] };
            let b = stack.forward(&Input::tree(&t), Mode::Eval).unwrap();
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
        }
    }
    outcome(worst < 1e-12, format!("600 single-token inputs, max relative difference {worst:.2e}"))
}

// --- 8: end-to-end determinism ----------------------------------------------

fn small_config(out: &Path, workers: usize) -> RunConfig {
    RunConfig {
        seed: 11,
        quotas: Quotas { train_per_generator: 120, test_per_generator: 30 },
        model: ModelConfig { epochs: 3, ..ModelConfig::default() },
        out: out.to_path_buf(),
        workers: Some(workers),
        ..RunConfig::default()
    }
}

fn full_run(cfg: &RunConfig) -> Result<(), String> {
    cmd_generate(cfg, false).map_err(|e| e.to_string())?;
    for kind in CellKind::ALL {
        cmd_train(cfg, kind, false).map_err(|e| e.to_string())?;
    }
    cmd_eval(cfg, false).map_err(|e| e.to_string())?;
    Ok(())
}

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["corpus", "models", "reports"] {
        let mut names: Vec<_> = std::fs::read_dir(root.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for p in names {
            out.push((format!("{sub}/{}", p.file_name().unwrap().to_string_lossy()), std::fs::read(&p).unwrap()));
        }
    }
    out
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = small_config(a.path(), 1);
    let cb = small_config(b.path(), 4);
    if let Err(e) = full_run(&ca).and_then(|_| full_run(&cb)) {
        return outcome(false, format!("pipeline error: {e}"));
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    let differing: Vec<&str> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let same_set = fa.len() == fb.len() && fa.iter().zip(&fb).all(|(x, y)| x.0 == y.0);
    let reports = read_reports(&Layout::new(a.path()).eval_reports()).unwrap_or_default();
    let mono = reports.iter().all(monotone);
    outcome(
        same_set && differing.is_empty() && mono,
        format!("{} artifacts compared across 1 and 4 workers, differing: {differing:?}", fa.len()),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n: usize, name: &'static str, o: Outcome| {
        println!("{} criterion {n} ({name}): {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    record(1, "generator soundness", generator_soundness());
    record(2, "gradient oracle", gradient_oracle());
    record(3, "preprocessing fidelity", preprocessing_fidelity());
    record(4, "labeling oracle", labeling_oracle());
    let dir = tempfile::tempdir().unwrap();
    match run_desk(dir.path()) {
        Ok(desk) => {
            println!("desk evaluation:\n{}", desk.table);
            record(5, "selection contract", selection_contract(&desk));
            record(6, "trend reproduction", trend(&desk));
        }
        Err(e) => {
            record(5, "selection contract", outcome(false, format!("desk pipeline failed: {e}")));
            record(6, "trend reproduction", outcome(false, format!("desk pipeline failed: {e}")));
        }
    }
    record(7, "degenerate agreement", degenerate_agreement());
    record(8, "end-to-end determinism", determinism());
    let failed = results.iter().filter(|r| !r.2.ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
