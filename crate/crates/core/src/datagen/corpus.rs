//! Deterministic corpus assembly.
//!
//! Candidates are generated in parallel chunks, each from its own random
//! stream keyed by `(seed, generator, index)`, and reduced in index order.
//! The output therefore does not depend on the worker count.

use super::{
    gen_bwd, gen_fwd, gen_ibp, gen_sub, label_record, normalized_key, GenContext, Generator, IntegrandRecord,
    PoolPair,
};
use crate::calculus::{Status, SubAlgorithmId};
use crate::config::RunConfig;
use crate::expr::ExprStore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

/// Candidates generated per parallel chunk. Fixed so that the reduce order
/// never depends on the worker count.
const CHUNK: u64 = 128;

/// Candidates tried per requested record before giving up.
const MAX_CANDIDATES_PER_RECORD: u64 = 200;

/// Below this many records the disagreement check is reported, not enforced.
const DISAGREEMENT_MIN_RECORDS: usize = 100;

/// Required share of records on which some pair of members disagrees.
pub const MIN_DISAGREEMENT: f64 = 0.30;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("generator {generator} produced {got} of {want} records after {tried} candidates")]
    Shortfall { generator: Generator, got: usize, want: usize, tried: u64 },
    #[error("portfolio disagreement {0:.3} is below the required {MIN_DISAGREEMENT}")]
    Degenerate(f64),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed record at {path}:{line}: {source}")]
    Malformed { path: String, line: usize, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.display().to_string(), source }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorStats {
    pub generator: Option<Generator>,
    pub candidates: u64,
    /// Candidates for which the generator produced no pair.
    pub skipped: u64,
    /// Pairs on which every sub-algorithm failed.
    pub dropped: u64,
    /// Pairs whose normalized integrand was already in the corpus.
    pub duplicates: u64,
    pub train: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub train_per_generator: usize,
    pub test_per_generator: usize,
    pub label_order: Vec<SubAlgorithmId>,
    pub generators: Vec<GeneratorStats>,
    pub dedup_collisions: u64,
    pub dropped: u64,
    /// Positive labels per sub-algorithm over both splits.
    pub label_histogram: BTreeMap<SubAlgorithmId, usize>,
    /// Records per exact optimal set, keyed by `+`-joined names.
    pub label_sets: BTreeMap<String, usize>,
    pub multi_label_records: usize,
    /// Successes per sub-algorithm over both splits.
    pub success_histogram: BTreeMap<SubAlgorithmId, usize>,
    /// Largest share of records on which two members differ in outcome.
    pub disagreement: f64,
    /// Hash of the vocabulary file written next to the corpus.
    #[serde(default)]
    pub vocab_hash: Option<String>,
    pub config: RunConfig,
}

pub struct CorpusSummary {
    pub train: Vec<IntegrandRecord>,
    pub test: Vec<IntegrandRecord>,
    pub manifest: Manifest,
}

enum Candidate {
    Skipped,
    Dropped,
    Labeled(Box<IntegrandRecord>, PoolPair),
}

fn candidate(cfg: &RunConfig, generator: Generator, index: u64, pool: &[PoolPair]) -> Candidate {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let stream = ((generator.index() as u64) << 48) | index;
    rng.set_stream(stream);
    let cx = GenContext { sampler: &cfg.sampler, budget: cfg.budget, node_cap: cfg.node_cap, seed: stream };
    let mut s = ExprStore::new();
    let pair = match generator {
        Generator::Fwd => gen_fwd(&mut s, &cx, &mut rng),
        Generator::Bwd => gen_bwd(&mut s, &cx, &mut rng),
        Generator::Ibp => gen_ibp(&mut s, &cx, &mut rng),
        Generator::Sub => gen_sub(&mut s, &cx, pool, &mut rng),
    };
    let Some(pair) = pair else { return Candidate::Skipped };
    let id = format!("{}-{:06}", generator.name().to_lowercase(), index);
    match label_record(&mut s, &pair, id, cfg.budget) {
        Some(r) => {
            let pp = PoolPair {
                integrand_prefix: r.integrand_prefix.clone(),
                antiderivative_prefix: r.antiderivative_prefix.clone(),
            };
            Candidate::Labeled(Box::new(r), pp)
        }
        None => Candidate::Dropped,
    }
}

/// Generates `want` records for one generator, skipping normalized forms in
/// `seen` (which is extended).
fn run_generator(
    cfg: &RunConfig,
    generator: Generator,
    want: usize,
    pool: &[PoolPair],
    seen: &mut HashSet<String>,
    threads: &rayon::ThreadPool,
) -> Result<(Vec<(IntegrandRecord, PoolPair)>, GeneratorStats), CorpusError> {
    let mut stats = GeneratorStats { generator: Some(generator), ..Default::default() };
    let mut out = Vec::with_capacity(want);
    let limit = MAX_CANDIDATES_PER_RECORD * want as u64;
    let mut next = 0u64;
    while out.len() < want {
        if next >= limit {
            return Err(CorpusError::Shortfall { generator, got: out.len(), want, tried: next });
        }
        let chunk: Vec<Candidate> =
            threads.install(|| (next..next + CHUNK).into_par_iter().map(|i| candidate(cfg, generator, i, pool)).collect());
        next += CHUNK;
        for c in chunk {
            if out.len() == want {
                break;
            }
            stats.candidates += 1;
            match c {
                Candidate::Skipped => stats.skipped += 1,
                Candidate::Dropped => stats.dropped += 1,
                Candidate::Labeled(r, pp) => {
                    if seen.insert(normalized_key(&r.integrand_prefix)) {
                        out.push((*r, pp));
                    } else {
                        stats.duplicates += 1;
                    }
                }
            }
        }
    }
    Ok((out, stats))
}

/// Builds the labeled train/test corpus described by `cfg`. Deduplication
/// spans all generators and happens before the split, so no normalized
/// form is in both splits.
pub fn build_corpus(cfg: &RunConfig) -> Result<CorpusSummary, CorpusError> {
    let threads = cfg.pool();
    let q = &cfg.quotas;
    let want = q.train_per_generator + q.test_per_generator;
    let mut seen = HashSet::new();
    let mut pool: Vec<PoolPair> = Vec::new();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    let mut gstats = Vec::new();
    for generator in Generator::ALL {
        let (recs, mut st) = run_generator(cfg, generator, want, &pool, &mut seen, &threads)?;
        if matches!(generator, Generator::Fwd | Generator::Bwd) {
            pool.extend(recs.iter().map(|(_, pp)| pp.clone()));
        }
        for (i, (r, _)) in recs.into_iter().enumerate() {
            if i < q.train_per_generator {
                train.push(r);
            } else {
                test.push(r);
            }
        }
        st.train = q.train_per_generator;
        st.test = q.test_per_generator;
        gstats.push(st);
    }
    let all: Vec<&IntegrandRecord> = train.iter().chain(&test).collect();
    let disagreement = disagreement(&all);
    if all.len() >= DISAGREEMENT_MIN_RECORDS && disagreement < MIN_DISAGREEMENT {
        return Err(CorpusError::Degenerate(disagreement));
    }
    let mut label_histogram: BTreeMap<SubAlgorithmId, usize> = SubAlgorithmId::ALL.iter().map(|&a| (a, 0)).collect();
    let mut success_histogram = label_histogram.clone();
    let mut label_sets = BTreeMap::new();
    let mut multi = 0;
    for r in &all {
        let mut names = Vec::new();
        for alg in SubAlgorithmId::ALL {
            if r.is_optimal(alg) {
                *label_histogram.get_mut(&alg).unwrap() += 1;
                names.push(alg.name());
            }
            if r.outcomes[alg.index()].status == Status::Success {
                *success_histogram.get_mut(&alg).unwrap() += 1;
            }
        }
        if names.len() > 1 {
            multi += 1;
        }
        *label_sets.entry(names.join("+")).or_insert(0) += 1;
    }
    let mut echo = cfg.clone();
    echo.out = Default::default();
    echo.workers = None;
    let manifest = Manifest {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        train_per_generator: q.train_per_generator,
        test_per_generator: q.test_per_generator,
        label_order: SubAlgorithmId::ALL.to_vec(),
        dedup_collisions: gstats.iter().map(|g| g.duplicates).sum(),
        dropped: gstats.iter().map(|g| g.dropped).sum(),
        generators: gstats,
        label_histogram,
        label_sets,
        multi_label_records: multi,
        success_histogram,
        disagreement,
        vocab_hash: None,
        config: echo,
    };
    Ok(CorpusSummary { train, test, manifest })
}

/// Largest share of records on which two members differ in success or size.
pub fn disagreement(records: &[&IntegrandRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let key = |r: &IntegrandRecord, a: SubAlgorithmId| {
        let o = &r.outcomes[a.index()];
        (o.status == Status::Success, o.size)
    };
    let mut best = 0usize;
    for (i, &a) in SubAlgorithmId::ALL.iter().enumerate() {
        for &b in &SubAlgorithmId::ALL[i + 1..] {
            let n = records.iter().filter(|r| key(r, a) != key(r, b)).count();
            best = best.max(n);
        }
    }
    best as f64 / records.len() as f64
}

pub fn write_records(path: &Path, records: &[IntegrandRecord]) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_records(path: &Path) -> Result<Vec<IntegrandRecord>, CorpusError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line)
            .map_err(|source| CorpusError::Malformed { path: path.display().to_string(), line: i + 1, source })?;
        out.push(r);
    }
    Ok(out)
}

/// Writes `train.jsonl`, `test.jsonl` and `manifest.json` into `dir`.
pub fn write_corpus(dir: &Path, c: &CorpusSummary) -> Result<(), CorpusError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_records(&dir.join("train.jsonl"), &c.train)?;
    write_records(&dir.join("test.jsonl"), &c.test)?;
    write_manifest(dir, &c.manifest)
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), CorpusError> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(m).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CorpusError> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|source| CorpusError::Malformed { path: path.display().to_string(), line: 0, source })
}
