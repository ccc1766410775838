//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::HashSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use coil::bm25::{Bm25Index, Bm25Params};
use coil::encoding::{Encoder, Tokenizer};
use coil::eval::{mrr_at_k, ndcg_at_k, read_qrels, read_run, recall_at_k, write_run, Run};
use coil::index::{CLS_FILE, POSTINGS_FILE};
use coil::loss::nll_loss;
use coil::{
    brute_force_search, load_index, save_index, search, CoilIndex, Document, EncodedDocument, EncodedQuery, Error,
    Mode, RankedList,
};
use rand::Rng;

use common::*;

const ORACLE_CORPORA: u64 = 50;
const ORACLE_MAX_DOCS: usize = 2000;
const ORACLE_MAX_VOCAB: usize = 200;
const ORACLE_QUERIES: usize = 20;
const ORACLE_REL_TOL: f64 = 1e-4;
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(300);

const BM25_HAND_EXPECTED: f64 = 0.9023;
const BM25_HAND_TOL: f64 = 1e-6;
const BM25_RANDOM_CORPORA: u64 = 20;

const LOSS_TOL: f64 = 1e-9;
const METRIC_TOL: f64 = 1e-9;
const NDCG_RANK2_EXPECTED: f64 = 0.6309;
const NDCG_RANK2_TOL: f64 = 1e-4;

const SWEEP_DOCS: usize = 10_000;
const SWEEP_N_LM: usize = 768;
const SWEEP_CONFIGS: [(usize, usize); 5] = [(768, 32), (128, 32), (128, 8), (0, 32), (0, 8)];
const SWEEP_QUERIES: usize = 200;
const SWEEP_REPEATS: usize = 5;

type Criterion = fn() -> Result<String, String>;

struct Instance {
    encoded: Vec<EncodedDocument>,
    queries: Vec<EncodedQuery>,
    index: CoilIndex,
}

/// Corpus `i` of the oracle suite. Every fifth corpus is exactly
/// `ORACLE_MAX_DOCS` long.
fn oracle_instance(i: u64) -> Instance {
    let mut r = rng(0xC011 + i);
    let n_docs = if i % 5 == 0 {
        ORACLE_MAX_DOCS
    } else {
        r.random_range(1..=ORACLE_MAX_DOCS)
    };
    let vocab = r.random_range(1..=ORACLE_MAX_VOCAB);
    let max_len = r.random_range(1..=64);
    let docs = random_corpus(&mut r, n_docs, vocab, max_len);
    let queries = random_queries(&mut r, ORACLE_QUERIES, vocab);
    let n_lm = 32;
    let n_t = r.random_range(1..=16);
    let n_c = r.random_range(1..=n_lm);
    let enc = encoder(&docs, config(n_lm, n_t, n_c), i);
    let encoded = enc.encode_documents(&docs).unwrap();
    let queries = enc.encode_queries(&queries).unwrap();
    let index = CoilIndex::build(encoded.clone(), n_t, n_c)
        .unwrap()
        .with_encoder(enc.spec())
        .unwrap();
    Instance {
        encoded,
        queries,
        index,
    }
}

fn overlap_ids<'a>(docs: &'a [EncodedDocument], q: &EncodedQuery) -> HashSet<&'a str> {
    let tokens: HashSet<u32> = q.token_ids.iter().copied().filter(|&t| t != 0).collect();
    docs.iter()
        .filter(|d| d.token_ids.iter().any(|t| tokens.contains(t)))
        .map(|d| d.doc_id.as_str())
        .collect()
}

fn run_file(inst: &Instance, k: usize, mode: Mode) -> Vec<u8> {
    let run: Run = inst
        .queries
        .iter()
        .map(|q| search(&inst.index, q, k, mode).unwrap().0)
        .collect();
    let mut out = Vec::new();
    write_run(&mut out, &run, mode.as_str()).unwrap();
    out
}

fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let mut comparisons = 0;
    let mut worst = 0.0f64;
    for i in 0..ORACLE_CORPORA {
        let inst = oracle_instance(i);
        let n = inst.encoded.len();
        for q in &inst.queries {
            for mode in Mode::ALL {
                for k in [10, n] {
                    let (got, _) = search(&inst.index, q, k, mode).unwrap();
                    let want = brute_force_search(&inst.encoded, q, k, mode).unwrap();
                    let got_ids: Vec<&str> = got.doc_ids().collect();
                    let want_ids: Vec<&str> = want.doc_ids().collect();
                    if got_ids != want_ids {
                        return Err(format!("corpus {i} query {} mode {mode}: ordering differs", q.query_id));
                    }
                    for (a, b) in got.entries.iter().zip(&want.entries) {
                        let (a, b) = (f64::from(a.score), f64::from(b.score));
                        let rel = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
                        worst = worst.max(if a == b { 0.0 } else { rel });
                        if a != b && rel > ORACLE_REL_TOL {
                            return Err(format!("corpus {i} query {}: {a} vs {b}", q.query_id));
                        }
                    }
                    comparisons += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > ORACLE_TIME_LIMIT {
        return Err(format!("took {elapsed:.1?}, limit {ORACLE_TIME_LIMIT:?}"));
    }
    Ok(format!(
        "{ORACLE_CORPORA} corpora, {comparisons} ranked lists, max rel diff {worst:e}, {elapsed:.1?}"
    ))
}

fn criterion_2() -> Result<String, String> {
    let mut checked = 0;
    for i in 0..ORACLE_CORPORA {
        let inst = oracle_instance(i);
        let n = inst.encoded.len();
        for q in &inst.queries {
            let distinct: HashSet<u32> = q.token_ids.iter().copied().filter(|&t| t != 0).collect();
            for mode in Mode::ALL {
                let (list, instr) = search(&inst.index, q, n, mode).unwrap();
                if instr.lists_touched > distinct.len() {
                    return Err(format!(
                        "corpus {i} query {}: {} lists for {} tokens",
                        q.query_id,
                        instr.lists_touched,
                        distinct.len()
                    ));
                }
                if mode == Mode::Tok {
                    let overlap = overlap_ids(&inst.encoded, q);
                    let returned: HashSet<&str> = list.doc_ids().collect();
                    if instr.candidates != overlap.len() || returned != overlap {
                        return Err(format!(
                            "corpus {i} query {}: candidates differ from overlap set",
                            q.query_id
                        ));
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} searches"))
}

fn criterion_3() -> Result<String, String> {
    let inst = oracle_instance(0);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    save_index(&inst.index, dir.path()).map_err(|e| e.to_string())?;
    let loaded = load_index(dir.path()).map_err(|e| e.to_string())?;
    let bits = |xs: &[f32]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    if bits(loaded.cls_matrix().unwrap()) != bits(inst.index.cls_matrix().unwrap()) {
        return Err("CLS matrix differs".into());
    }
    let lists_equal = loaded.lists().count() == inst.index.lists().count()
        && loaded.lists().zip(inst.index.lists()).all(|(a, b)| {
            a.token_id() == b.token_id() && a.doc_refs() == b.doc_refs() && bits(a.vectors()) == bits(b.vectors())
        });
    if !lists_equal || loaded.doc_table() != inst.index.doc_table() {
        return Err("inverted lists differ".into());
    }
    let reloaded = Instance {
        encoded: Vec::new(),
        queries: inst.queries.clone(),
        index: loaded,
    };
    for mode in Mode::ALL {
        if run_file(&reloaded, 100, mode) != run_file(&inst, 100, mode) {
            return Err(format!("run file differs in mode {mode}"));
        }
    }
    for name in [POSTINGS_FILE, CLS_FILE] {
        let path = dir.path().join(name);
        let original = fs::read(&path).map_err(|e| e.to_string())?;
        let mut bad = original.clone();
        let mid = bad.len() / 2;
        bad[mid] ^= 0x40;
        fs::write(&path, &bad).map_err(|e| e.to_string())?;
        match load_index(dir.path()) {
            Err(Error::Checksum(f)) if f == name => {}
            other => return Err(format!("corrupted {name}: {:?}", other.map(|_| ()))),
        }
        fs::write(&path, &original).map_err(|e| e.to_string())?;
    }
    Ok(format!(
        "{} docs, {} lists, corruption detected in both files",
        inst.encoded.len(),
        inst.index.lists().count()
    ))
}

fn criterion_4() -> Result<String, String> {
    let docs = vec![
        Document {
            id: "d1".into(),
            text: "a b a".into(),
        },
        Document {
            id: "d2".into(),
            text: "b c".into(),
        },
    ];
    let params = Bm25Params {
        k1: 1.2,
        b: 0.75,
        k2: 0.0,
    };
    let index = Bm25Index::build(&docs, Tokenizer::default(), 512).map_err(|e| e.to_string())?;
    let query = index.tokenize_query("a");
    let hits = index.search("q", &query, 10, &params).map_err(|e| e.to_string())?;
    let hand = index.score_pair(&query, 0, &params).map_err(|e| e.to_string())?;
    if hits.doc_ids().collect::<Vec<_>>() != ["d1"] {
        return Err(format!("hand example ranking {:?}", hits.doc_ids().collect::<Vec<_>>()));
    }
    // idf = ln(1.5/1.5 + 1), tf part = 2·2.2 / (2 + 1.2·(0.25 + 0.75·3/2.5))
    let derived = std::f64::consts::LN_2 * 4.4 / 3.38;
    if (hand - derived).abs() > BM25_HAND_TOL || (hand - BM25_HAND_EXPECTED).abs() > 0.5e-4 {
        return Err(format!("hand example scored {hand}"));
    }

    for seed in 0..BM25_RANDOM_CORPORA {
        let mut r = rng(0xB325 + seed);
        let n_docs = r.random_range(1..=500);
        let vocab = r.random_range(1..=100);
        let docs = random_corpus(&mut r, n_docs, vocab, 48);
        let index = Bm25Index::build(&docs, Tokenizer::default(), 512).map_err(|e| e.to_string())?;
        for q in random_queries(&mut r, 10, vocab) {
            let seq = index.tokenize_query(&q.text);
            let got = index.search(&q.id, &seq, n_docs, &params).map_err(|e| e.to_string())?;
            let pairs = (0..n_docs as u32)
                .filter(|&o| seq.token_ids.iter().any(|&t| index.tf(t, o) > 0))
                .map(|o| {
                    (
                        index.doc_id(o).to_string(),
                        index.score_pair(&seq, o, &params).unwrap() as f32,
                    )
                });
            if got != RankedList::from_scores(q.id.clone(), pairs, n_docs) {
                return Err(format!("corpus {seed} query {} differs from exhaustive ranking", q.id));
            }
        }
    }
    Ok(format!("hand example {hand:.7}, {BM25_RANDOM_CORPORA} random corpora"))
}

fn criterion_5() -> Result<String, String> {
    for l in [1usize, 3, 7] {
        for s in [0.0, 2.5, -40.0] {
            let loss = nll_loss(s, &vec![s; l]).map_err(|e| e.to_string())?;
            let want = ((1 + l) as f64).ln();
            if (loss - want).abs() > LOSS_TOL {
                return Err(format!("l={l} s={s}: {loss} vs {want}"));
            }
        }
    }
    let mut r = rng(55);
    for _ in 0..1000 {
        let l = r.random_range(1..=16);
        let pos = r.random_range(-20.0..20.0);
        let negs: Vec<f64> = (0..l).map(|_| r.random_range(-20.0..20.0)).collect();
        let c = r.random_range(-100.0..100.0);
        let shifted: Vec<f64> = negs.iter().map(|x| x + c).collect();
        let a = nll_loss(pos, &negs).map_err(|e| e.to_string())?;
        let b = nll_loss(pos + c, &shifted).map_err(|e| e.to_string())?;
        if (a - b).abs() > LOSS_TOL {
            return Err(format!("shift {c}: {a} vs {b}"));
        }
    }
    Ok("fixed points for l in {1,3,7}, 1000 random shifts".into())
}

const TOY_QRELS: &str = "\
q1 0 d1 1
q1 0 d3 2
q2 0 d2 1
q3 0 d5 1
q3 0 d6 1
q4 0 d9 0
q5 0 d7 3
";

const TOY_RUN: &str = "\
q1 Q0 d3 1 3 toy
q1 Q0 d2 2 2 toy
q1 Q0 d1 3 1 toy
q2 Q0 d1 1 3 toy
q2 Q0 d4 2 2 toy
q2 Q0 d2 3 1 toy
q3 Q0 d5 1 2 toy
q3 Q0 d8 2 1 toy
q4 Q0 d9 1 1 toy
";

fn criterion_6() -> Result<String, String> {
    let qrels = read_qrels(TOY_QRELS.as_bytes()).map_err(|e| e.to_string())?;
    let run = read_run(TOY_RUN.as_bytes()).map_err(|e| e.to_string())?;
    let inv_log3 = 1.0 / 3f64.log2();
    let expected = [
        (
            "MRR@10",
            mrr_at_k(&run, &qrels, 10, 1),
            (1.0 + 1.0 / 3.0 + 1.0 + 0.0) / 4.0,
        ),
        ("Recall@10", recall_at_k(&run, &qrels, 10, 1), 0.625),
        (
            "NDCG@10",
            ndcg_at_k(&run, &qrels, 10),
            (3.5 / (3.0 + inv_log3) + 0.5 + 1.0 / (1.0 + inv_log3) + 0.0) / 4.0,
        ),
        ("MRR@2", mrr_at_k(&run, &qrels, 2, 1), 0.5),
    ];
    let mut detail = Vec::new();
    for (name, got, want) in expected {
        let got = got.map_err(|e| e.to_string())?;
        if (got - want).abs() > METRIC_TOL {
            return Err(format!("{name}: {got} vs {want}"));
        }
        detail.push(format!("{name}={got:.6}"));
    }

    let qrels = read_qrels("q 0 rel 1\n".as_bytes()).map_err(|e| e.to_string())?;
    let run = read_run("q Q0 other 1 2 t\nq Q0 rel 2 1 t\n".as_bytes()).map_err(|e| e.to_string())?;
    let ndcg = ndcg_at_k(&run, &qrels, 10).map_err(|e| e.to_string())?;
    if (ndcg - NDCG_RANK2_EXPECTED).abs() > NDCG_RANK2_TOL {
        return Err(format!("rank-2 NDCG {ndcg}"));
    }
    detail.push(format!("rank-2 NDCG={ndcg:.4}"));
    Ok(detail.join(", "))
}

fn criterion_7() -> Result<String, String> {
    let mut r = rng(77);
    let docs = random_corpus(&mut r, SWEEP_DOCS, 3000, 16);
    let queries = random_queries(&mut r, SWEEP_QUERIES, 3000);
    let mut latencies = Vec::new();
    let mut lines = Vec::new();
    for (n_c, n_t) in SWEEP_CONFIGS {
        let mode = Mode::for_dims(n_t, n_c).unwrap();
        let enc: Encoder = encoder(&docs, config(SWEEP_N_LM, n_t, n_c), 7);
        let index = CoilIndex::build(enc.encode_documents(&docs).map_err(|e| e.to_string())?, n_t, n_c)
            .map_err(|e| e.to_string())?;
        let qs = enc.encode_queries(&queries).map_err(|e| e.to_string())?;
        let mut best = Duration::MAX;
        for _ in 0..SWEEP_REPEATS {
            let start = Instant::now();
            for q in &qs {
                std::hint::black_box(search(&index, q, 1000, mode).map_err(|e| e.to_string())?);
            }
            best = best.min(start.elapsed());
        }
        let per_query = best / SWEEP_QUERIES as u32;
        latencies.push((n_c, n_t, per_query));
        lines.push(format!(
            "(n_c={n_c}, n_t={n_t}, {mode}) {:.1}us/query",
            per_query.as_secs_f64() * 1e6
        ));
    }
    for &(_, n_t, tok) in latencies.iter().filter(|l| l.0 == 0) {
        for &(full_c, _, full) in latencies.iter().filter(|l| l.0 > 0 && l.1 == n_t) {
            if tok > full {
                return Err(format!(
                    "tok n_t={n_t} ({tok:?}) slower than full n_c={full_c} ({full:?}); {lines:?}"
                ));
            }
        }
    }
    Ok(lines.join("; "))
}

fn criterion_8() -> Result<String, String> {
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let (one, eight) = (pool(1), pool(8));
    let mut bytes = 0;
    for i in 0..ORACLE_CORPORA {
        let inst = oracle_instance(i);
        for mode in Mode::ALL {
            let a = one.install(|| run_file(&inst, 100, mode));
            let b = eight.install(|| run_file(&inst, 100, mode));
            if a != b {
                return Err(format!("corpus {i} mode {mode}: run files differ"));
            }
            bytes += a.len();
        }
    }
    Ok(format!("{ORACLE_CORPORA} corpora x 3 modes, {bytes} bytes compared"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("oracle equivalence", criterion_1),
        ("locality", criterion_2),
        ("index persistence", criterion_3),
        ("bm25 correctness", criterion_4),
        ("loss fixed points", criterion_5),
        ("metric correctness", criterion_6),
        ("dimension sweep", criterion_7),
        ("determinism", criterion_8),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("[PASS] criterion {} {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {} {name}: {detail}", n + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
