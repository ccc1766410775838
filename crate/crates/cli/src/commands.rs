use std::collections::HashSet;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use coil::bm25::{sample_bm25_negatives, Bm25Index};
use coil::corpus::{read_documents, read_queries};
use coil::encoding::records::{read_encoded, write_encoded, EncodedHeader};
use coil::encoding::{Encoder, EncoderSpec, StubContextualizer, Tokenizer};
use coil::eval::{evaluate, read_qrels, read_run, write_run, Run};
use coil::hash::Fnv1a64;
use coil::loss::TrainingExample;
use coil::{load_index, save_index, search_batch, CoilConfig, CoilIndex, EncodedQuery, Mode};

use crate::{Bm25Args, BuildArgs, EncodeArgs, EvalArgs, SampleNegsArgs, SearchArgs, StatsArgs};

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn read_with<T>(path: &Path, f: impl FnOnce(BufReader<File>) -> coil::Result<T>) -> Result<T> {
    f(open(path)?).with_context(|| format!("reading {}", path.display()))
}

/// Writes through `f` into `path`, creating or truncating it.
fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(coil::Error::InvalidArgument("--k must be at least 1".into()).into());
    }
    Ok(())
}

pub fn encoder_sidecar(encoded: &Path) -> PathBuf {
    let mut name = OsString::from(encoded.as_os_str());
    name.push(".encoder.json");
    PathBuf::from(name)
}

pub fn encode(args: &EncodeArgs, out: &mut impl Write) -> Result<()> {
    let Some(mode) = Mode::for_dims(args.n_t, args.n_c) else {
        return Err(coil::Error::Config("at least one of n_t and n_c must be ≥ 1".into()).into());
    };
    let config = CoilConfig {
        n_lm: args.n_lm,
        n_t: args.n_t,
        n_c: args.n_c,
        max_doc_tokens: args.max_doc_tokens,
        cls_layer_norm: args.layer_norm,
        mode,
    }
    .validate()?;
    let ctx = StubContextualizer {
        seed: args.stub_seed,
        window: args.window,
        mix_weight: args.mix_weight,
    };
    ctx.validate()?;

    let docs = read_with(&args.corpus, read_documents)?;
    let encoder = Encoder::for_corpus(config, Tokenizer::default(), ctx, &docs)?;
    let encoded = encoder.encode_documents(&docs)?;
    let header = EncodedHeader {
        n_t: args.n_t,
        n_c: args.n_c,
    };
    write_with(&args.out, |w| {
        write_encoded(w, header, &encoded)?;
        Ok(())
    })?;
    write_with(&encoder_sidecar(&args.out), |w| {
        serde_json::to_writer(&mut *w, &encoder.spec())?;
        writeln!(w)?;
        Ok(())
    })?;
    writeln!(out, "{} records", encoded.len())?;
    Ok(())
}

pub fn build(args: &BuildArgs, out: &mut impl Write) -> Result<()> {
    let (header, docs) = read_with(&args.encoded, read_encoded)?;
    let encoder_path = match &args.encoder {
        Some(p) => Some(p.clone()),
        None => Some(encoder_sidecar(&args.encoded)).filter(|p| p.exists()),
    };
    let spec: Option<EncoderSpec> = match &encoder_path {
        Some(p) => Some(serde_json::from_reader(open(p)?).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let mut index = CoilIndex::build(docs, header.n_t, header.n_c)?;
    if let Some(spec) = spec {
        index = index.with_encoder(spec)?;
    }
    fs::create_dir_all(&args.index).with_context(|| format!("creating {}", args.index.display()))?;
    save_index(&index, &args.index).with_context(|| format!("writing {}", args.index.display()))?;
    let stats = index.stats();
    writeln!(
        out,
        "{} documents, {} lists, {} postings",
        stats.num_docs, stats.num_lists, stats.total_postings
    )?;
    Ok(())
}

pub fn search(args: &SearchArgs, out: &mut impl Write) -> Result<()> {
    check_k(args.k)?;
    let index = load_index(&args.index).with_context(|| format!("loading {}", args.index.display()))?;
    let mode = match args.mode {
        Some(m) => m,
        None => Mode::for_dims(index.n_t(), index.n_c()).context("index has neither token nor CLS vectors")?,
    };
    mode.check_dims(index.n_t(), index.n_c())?;
    let queries: Vec<EncodedQuery> = match (&args.queries, &args.encoded_queries) {
        (Some(path), _) => {
            let Some(spec) = index.encoder() else {
                bail!(coil::Error::InvalidArgument(
                    "index stores no encoder; pass --encoded-queries instead".into()
                ));
            };
            let encoder = Encoder::from_spec(spec.clone())?;
            encoder.encode_queries(&read_with(path, read_queries)?)?
        }
        (None, Some(path)) => {
            let (_, docs) = read_with(path, read_encoded)?;
            docs.into_iter().map(EncodedQuery::from).collect()
        }
        (None, None) => unreachable!("clap requires one query source"),
    };
    let results = search_batch(&index, &queries, args.k, mode)?;
    if args.instrument {
        for (list, instr) in &results {
            let mut line = serde_json::to_value(instr)?;
            line["query_id"] = list.query_id.clone().into();
            writeln!(out, "{line}")?;
        }
    }
    let run: Run = results.into_iter().map(|(list, _)| list).collect();
    let tag = args.tag.as_deref().unwrap_or(mode.as_str());
    write_with(&args.out, |w| Ok(write_run(w, &run, tag)?))
}

pub fn bm25(args: &Bm25Args) -> Result<()> {
    check_k(args.k)?;
    let params = args.params.params().validate()?;
    let docs = read_with(&args.corpus, read_documents)?;
    let queries = read_with(&args.queries, read_queries)?;
    let index = Bm25Index::build(&docs, Tokenizer::default(), args.max_doc_tokens)?;
    let run = queries
        .iter()
        .map(|q| index.search(&q.id, &index.tokenize_query(&q.text), args.k, &params))
        .collect::<coil::Result<Run>>()?;
    write_with(&args.out, |w| Ok(write_run(w, &run, &args.tag)?))
}

pub fn eval(args: &EvalArgs, out: &mut impl Write) -> Result<()> {
    let run = read_with(&args.run, read_run)?;
    let qrels = read_with(&args.qrels, read_qrels)?;
    write!(out, "{}", evaluate(&run, &qrels, &args.metrics)?)?;
    Ok(())
}

/// Per-example sampling seed, so adding queries does not disturb the
/// negatives drawn for existing ones.
fn example_seed(seed: u64, qid: &str, pos: &str) -> u64 {
    let mut h = Fnv1a64::new();
    h.write(&seed.to_le_bytes());
    h.write(qid.as_bytes());
    h.write(&[0]);
    h.write(pos.as_bytes());
    h.finish()
}

pub fn sample_negs(args: &SampleNegsArgs, out: &mut impl Write) -> Result<()> {
    let params = args.params.params().validate()?;
    if args.depth < args.count {
        return Err(coil::Error::InvalidArgument(format!(
            "--depth ({}) must be ≥ --count ({})",
            args.depth, args.count
        ))
        .into());
    }
    let docs = read_with(&args.corpus, read_documents)?;
    let queries = read_with(&args.queries, read_queries)?;
    let qrels = read_with(&args.qrels, read_qrels)?;
    let index = Bm25Index::build(&docs, Tokenizer::default(), args.max_doc_tokens)?;
    let mut written = 0;
    write_with(&args.out, |w| {
        for q in &queries {
            let positives: HashSet<String> = qrels.relevant(&q.id, 1).map(String::from).collect();
            let mut ordered: Vec<&String> = positives.iter().collect();
            ordered.sort();
            let seq = index.tokenize_query(&q.text);
            for pos in ordered {
                let seed = example_seed(args.seed, &q.id, pos);
                let negs = sample_bm25_negatives(&index, &seq, &positives, args.depth, args.count, seed, &params)?;
                let example = TrainingExample {
                    qid: q.id.clone(),
                    pos: pos.clone(),
                    negs,
                };
                serde_json::to_writer(&mut *w, &example)?;
                writeln!(w)?;
                written += 1;
            }
        }
        Ok(())
    })?;
    writeln!(out, "{written} examples")?;
    Ok(())
}

pub fn stats(args: &StatsArgs, out: &mut impl Write) -> Result<()> {
    let index = load_index(&args.index).with_context(|| format!("loading {}", args.index.display()))?;
    serde_json::to_writer_pretty(&mut *out, &index.stats())?;
    writeln!(out)?;
    Ok(())
}
