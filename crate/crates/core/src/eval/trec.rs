//! TREC text formats.
//!
//! ```text
//! qrels: qid 0 docid rel
//! run:   qid Q0 docid rank score tag
//! ```
//!
//! Writers separate fields with a single space; readers accept any run of
//! ASCII whitespace. Scores are printed with 6 significant digits.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{Qrels, Run};
use crate::error::{Error, Result};
use crate::model::{RankedEntry, RankedList};

/// `%g`-style formatting with 6 significant digits.
pub fn format_score(x: f32) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fields<const N: usize>(line: &str, line_no: usize, what: &str) -> Result<[String; N]> {
    let parts: Vec<&str> = line.split_ascii_whitespace().collect();
    if parts.len() != N {
        return Err(Error::parse(
            line_no,
            format!("{what} line needs {N} fields, found {}", parts.len()),
        ));
    }
    Ok(std::array::from_fn(|i| parts[i].to_string()))
}

pub fn read_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let [qid, _, doc_id, rel] = fields::<4>(&line, line_no, "qrels")?;
        let rel: u32 = rel
            .parse()
            .map_err(|_| Error::parse(line_no, format!("relevance `{rel}` is not a non-negative integer")))?;
        let judged = qrels.judgments.entry(qid.clone()).or_default();
        if judged.insert(doc_id.clone(), rel).is_some() {
            return Err(Error::parse(
                line_no,
                format!("duplicate judgment for ({qid}, {doc_id})"),
            ));
        }
    }
    Ok(qrels)
}

pub fn write_qrels<W: Write>(mut w: W, qrels: &Qrels) -> Result<()> {
    for (qid, docs) in &qrels.judgments {
        for (doc_id, rel) in docs {
            writeln!(w, "{qid} 0 {doc_id} {rel}")?;
        }
    }
    Ok(())
}

/// Lists are read back in rank order.
pub fn read_run<R: BufRead>(reader: R) -> Result<Run> {
    let mut rows: BTreeMap<String, Vec<(usize, usize, RankedEntry)>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let [qid, _, doc_id, rank, score, _tag] = fields::<6>(&line, line_no, "run")?;
        let rank: usize = rank
            .parse()
            .ok()
            .filter(|&r| r >= 1)
            .ok_or_else(|| Error::parse(line_no, format!("rank `{rank}` is not a positive integer")))?;
        let score: f32 = score
            .parse()
            .ok()
            .filter(|s: &f32| s.is_finite())
            .ok_or_else(|| Error::parse(line_no, format!("score `{score}` is not a finite number")))?;
        rows.entry(qid)
            .or_default()
            .push((rank, line_no, RankedEntry { doc_id, score }));
    }
    let mut run = Run::default();
    for (qid, mut entries) in rows {
        entries.sort_by_key(|&(rank, line_no, _)| (rank, line_no));
        let first_line = entries.first().map_or(0, |e| e.1);
        let list = RankedList::from_ranked(qid, entries.into_iter().map(|e| e.2).collect())
            .map_err(|e| Error::parse(first_line, e))?;
        run.insert(list);
    }
    Ok(run)
}

/// Writes lists in query id order.
pub fn write_run<W: Write>(mut w: W, run: &Run, tag: &str) -> Result<()> {
    for list in run.lists.values() {
        write_ranked_list(&mut w, list, tag)?;
    }
    Ok(())
}

pub fn write_ranked_list<W: Write>(mut w: W, list: &RankedList, tag: &str) -> Result<()> {
    for (i, e) in list.entries.iter().enumerate() {
        writeln!(
            w,
            "{} Q0 {} {} {} {tag}",
            list.query_id,
            e.doc_id,
            i + 1,
            format_score(e.score)
        )?;
    }
    Ok(())
}
