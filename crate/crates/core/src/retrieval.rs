//! Query-time scoring.
//!
//! [`search`] walks only the inverted lists of the query's tokens: one
//! matrix-vector product per query position, a segmented max that reduces
//! occurrence scores to one score per document, a sum over positions, and
//! for `full`/`cls_only` a CLS matrix product over every document.
//! [`brute_force_search`] scores document pairs directly and serves as the
//! oracle.
//!
//! Per-document sums are formed in query-position order on both paths, so
//! indexed and brute-force scores agree bit for bit.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::CoilIndex;
use crate::model::{rank_order, EncodedDocument, EncodedQuery, Mode, RankedEntry, RankedList, UNKNOWN_TOKEN};

/// Dot product accumulated in f64.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

fn check_pair_dims(q: &EncodedQuery, d: &EncodedDocument) -> Result<usize> {
    let n_t = q.token_vecs.first().or(d.token_vecs.first()).map_or(0, Vec::len);
    for v in q.token_vecs.iter().chain(&d.token_vecs) {
        if v.len() != n_t {
            return Err(Error::dim("token vector", n_t, v.len()));
        }
    }
    if q.token_ids.len() != q.token_vecs.len() {
        return Err(Error::dim("query token_vecs", q.token_ids.len(), q.token_vecs.len()));
    }
    if d.token_ids.len() != d.token_vecs.len() {
        return Err(Error::dim("document token_vecs", d.token_ids.len(), d.token_vecs.len()));
    }
    Ok(n_t)
}

/// Exact-match score: for each query position whose token occurs in the
/// document, the maximum dot product over that token's document
/// occurrences. Repeated query tokens each contribute their own maximum;
/// unknown tokens (id 0) never match.
pub fn score_tok_pair(q: &EncodedQuery, d: &EncodedDocument) -> Result<f64> {
    check_pair_dims(q, d)?;
    Ok(tok_score(q, d).unwrap_or(0.0))
}

/// `None` when no query token occurs in the document.
fn tok_score(q: &EncodedQuery, d: &EncodedDocument) -> Option<f64> {
    let mut total: Option<f64> = None;
    for (&t, qv) in q.token_ids.iter().zip(&q.token_vecs) {
        if t == UNKNOWN_TOKEN {
            continue;
        }
        let best = d
            .token_ids
            .iter()
            .zip(&d.token_vecs)
            .filter(|(&dt, _)| dt == t)
            .map(|(_, dv)| dot(qv, dv))
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
        if let Some(best) = best {
            total = Some(total.unwrap_or(0.0) + best);
        }
    }
    total
}

fn cls_pair<'a>(q: &'a EncodedQuery, d: &'a EncodedDocument) -> Result<(&'a [f32], &'a [f32])> {
    match (&q.cls_vec, &d.cls_vec) {
        (Some(a), Some(b)) if a.len() == b.len() && !a.is_empty() => Ok((a, b)),
        (Some(a), Some(b)) => Err(Error::dim("cls vector", a.len(), b.len())),
        _ => Err(Error::Config("CLS scoring requires n_c ≥ 1".into())),
    }
}

/// Token score plus CLS dot product.
pub fn score_full_pair(q: &EncodedQuery, d: &EncodedDocument) -> Result<f64> {
    let (qc, dc) = cls_pair(q, d)?;
    Ok(score_tok_pair(q, d)? + dot(qc, dc))
}

pub fn score_cls_pair(q: &EncodedQuery, d: &EncodedDocument) -> Result<f64> {
    let (qc, dc) = cls_pair(q, d)?;
    Ok(dot(qc, dc))
}

/// All-to-all late interaction: every query slot (CLS, then tokens) takes
/// its best dot product over every document slot (CLS, then tokens),
/// regardless of token identity. Requires token and CLS vectors of the same
/// width; CLS slots are skipped when absent. Query expansion tokens are not
/// modelled.
pub fn score_all_to_all_pair(q: &EncodedQuery, d: &EncodedDocument) -> Result<f64> {
    let n_t = check_pair_dims(q, d)?;
    let has_tokens = !q.token_vecs.is_empty() || !d.token_vecs.is_empty();
    for c in [&q.cls_vec, &d.cls_vec].into_iter().flatten() {
        if has_tokens && c.len() != n_t {
            return Err(Error::Config(format!(
                "all-to-all scoring requires n_t = n_c (n_t={n_t}, n_c={})",
                c.len()
            )));
        }
    }
    if let (Some(a), Some(b)) = (&q.cls_vec, &d.cls_vec) {
        if a.len() != b.len() {
            return Err(Error::dim("cls vector", a.len(), b.len()));
        }
    }
    let doc_slots: Vec<&[f32]> = d
        .cls_vec
        .iter()
        .map(Vec::as_slice)
        .chain(d.token_vecs.iter().map(Vec::as_slice))
        .collect();
    let mut total = 0.0;
    for qv in q.cls_vec.iter().chain(&q.token_vecs) {
        let best = doc_slots
            .iter()
            .map(|dv| dot(qv, dv))
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
        if let Some(best) = best {
            total += best;
        }
    }
    Ok(total)
}

/// Work counters for one query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchInstrumentation {
    /// Distinct query token ids that had an inverted list.
    pub lists_touched: usize,
    /// Column dot products evaluated across all touched lists.
    pub postings_scanned: usize,
    /// Documents that received at least one token score.
    pub candidates: usize,
}

/// Reduces per-column scores to `(ordinal, max)` pairs. `refs` must be
/// nondecreasing.
pub fn segmented_max(refs: &[u32], scores: &[f64]) -> Vec<(u32, f64)> {
    let mut out: Vec<(u32, f64)> = Vec::new();
    for (&r, &s) in refs.iter().zip(scores) {
        match out.last_mut() {
            Some((last, best)) if *last == r => {
                if s > *best {
                    *best = s;
                }
            }
            _ => out.push((r, s)),
        }
    }
    out
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be ≥ 1".into()));
    }
    Ok(())
}

fn top_k(index: &CoilIndex, mut scored: Vec<(u32, f32)>, k: usize) -> Vec<RankedEntry> {
    let cmp =
        |a: &(u32, f32), b: &(u32, f32)| -> Ordering { rank_order(a.1, index.doc_id(a.0), b.1, index.doc_id(b.0)) };
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    scored
        .into_iter()
        .map(|(ord, score)| RankedEntry {
            doc_id: index.doc_id(ord).to_string(),
            score,
        })
        .collect()
}

/// Indexed top-`k` search.
///
/// In `tok` mode only documents sharing at least one known token with the
/// query are candidates, so fewer than `k` results may come back. `full`
/// and `cls_only` score every document.
pub fn search(
    index: &CoilIndex,
    q: &EncodedQuery,
    k: usize,
    mode: Mode,
) -> Result<(RankedList, SearchInstrumentation)> {
    check_k(k)?;
    mode.check_dims(index.n_t(), index.n_c())?;
    let q_cls = if mode.uses_cls() {
        index.n_c()
    } else {
        q.cls_vec.as_ref().map_or(0, Vec::len)
    };
    q.check_dims(index.n_t(), q_cls)?;

    let n = index.num_docs();
    let mut instr = SearchInstrumentation::default();
    let mut acc = vec![0.0f64; n];
    let mut touched = vec![false; n];

    if mode.uses_tokens() {
        let mut by_token: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &t) in q.token_ids.iter().enumerate() {
            if t != UNKNOWN_TOKEN && index.list(t).is_some() {
                by_token.entry(t).or_default().push(i);
            }
        }
        instr.lists_touched = by_token.len();
        let work: Vec<(usize, u32)> = by_token
            .iter()
            .flat_map(|(&t, positions)| positions.iter().map(move |&i| (i, t)))
            .collect();
        instr.postings_scanned = work.iter().map(|&(_, t)| index.list(t).map_or(0, |l| l.len())).sum();

        let mut per_position: Vec<(usize, Vec<(u32, f64)>)> = work
            .par_iter()
            .map(|&(i, t)| {
                let list = index.list(t).expect("list present");
                let scores = list.matvec(&q.token_vecs[i]);
                (i, segmented_max(list.doc_refs(), &scores))
            })
            .collect();
        // Sum in query-position order.
        per_position.sort_unstable_by_key(|(i, _)| *i);
        for (_, maxima) in &per_position {
            for &(ord, s) in maxima {
                acc[ord as usize] += s;
                touched[ord as usize] = true;
            }
        }
        instr.candidates = touched.iter().filter(|&&t| t).count();
    }

    let scored: Vec<(u32, f32)> = match mode {
        Mode::Tok => (0..n as u32)
            .filter(|&o| touched[o as usize])
            .map(|o| (o, acc[o as usize] as f32))
            .collect(),
        Mode::Full | Mode::ClsOnly => {
            let qc = q.cls_vec.as_deref().unwrap_or(&[]);
            (0..n as u32)
                .into_par_iter()
                .map(|o| {
                    let cls = dot(qc, index.cls_vec(o).unwrap_or(&[]));
                    let s = if mode == Mode::Full { acc[o as usize] + cls } else { cls };
                    (o, s as f32)
                })
                .collect()
        }
    };

    let entries = top_k(index, scored, k);
    Ok((
        RankedList {
            query_id: q.query_id.clone(),
            entries,
        },
        instr,
    ))
}

/// Searches many queries; output order equals input order and does not
/// depend on the thread count.
pub fn search_batch(
    index: &CoilIndex,
    queries: &[EncodedQuery],
    k: usize,
    mode: Mode,
) -> Result<Vec<(RankedList, SearchInstrumentation)>> {
    queries.par_iter().map(|q| search(index, q, k, mode)).collect()
}

/// Scores every document pairwise with the mode's scorer. In `tok` mode
/// documents without token overlap are excluded.
pub fn brute_force_search(docs: &[EncodedDocument], q: &EncodedQuery, k: usize, mode: Mode) -> Result<RankedList> {
    check_k(k)?;
    let mut scored = Vec::with_capacity(docs.len());
    for d in docs {
        let score = match mode {
            Mode::Tok => {
                check_pair_dims(q, d)?;
                match tok_score(q, d) {
                    Some(s) => s,
                    None => continue,
                }
            }
            Mode::Full => score_full_pair(q, d)?,
            Mode::ClsOnly => score_cls_pair(q, d)?,
        };
        scored.push((d.doc_id.clone(), score as f32));
    }
    Ok(RankedList::from_scores(q.query_id.clone(), scored, k))
}
