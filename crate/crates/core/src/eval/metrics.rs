use std::fmt;
use std::str::FromStr;

use super::{Qrels, Run};
use crate::error::{Error, Result};

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("metric cutoff k must be ≥ 1".into()));
    }
    Ok(())
}

/// Queries that have at least one document judged `min_rel` or higher.
fn judged_queries(qrels: &Qrels, min_rel: u32) -> impl Iterator<Item = &str> {
    qrels
        .judgments
        .iter()
        .filter(move |(_, docs)| docs.values().any(|&r| r >= min_rel))
        .map(|(q, _)| q.as_str())
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Mean reciprocal rank of the first document with relevance ≥ `min_rel`
/// within the top `k`. Averaged over every query with a relevant judgment;
/// queries missing from the run score 0.
pub fn mrr_at_k(run: &Run, qrels: &Qrels, k: usize, min_rel: u32) -> Result<f64> {
    check_k(k)?;
    if qrels.is_empty() {
        return Err(Error::InvalidArgument("qrels are empty".into()));
    }
    let per_query: Vec<f64> = judged_queries(qrels, min_rel)
        .map(|qid| {
            run.get(qid)
                .and_then(|list| list.doc_ids().take(k).position(|d| qrels.get(qid, d) >= min_rel))
                .map_or(0.0, |pos| 1.0 / (pos + 1) as f64)
        })
        .collect();
    Ok(mean(&per_query))
}

/// Fraction of relevant documents retrieved in the top `k`, averaged over
/// queries with at least one relevant document.
pub fn recall_at_k(run: &Run, qrels: &Qrels, k: usize, min_rel: u32) -> Result<f64> {
    check_k(k)?;
    if qrels.is_empty() {
        return Err(Error::InvalidArgument("qrels are empty".into()));
    }
    let per_query: Vec<f64> = judged_queries(qrels, min_rel)
        .map(|qid| {
            let total = qrels.relevant(qid, min_rel).count();
            let found = run.get(qid).map_or(0, |list| {
                list.doc_ids().take(k).filter(|d| qrels.get(qid, d) >= min_rel).count()
            });
            found as f64 / total as f64
        })
        .collect();
    Ok(mean(&per_query))
}

fn gain(rel: u32) -> f64 {
    2f64.powi(rel as i32) - 1.0
}

fn discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

/// NDCG with exponential gain `2^rel − 1` and `log2(rank + 1)` discount.
/// Queries without any positively judged document are left out of the mean.
pub fn ndcg_at_k(run: &Run, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    let per_query: Vec<f64> = judged_queries(qrels, 1)
        .map(|qid| {
            let dcg: f64 = run.get(qid).map_or(0.0, |list| {
                list.doc_ids()
                    .take(k)
                    .enumerate()
                    .map(|(i, d)| gain(qrels.get(qid, d)) / discount(i + 1))
                    .sum()
            });
            let mut ideal: Vec<u32> = qrels.judgments[qid].values().copied().collect();
            ideal.sort_unstable_by(|a, b| b.cmp(a));
            let idcg: f64 = ideal
                .iter()
                .take(k)
                .enumerate()
                .map(|(i, &r)| gain(r) / discount(i + 1))
                .sum();
            dcg / idcg
        })
        .collect();
    Ok(mean(&per_query))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricSpec {
    Mrr(usize),
    Recall(usize),
    Ndcg(usize),
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Mrr(k) => write!(f, "mrr@{k}"),
            MetricSpec::Recall(k) => write!(f, "recall@{k}"),
            MetricSpec::Ndcg(k) => write!(f, "ndcg@{k}"),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    /// Parses `mrr@10`, `recall@1000`, `ndcg@10`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown metric `{s}` (expected mrr@k, recall@k or ndcg@k)"));
        let (name, k) = s.trim().split_once('@').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        check_k(k)?;
        match name.to_ascii_lowercase().as_str() {
            "mrr" => Ok(MetricSpec::Mrr(k)),
            "recall" => Ok(MetricSpec::Recall(k)),
            "ndcg" => Ok(MetricSpec::Ndcg(k)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<(MetricSpec, f64)>,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (spec, value) in &self.rows {
            writeln!(f, "{spec}\tall\t{value:.4}")?;
        }
        Ok(())
    }
}

pub fn evaluate(run: &Run, qrels: &Qrels, specs: &[MetricSpec]) -> Result<EvalReport> {
    let rows = specs
        .iter()
        .map(|&spec| {
            let v = match spec {
                MetricSpec::Mrr(k) => mrr_at_k(run, qrels, k, 1)?,
                MetricSpec::Recall(k) => recall_at_k(run, qrels, k, 1)?,
                MetricSpec::Ndcg(k) => ndcg_at_k(run, qrels, k)?,
            };
            Ok((spec, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport { rows })
}
