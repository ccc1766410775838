//! Ranking metrics and TREC-format qrels/run files.

mod metrics;
pub mod trec;

use std::collections::BTreeMap;

use crate::model::RankedList;

pub use metrics::{evaluate, mrr_at_k, ndcg_at_k, recall_at_k, EvalReport, MetricSpec};
pub use trec::{format_score, read_qrels, read_run, write_qrels, write_run};

/// Graded judgments: query id → doc id → relevance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Qrels {
    pub judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn get(&self, qid: &str, doc_id: &str) -> u32 {
        self.judgments
            .get(qid)
            .and_then(|m| m.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    /// Doc ids judged at least `min_rel` for a query.
    pub fn relevant<'a>(&'a self, qid: &str, min_rel: u32) -> impl Iterator<Item = &'a str> + 'a {
        self.judgments
            .get(qid)
            .into_iter()
            .flatten()
            .filter(move |(_, &r)| r >= min_rel)
            .map(|(d, _)| d.as_str())
    }
}

/// System output: query id → ranked list.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Run {
    pub lists: BTreeMap<String, RankedList>,
}

impl Run {
    pub fn insert(&mut self, list: RankedList) {
        self.lists.insert(list.query_id.clone(), list);
    }

    pub fn get(&self, qid: &str) -> Option<&RankedList> {
        self.lists.get(qid)
    }
}

impl FromIterator<RankedList> for Run {
    fn from_iter<I: IntoIterator<Item = RankedList>>(iter: I) -> Self {
        let mut run = Run::default();
        for list in iter {
            run.insert(list);
        }
        run
    }
}
