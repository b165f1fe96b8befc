//! First-stage candidate retrieval: inverted index, BM25 and RM3.

mod analyzer;
mod bm25;
mod index;
mod rm3;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use analyzer::Analyzer;
pub use bm25::{bm25_score, idf, term_weight, Bm25Params};
pub use index::{InvertedIndex, Posting};
pub use rm3::{query_model, rm3_expand, Rm3Params};

use crate::error::{Error, Result};

/// One ranked item. `id` is a document id, or an entity id for entity
/// rankings.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedItem {
    pub id: String,
    pub score: f64,
    pub rank: usize,
}

/// Per-query ordered result list. Scores are non-increasing, ranks start at
/// 1 and ids are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub query_id: String,
    pub entries: Vec<RankedItem>,
}

/// Score descending, then id ascending.
pub fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

impl Ranking {
    /// Sorts `(id, score)` pairs by score desc, id asc, and assigns ranks.
    pub fn from_scores(query_id: impl Into<String>, mut scored: Vec<(String, f64)>) -> Self {
        scored.sort_by(|a, b| rank_order((&a.0, a.1), (&b.0, b.1)));
        Ranking {
            query_id: query_id.into(),
            entries: scored
                .into_iter()
                .enumerate()
                .map(|(i, (id, score))| RankedItem {
                    id,
                    score,
                    rank: i + 1,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    /// Checks ordering, rank contiguity and id uniqueness.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(Error::InvalidArgument(format!(
                    "query {}: rank {} at position {}",
                    self.query_id,
                    e.rank,
                    i + 1
                )));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::DuplicateId(format!("{}/{}", self.query_id, e.id)));
            }
            if i > 0 && self.entries[i - 1].score < e.score {
                return Err(Error::InvalidArgument(format!(
                    "query {}: scores increase at rank {}",
                    self.query_id, e.rank
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMode {
    Bm25,
    #[default]
    Bm25Rm3,
}

impl std::str::FromStr for RetrievalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bm25" => Ok(RetrievalMode::Bm25),
            "bm25_rm3" | "bm25+rm3" => Ok(RetrievalMode::Bm25Rm3),
            other => Err(Error::InvalidArgument(format!(
                "unknown retrieval mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrievalParams {
    pub mode: RetrievalMode,
    pub bm25: Bm25Params,
    pub rm3: Rm3Params,
}

/// Top-`k` documents for the query text. Documents scoring zero still fill
/// the list after all matching ones, so `k` at or above the collection size
/// ranks the whole collection.
pub fn retrieve(
    index: &InvertedIndex,
    query_id: &str,
    query_text: &str,
    k: usize,
    params: &RetrievalParams,
) -> Result<Ranking> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    params.bm25.validate()?;
    let terms = index.analyzer().tokenize(query_text);
    let weighted: Vec<(String, f64)> = match params.mode {
        RetrievalMode::Bm25 => terms.iter().map(|t| (t.clone(), 1.0)).collect(),
        RetrievalMode::Bm25Rm3 => {
            params.rm3.validate()?;
            rm3_expand(index, &terms, params.bm25, params.rm3)
                .into_iter()
                .collect()
        }
    };
    let scores = bm25::score_all(index, &weighted, params.bm25);
    let mut order: Vec<u32> = (0..index.doc_count() as u32).collect();
    let cmp = |a: &u32, b: &u32| {
        rank_order(
            (index.doc_id(*a), scores[*a as usize]),
            (index.doc_id(*b), scores[*b as usize]),
        )
    };
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, cmp);
        order.truncate(k);
    }
    order.sort_by(cmp);
    Ok(Ranking {
        query_id: query_id.to_string(),
        entries: order
            .into_iter()
            .enumerate()
            .map(|(i, d)| RankedItem {
                id: index.doc_id(d).to_string(),
                score: scores[d as usize],
                rank: i + 1,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> InvertedIndex {
        InvertedIndex::build(
            [
                ("d3", "apple banana apple"),
                ("d1", "banana cherry"),
                ("d5", "apple"),
                ("d2", "cherry cherry date"),
                ("d4", "eggplant apple fig grape"),
            ],
            Analyzer::default(),
        )
        .unwrap()
    }

    fn bm25_only() -> RetrievalParams {
        RetrievalParams {
            mode: RetrievalMode::Bm25,
            ..RetrievalParams::default()
        }
    }

    #[test]
    fn k_larger_than_corpus_ranks_everything() {
        let r = retrieve(&toy(), "q", "apple", 1000, &bm25_only()).unwrap();
        assert_eq!(r.len(), 5);
        r.validate().unwrap();
    }

    #[test]
    fn ties_break_by_doc_id() {
        let ix = InvertedIndex::build([("b", "x"), ("a", "x")], Analyzer::default()).unwrap();
        let r = retrieve(&ix, "q", "x", 10, &bm25_only()).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), vec!["a", "b"]);
    }

    #[test]
    fn matches_brute_force_scoring() {
        let ix = toy();
        let terms = vec!["apple".to_string()];
        let mut brute: Vec<(String, f64)> = ix
            .doc_ids()
            .iter()
            .map(|d| {
                (
                    d.clone(),
                    bm25_score(&ix, &terms, d, Bm25Params::default()).unwrap(),
                )
            })
            .collect();
        brute.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let r = retrieve(&ix, "q", "apple", 5, &bm25_only()).unwrap();
        let got: Vec<(String, f64)> = r.entries.iter().map(|e| (e.id.clone(), e.score)).collect();
        assert_eq!(got.len(), brute.len());
        for (g, b) in got.iter().zip(&brute) {
            assert_eq!(g.0, b.0);
            assert!((g.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn prefix_property() {
        let ix = toy();
        for mode in [RetrievalMode::Bm25, RetrievalMode::Bm25Rm3] {
            let params = RetrievalParams {
                mode,
                ..Default::default()
            };
            let full = retrieve(&ix, "q", "apple cherry", 5, &params).unwrap();
            for k in 1..=5 {
                let r = retrieve(&ix, "q", "apple cherry", k, &params).unwrap();
                assert_eq!(r.entries[..], full.entries[..k]);
            }
        }
    }

    #[test]
    fn zero_k_is_an_error() {
        assert!(retrieve(&toy(), "q", "apple", 0, &bm25_only()).is_err());
    }

    #[test]
    fn from_scores_orders_and_ranks() {
        let r = Ranking::from_scores(
            "q",
            vec![("b".into(), 1.0), ("a".into(), 1.0), ("c".into(), 2.0)],
        );
        assert_eq!(r.ids().collect::<Vec<_>>(), vec!["c", "a", "b"]);
        assert_eq!(r.entries[2].rank, 3);
        r.validate().unwrap();
    }
}
