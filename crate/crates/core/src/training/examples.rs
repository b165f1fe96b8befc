use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{transfer_labels, Document, Qrels};
use crate::embeddings::fnv1a64;
use crate::retrieval::Ranking;

/// A labeled query-document or query-entity pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub query_id: String,
    /// Document id, or entity id for entity-ranker examples.
    pub item_id: String,
    pub label: u8,
}

pub(crate) fn query_rng(seed: u64, query_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(query_id.as_bytes()))
}

/// Samples `positives.len()` negatives (or the whole pool if smaller)
/// without replacement and returns positives followed by negatives.
fn balance(
    query_id: &str,
    positives: Vec<String>,
    mut negatives: Vec<String>,
    seed: u64,
) -> Vec<TrainingExample> {
    negatives.shuffle(&mut query_rng(seed, query_id));
    negatives.truncate(positives.len());
    let labeled = positives
        .into_iter()
        .map(|id| (id, 1))
        .chain(negatives.into_iter().map(|id| (id, 0)));
    labeled
        .map(|(item_id, label)| TrainingExample {
            query_id: query_id.to_string(),
            item_id,
            label,
        })
        .collect()
}

/// Balanced pointwise document examples.
///
/// Positives are every judged-relevant document (grade >= 1); negatives are
/// drawn from candidates judged 0 or not judged at all. Queries without a
/// relevant document are skipped.
pub fn build_doc_examples(
    qrels: &Qrels,
    candidates: &BTreeMap<String, Ranking>,
    seed: u64,
) -> Vec<TrainingExample> {
    let mut out = Vec::new();
    for (qid, ranking) in candidates {
        let positives: Vec<String> = qrels
            .for_query(qid)
            .map(|m| {
                m.iter()
                    .filter(|(_, &g)| g >= 1)
                    .map(|(d, _)| d.clone())
                    .collect()
            })
            .unwrap_or_default();
        if positives.is_empty() {
            log::warn!("query {qid} has no relevant documents; skipped");
            continue;
        }
        let mut negatives: Vec<String> = ranking
            .ids()
            .filter(|d| !qrels.is_relevant(qid, d))
            .map(str::to_string)
            .collect();
        negatives.sort();
        out.extend(balance(qid, positives, negatives, seed));
    }
    out
}

/// Balanced entity examples from transferred labels for one query.
pub fn build_entity_examples<'a, I>(
    qrels: &Qrels,
    query_id: &str,
    candidates: I,
    seed: u64,
) -> Vec<TrainingExample>
where
    I: IntoIterator<Item = &'a Document>,
{
    let labels = transfer_labels(qrels, query_id, candidates);
    let (pos, neg): (Vec<_>, Vec<_>) = labels.into_iter().partition(|(_, l)| *l == 1);
    if pos.is_empty() {
        log::warn!("query {query_id} has no positive entities; skipped");
        return Vec::new();
    }
    balance(
        query_id,
        pos.into_iter().map(|(e, _)| e).collect(),
        neg.into_iter().map(|(e, _)| e).collect(),
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(positives: usize, pool: usize) -> (Qrels, BTreeMap<String, Ranking>) {
        let mut qrels = Qrels::new();
        let mut scored = Vec::new();
        for i in 0..positives {
            let id = format!("rel{i}");
            qrels.insert("q", &id, 1 + (i % 2) as u32).unwrap();
            scored.push((id, 10.0));
        }
        for i in 0..pool {
            let id = format!("neg{i:03}");
            if i % 3 == 0 {
                qrels.insert("q", &id, 0).unwrap();
            }
            scored.push((id, 1.0));
        }
        let mut c = BTreeMap::new();
        c.insert("q".to_string(), Ranking::from_scores("q", scored));
        (qrels, c)
    }

    fn count(ex: &[TrainingExample], label: u8) -> usize {
        ex.iter().filter(|e| e.label == label).count()
    }

    #[test]
    fn balances_against_large_pool() {
        let (qrels, c) = setup(3, 100);
        let ex = build_doc_examples(&qrels, &c, 1);
        assert_eq!(count(&ex, 1), 3);
        assert_eq!(count(&ex, 0), 3);
        assert!(ex
            .iter()
            .filter(|e| e.label == 0)
            .all(|e| e.item_id.starts_with("neg")));
    }

    #[test]
    fn small_pool_is_exhausted() {
        let (qrels, c) = setup(5, 2);
        let ex = build_doc_examples(&qrels, &c, 1);
        assert_eq!(count(&ex, 1), 5);
        assert_eq!(count(&ex, 0), 2);
    }

    #[test]
    fn deterministic_under_seed() {
        let (qrels, c) = setup(4, 50);
        assert_eq!(
            build_doc_examples(&qrels, &c, 7),
            build_doc_examples(&qrels, &c, 7)
        );
        assert_ne!(
            build_doc_examples(&qrels, &c, 7),
            build_doc_examples(&qrels, &c, 8)
        );
    }

    #[test]
    fn query_without_positives_is_skipped() {
        let (_, c) = setup(0, 10);
        assert!(build_doc_examples(&Qrels::new(), &c, 1).is_empty());
    }
}
