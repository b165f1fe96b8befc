use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bm25::{score_all, Bm25Params};
use super::index::InvertedIndex;
use crate::error::{Error, Result};
use crate::linalg::softmax;

/// RM3 pseudo-relevance feedback parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rm3Params {
    pub fb_docs: usize,
    pub fb_terms: usize,
    /// Weight of the original query model in the interpolation.
    pub original_weight: f64,
}

impl Default for Rm3Params {
    fn default() -> Self {
        Rm3Params {
            fb_docs: 10,
            fb_terms: 10,
            original_weight: 0.5,
        }
    }
}

impl Rm3Params {
    pub fn validate(&self) -> Result<()> {
        if self.fb_docs == 0 || self.fb_terms == 0 || !(0.0..=1.0).contains(&self.original_weight) {
            return Err(Error::InvalidArgument(format!(
                "RM3 needs fb_docs >= 1, fb_terms >= 1 and weight in [0,1], got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Maximum-likelihood query model: term counts over query length.
pub fn query_model(terms: &[String]) -> BTreeMap<String, f64> {
    let mut model = BTreeMap::new();
    if terms.is_empty() {
        return model;
    }
    let unit = 1.0 / terms.len() as f64;
    for t in terms {
        *model.entry(t.clone()).or_insert(0.0) += unit;
    }
    model
}

/// Expands a tokenized query with RM3.
///
/// The feedback model is RM1 over the top `fb_docs` documents of a first
/// BM25 pass: each term gets `sum_d P(t|d) * softmax(bm25)(d)`, the
/// `fb_terms` heaviest terms are kept and renormalized, and the result is
/// mixed with the original query model.
pub fn rm3_expand(
    index: &InvertedIndex,
    query_terms: &[String],
    bm25: Bm25Params,
    params: Rm3Params,
) -> BTreeMap<String, f64> {
    let original = query_model(query_terms);
    let counted: Vec<(String, f64)> = query_terms.iter().map(|t| (t.clone(), 1.0)).collect();
    let scores = score_all(index, &counted, bm25);
    let mut matched: Vec<(u32, f64)> = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        .map(|(d, &s)| (d as u32, s))
        .collect();
    if matched.is_empty() {
        return original;
    }
    matched.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| index.doc_id(a.0).cmp(index.doc_id(b.0)))
    });
    matched.truncate(params.fb_docs);

    let doc_weights = softmax(&matched.iter().map(|(_, s)| *s).collect::<Vec<_>>())
        .expect("non-empty feedback set");
    let mut feedback: BTreeMap<&str, f64> = BTreeMap::new();
    for ((doc, _), w) in matched.iter().zip(doc_weights) {
        let len = index.doc_length(*doc) as f64;
        for (term, tf) in index.doc_terms(*doc) {
            *feedback.entry(term.as_str()).or_insert(0.0) += w * (*tf as f64) / len;
        }
    }
    let mut top: Vec<(&str, f64)> = feedback.into_iter().collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    top.truncate(params.fb_terms);
    let total: f64 = top.iter().map(|(_, w)| w).sum();

    let alpha = params.original_weight;
    let mut expanded: BTreeMap<String, f64> =
        original.into_iter().map(|(t, w)| (t, alpha * w)).collect();
    for (term, w) in top {
        *expanded.entry(term.to_string()).or_insert(0.0) += (1.0 - alpha) * w / total;
    }
    expanded
}
