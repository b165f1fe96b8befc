use serde::{Deserialize, Serialize};

use super::index::InvertedIndex;
use crate::error::{Error, Result};

/// Okapi BM25 parameters, Lucene formulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0) || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidArgument(format!(
                "BM25 needs k1 >= 0 and 0 <= b <= 1, got k1={} b={}",
                self.k1, self.b
            )));
        }
        Ok(())
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`, always positive.
pub fn idf(doc_count: usize, df: u32) -> f64 {
    let n = doc_count as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Contribution of one term occurrence count to one document.
pub fn term_weight(idf: f64, tf: u32, doc_len: u32, avg_doc_len: f64, params: Bm25Params) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    let tf = tf as f64;
    let norm = if avg_doc_len > 0.0 {
        1.0 - params.b + params.b * doc_len as f64 / avg_doc_len
    } else {
        1.0
    };
    idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

/// BM25 of a tokenized query against one document; repeated query terms
/// count once per occurrence.
pub fn bm25_score(
    index: &InvertedIndex,
    query_terms: &[String],
    doc_id: &str,
    params: Bm25Params,
) -> Result<f64> {
    let doc = index
        .internal_id(doc_id)
        .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
    Ok(query_terms
        .iter()
        .map(|t| {
            let w = idf(index.doc_count(), index.document_frequency(t));
            term_weight(
                w,
                index.term_frequency(t, doc),
                index.doc_length(doc),
                index.avg_doc_length(),
                params,
            )
        })
        .sum())
}

/// Scores every document for a weighted query, term at a time.
pub(crate) fn score_all(
    index: &InvertedIndex,
    query: &[(String, f64)],
    params: Bm25Params,
) -> Vec<f64> {
    let mut acc = vec![0.0; index.doc_count()];
    for (term, weight) in query {
        let postings = index.postings(term);
        if postings.is_empty() {
            continue;
        }
        let w = idf(index.doc_count(), postings.len() as u32);
        for p in postings {
            acc[p.doc as usize] += weight
                * term_weight(
                    w,
                    p.tf,
                    index.doc_length(p.doc),
                    index.avg_doc_length(),
                    params,
                );
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::Analyzer;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn hand_evaluated_example() {
        // N=2, df(a)=1, tf(a,d1)=2, dl=avgdl=4
        let ix = InvertedIndex::build([("d1", "a a b c"), ("d2", "b c d e")], Analyzer::default())
            .unwrap();
        let s = bm25_score(&ix, &toks("a"), "d1", Bm25Params::default()).unwrap();
        let expected = 2f64.ln() * 3.8 / 2.9;
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.9082).abs() < 1e-4);
    }

    #[test]
    fn absent_term_scores_zero() {
        let ix = InvertedIndex::build([("d1", "x y"), ("d2", "q")], Analyzer::default()).unwrap();
        assert_eq!(
            bm25_score(&ix, &toks("q"), "d1", Bm25Params::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn term_in_every_document_still_positive() {
        let ix = InvertedIndex::build([("d", "t")], Analyzer::default()).unwrap();
        assert!((idf(1, 1) - (1.0f64 + 0.5 / 1.5).ln()).abs() < 1e-15);
        assert!(bm25_score(&ix, &toks("t"), "d", Bm25Params::default()).unwrap() > 0.0);
    }

    #[test]
    fn unknown_document() {
        let ix = InvertedIndex::build([("d", "t")], Analyzer::default()).unwrap();
        assert!(matches!(
            bm25_score(&ix, &toks("t"), "nope", Bm25Params::default()),
            Err(Error::UnknownDocument(_))
        ));
    }

    #[test]
    fn monotone_in_tf() {
        let p = Bm25Params::default();
        let w = idf(10, 3);
        let mut prev = 0.0;
        for tf in 0..50 {
            let s = term_weight(w, tf, 20, 15.0, p);
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn params_validation() {
        assert!(Bm25Params { k1: -1.0, b: 0.5 }.validate().is_err());
        assert!(Bm25Params { k1: 1.0, b: 1.5 }.validate().is_err());
        assert!(Bm25Params::default().validate().is_ok());
    }
}
