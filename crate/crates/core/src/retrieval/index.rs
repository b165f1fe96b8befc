use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::analyzer::Analyzer;
use crate::corpus::CorpusStore;
use crate::error::{Error, Result};

/// A posting: internal document number and term frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// In-memory inverted index with a forward index for feedback models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    analyzer: Analyzer,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    postings: BTreeMap<String, Vec<Posting>>,
    /// Per document: (term, tf) sorted by term.
    forward: Vec<Vec<(String, u32)>>,
    #[serde(skip)]
    doc_lookup: HashMap<String, u32>,
}

impl InvertedIndex {
    /// Indexes `(id, text)` pairs. Ids must be unique.
    pub fn build<'a, I>(docs: I, analyzer: Analyzer) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut doc_ids = Vec::new();
        let mut doc_lengths = Vec::new();
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut forward = Vec::new();
        let mut doc_lookup = HashMap::new();
        for (id, text) in docs {
            let doc = u32::try_from(doc_ids.len())
                .map_err(|_| Error::InvalidArgument("too many documents".into()))?;
            if doc_lookup.insert(id.to_string(), doc).is_some() {
                return Err(Error::DuplicateId(id.to_string()));
            }
            let tokens = analyzer.tokenize(text);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_insert(0) += 1;
            }
            for (term, &count) in &tf {
                postings
                    .entry(term.clone())
                    .or_default()
                    .push(Posting { doc, tf: count });
            }
            doc_ids.push(id.to_string());
            doc_lengths.push(tokens.len() as u32);
            forward.push(tf.into_iter().collect());
        }
        if doc_ids.is_empty() {
            return Err(Error::Empty("corpus to index"));
        }
        let avg_doc_length =
            doc_lengths.iter().map(|&l| l as f64).sum::<f64>() / doc_lengths.len() as f64;
        Ok(InvertedIndex {
            analyzer,
            doc_ids,
            doc_lengths,
            avg_doc_length,
            postings,
            forward,
            doc_lookup,
        })
    }

    pub fn from_corpus(corpus: &CorpusStore, analyzer: Analyzer) -> Result<Self> {
        Self::build(
            corpus
                .documents()
                .iter()
                .map(|d| (d.doc_id.as_str(), d.text.as_str())),
            analyzer,
        )
    }

    pub fn analyzer(&self) -> Analyzer {
        self.analyzer
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, doc: u32) -> u32 {
        self.doc_lengths[doc as usize]
    }

    pub fn doc_id(&self, doc: u32) -> &str {
        &self.doc_ids[doc as usize]
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn internal_id(&self, doc_id: &str) -> Option<u32> {
        self.doc_lookup.get(doc_id).copied()
    }

    pub fn document_frequency(&self, term: &str) -> u32 {
        self.postings.get(term).map_or(0, |p| p.len() as u32)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn term_frequency(&self, term: &str, doc: u32) -> u32 {
        let terms = &self.forward[doc as usize];
        terms
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .map_or(0, |i| terms[i].1)
    }

    /// Terms of a document with their frequencies, sorted by term.
    pub fn doc_terms(&self, doc: u32) -> &[(String, u32)] {
        &self.forward[doc as usize]
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let mut index: InvertedIndex = serde_json::from_str(text)
            .map_err(|e| Error::parse(origin, e.line(), e.to_string()))?;
        index.doc_lookup = index
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Ok(index)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index(docs: &[(&str, &str)]) -> InvertedIndex {
        InvertedIndex::build(docs.iter().copied(), Analyzer::default()).unwrap()
    }

    #[test]
    fn single_document_counts() {
        let ix = index(&[("d", "a b a")]);
        assert_eq!(ix.document_frequency("a"), 1);
        assert_eq!(ix.term_frequency("a", 0), 2);
        assert_eq!(ix.term_frequency("zzz", 0), 0);
        assert_eq!(ix.avg_doc_length(), 3.0);
    }

    #[test]
    fn shared_term_document_frequency() {
        let ix = index(&[("d1", "t x"), ("d2", "y t")]);
        assert_eq!(ix.document_frequency("t"), 2);
        assert_eq!(ix.document_frequency("x"), 1);
        assert_eq!(ix.avg_doc_length(), 2.0);
    }

    #[test]
    fn rebuild_is_identical_and_json_round_trips() {
        let docs = [("d1", "the cat sat"), ("d2", "the dog sat down")];
        let a = index(&docs);
        let b = index(&docs);
        assert_eq!(a, b);
        let back = InvertedIndex::from_json(&a.to_json().unwrap(), Path::new("ix")).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.internal_id("d2"), Some(1));
    }

    #[test]
    fn empty_and_duplicate_inputs_fail() {
        assert!(InvertedIndex::build(std::iter::empty(), Analyzer::default()).is_err());
        assert!(InvertedIndex::build([("d", "a"), ("d", "b")], Analyzer::default()).is_err());
    }

    #[test]
    fn statistics_are_consistent() {
        let ix = index(&[("a", "x y z x"), ("b", "y y"), ("c", "")]);
        let total: u32 = (0..3).map(|d| ix.doc_length(d)).sum();
        let mut tf_sum = 0;
        for term in ["x", "y", "z"] {
            let p = ix.postings(term);
            assert_eq!(p.len() as u32, ix.document_frequency(term));
            tf_sum += p.iter().map(|p| p.tf).sum::<u32>();
        }
        assert_eq!(tf_sum, total);
        assert_eq!(ix.avg_doc_length(), 2.0);
    }
}
