//! Entity-linked corpora, topics, relevance judgments and passage segmentation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A linked entity mention inside a document. Offsets are in characters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityMention {
    pub entity_id: String,
    #[serde(rename = "mention")]
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub sentences: Vec<String>,
    pub mentions: Vec<EntityMention>,
}

impl Document {
    /// Builds a document, splitting sentences and validating mention spans.
    pub fn new(
        doc_id: impl Into<String>,
        text: impl Into<String>,
        mentions: Vec<EntityMention>,
        splitter: &dyn SentenceSplitter,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        let text = text.into();
        if doc_id.is_empty() {
            return Err(Error::InvalidDocument {
                doc_id,
                message: "empty doc_id".into(),
            });
        }
        let len = text.chars().count();
        for m in &mentions {
            let invalid = |message: String| Error::InvalidDocument {
                doc_id: doc_id.clone(),
                message,
            };
            if m.start >= m.end {
                return Err(invalid(format!(
                    "mention of `{}` has empty span {}..{}",
                    m.entity_id, m.start, m.end
                )));
            }
            if m.end > len {
                return Err(invalid(format!(
                    "mention of `{}` ends at {} beyond text length {len}",
                    m.entity_id, m.end
                )));
            }
            if !(0.0..=1.0).contains(&m.confidence) {
                return Err(invalid(format!(
                    "mention of `{}` has confidence {} outside [0,1]",
                    m.entity_id, m.confidence
                )));
            }
        }
        let sentences = splitter.split(&text);
        Ok(Document {
            doc_id,
            text,
            sentences,
            mentions,
        })
    }

    /// Distinct entity ids in first-mention order.
    pub fn entity_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.mentions
            .iter()
            .map(|m| m.entity_id.as_str())
            .filter(|id| seen.insert(*id))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub entity_id: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub query_id: String,
    pub text: String,
}

/// An entity linked in the query text, with the linker's confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryEntity {
    pub entity_id: String,
    pub confidence: f64,
}

/// Splits text into sentences.
pub trait SentenceSplitter: Send + Sync {
    fn split(&self, text: &str) -> Vec<String>;
}

/// Breaks after `.`, `!` or `?` when followed by whitespace.
#[derive(Debug, Clone, Copy, Default)]
pub struct PunctuationSplitter;

impl SentenceSplitter for PunctuationSplitter {
    fn split(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut start = 0;
        let mut chars = text.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if matches!(c, '.' | '!' | '?') {
                if let Some(&(_, next)) = chars.peek() {
                    if next.is_whitespace() {
                        let end = i + c.len_utf8();
                        push_trimmed(&mut out, &text[start..end]);
                        start = end;
                    }
                }
            }
        }
        push_trimmed(&mut out, &text[start..]);
        out
    }
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

#[derive(Deserialize)]
struct RawDocument {
    doc_id: String,
    text: String,
    #[serde(default)]
    entities: Vec<EntityMention>,
}

/// Immutable collection of documents plus the entity catalog.
#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
    entities: BTreeMap<String, EntityRecord>,
}

impl CorpusStore {
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if by_id.insert(d.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(d.doc_id.clone()));
            }
        }
        Ok(CorpusStore {
            docs,
            by_id,
            entities: BTreeMap::new(),
        })
    }

    /// Reads the corpus JSONL format, one document per line.
    pub fn parse_jsonl(text: &str, origin: &Path, splitter: &dyn SentenceSplitter) -> Result<Self> {
        let mut docs = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawDocument = serde_json::from_str(line)
                .map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
            if !seen.insert(raw.doc_id.clone()) {
                return Err(Error::parse(
                    origin,
                    i + 1,
                    format!("duplicate doc_id `{}`", raw.doc_id),
                ));
            }
            docs.push(Document::new(raw.doc_id, raw.text, raw.entities, splitter)?);
        }
        Self::from_documents(docs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, &PunctuationSplitter)
    }

    pub fn load_with(path: &Path, splitter: &dyn SentenceSplitter) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_jsonl(&text, path, splitter)
    }

    pub fn set_catalog(&mut self, records: Vec<EntityRecord>) -> Result<()> {
        let mut table = BTreeMap::new();
        for r in records {
            if table.contains_key(&r.entity_id) {
                return Err(Error::DuplicateId(r.entity_id));
            }
            table.insert(r.entity_id.clone(), r);
        }
        self.entities = table;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn require(&self, doc_id: &str) -> Result<&Document> {
        self.get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
    }

    pub fn entity(&self, entity_id: &str) -> Option<&EntityRecord> {
        self.entities.get(entity_id)
    }

    /// Catalog records in entity-id order.
    pub fn catalog(&self) -> impl Iterator<Item = &EntityRecord> {
        self.entities.values()
    }

    /// Serializes the documents in the format read by `parse_jsonl`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.docs {
            let line = serde_json::json!({
                "doc_id": d.doc_id,
                "text": d.text,
                "entities": d.mentions,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

pub fn catalog_to_jsonl<'a>(records: impl IntoIterator<Item = &'a EntityRecord>) -> String {
    records
        .into_iter()
        .map(|r| serde_json::to_string(r).expect("string fields serialize") + "\n")
        .collect()
}

pub fn queries_to_tsv(queries: &[Query]) -> String {
    queries
        .iter()
        .map(|q| format!("{}\t{}\n", q.query_id, q.text))
        .collect()
}

pub fn query_entities_to_tsv(links: &BTreeMap<String, Vec<QueryEntity>>) -> String {
    let mut out = String::new();
    for (qid, ents) in links {
        for e in ents {
            out.push_str(&format!("{qid}\t{}\t{}\n", e.entity_id, e.confidence));
        }
    }
    out
}

pub fn parse_catalog(text: &str, origin: &Path) -> Result<Vec<EntityRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: EntityRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        if !seen.insert(r.entity_id.clone()) {
            return Err(Error::parse(
                origin,
                i + 1,
                format!("duplicate entity_id `{}`", r.entity_id),
            ));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn load_catalog(path: &Path) -> Result<Vec<EntityRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_catalog(&text, path)
}

/// `query_id<TAB>text`, one per line.
pub fn parse_queries(text: &str, origin: &Path) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (qid, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(origin, i + 1, "expected `query_id<TAB>text`"))?;
        let qid = qid.trim();
        let body = body.trim();
        if qid.is_empty() || body.is_empty() {
            return Err(Error::parse(origin, i + 1, "empty query id or text"));
        }
        if !seen.insert(qid.to_string()) {
            return Err(Error::parse(
                origin,
                i + 1,
                format!("duplicate query_id `{qid}`"),
            ));
        }
        out.push(Query {
            query_id: qid.to_string(),
            text: body.to_string(),
        });
    }
    Ok(out)
}

pub fn load_queries(path: &Path) -> Result<Vec<Query>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_queries(&text, path)
}

/// `query_id<TAB>entity_id<TAB>confidence`, one linked entity per line.
pub fn parse_query_entities(
    text: &str,
    origin: &Path,
) -> Result<BTreeMap<String, Vec<QueryEntity>>> {
    let mut out: BTreeMap<String, Vec<QueryEntity>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                origin,
                i + 1,
                "expected `query_id<TAB>entity_id<TAB>confidence`",
            ));
        }
        let confidence: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(origin, i + 1, format!("bad confidence `{}`", fields[2])))?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::parse(origin, i + 1, "confidence outside [0,1]"));
        }
        out.entry(fields[0].trim().to_string())
            .or_default()
            .push(QueryEntity {
                entity_id: fields[1].trim().to_string(),
                confidence,
            });
    }
    Ok(out)
}

pub fn load_query_entities(path: &Path) -> Result<BTreeMap<String, Vec<QueryEntity>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_query_entities(&text, path)
}

/// Graded relevance judgments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a judgment; a second grade for the same pair is an error.
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> Result<()> {
        let q = self.judgments.entry(query_id.to_string()).or_default();
        if q.insert(doc_id.to_string(), grade).is_some() {
            return Err(Error::DuplicateId(format!("{query_id}/{doc_id}")));
        }
        Ok(())
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    pub fn is_relevant(&self, query_id: &str, doc_id: &str) -> bool {
        self.grade(query_id, doc_id).unwrap_or(0) >= 1
    }

    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.judgments.contains_key(query_id)
    }

    /// Number of documents with grade >= 1 for the query.
    pub fn relevant_count(&self, query_id: &str) -> usize {
        self.for_query(query_id)
            .map(|m| m.values().filter(|&&g| g >= 1).count())
            .unwrap_or(0)
    }

    /// TREC format: `qid 0 docid grade`.
    pub fn parse_trec(text: &str, origin: &Path) -> Result<Self> {
        let mut qrels = Qrels::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 4 {
                return Err(Error::parse(origin, i + 1, "expected `qid 0 docid grade`"));
            }
            let grade: u32 = fields[3].parse().map_err(|_| {
                Error::parse(
                    origin,
                    i + 1,
                    format!("grade `{}` is not a non-negative integer", fields[3]),
                )
            })?;
            qrels
                .insert(fields[0], fields[2], grade)
                .map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        }
        Ok(qrels)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_trec(&text, path)
    }

    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (q, docs) in &self.judgments {
            for (d, g) in docs {
                out.push_str(&format!("{q} 0 {d} {g}\n"));
            }
        }
        out
    }
}

/// Sliding window over sentences: `window` sentences, advancing by `stride`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmenterConfig {
    pub window: usize,
    pub stride: usize,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            window: 10,
            stride: 5,
        }
    }
}

impl SegmenterConfig {
    pub fn new(window: usize, stride: usize) -> Result<Self> {
        if window == 0 || stride == 0 || stride > window {
            return Err(Error::InvalidArgument(format!(
                "segmenter needs 1 <= stride <= window, got window={window} stride={stride}"
            )));
        }
        Ok(SegmenterConfig { window, stride })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Passage {
    pub doc_id: String,
    pub index: usize,
    /// Half-open sentence range.
    pub sentence_range: (usize, usize),
    pub text: String,
}

/// Windows start at 0, S, 2S, ... and cover `[i, min(i+M, n))`; the first
/// window reaching the end of the document is the last one emitted.
pub fn segment_passages(doc: &Document, cfg: SegmenterConfig) -> Vec<Passage> {
    let n = doc.sentences.len();
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + cfg.window).min(n);
        out.push(Passage {
            doc_id: doc.doc_id.clone(),
            index: out.len(),
            sentence_range: (start, end),
            text: doc.sentences[start..end].join(" "),
        });
        if end == n {
            break;
        }
        start += cfg.stride;
    }
    out
}

/// Union of linked entities over the candidates, in first-seen order.
pub fn pool_entities<'a, I>(candidates: I) -> Vec<String>
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for doc in candidates {
        for m in &doc.mentions {
            if seen.insert(m.entity_id.as_str()) {
                out.push(m.entity_id.clone());
            }
        }
    }
    out
}

/// Entity labels from document judgments: 1 if the entity occurs in any
/// candidate judged relevant, else 0. Only pooled entities appear.
pub fn transfer_labels<'a, I>(qrels: &Qrels, query_id: &str, candidates: I) -> BTreeMap<String, u8>
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut labels: BTreeMap<String, u8> = BTreeMap::new();
    for doc in candidates {
        let label = u8::from(qrels.is_relevant(query_id, &doc.doc_id));
        for m in &doc.mentions {
            let slot = labels.entry(m.entity_id.clone()).or_insert(0);
            *slot = (*slot).max(label);
        }
    }
    labels
}
