//! Planted-relevance corpora with embedding stores aligned to the plant.
//!
//! Every query owns a few "relevant" entities. A document is relevant to a
//! query exactly when it mentions one of them (grade 2 with two or more).
//! Query terms leak into relevant documents more often than into the rest,
//! query embeddings sit near the sum of their relevant entities, and the
//! query-entity encodings of relevant entities carry a shared direction the
//! entity head can learn.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    catalog_to_jsonl, queries_to_tsv, query_entities_to_tsv, segment_passages, CorpusStore,
    Document, EntityMention, EntityRecord, PunctuationSplitter, Qrels, Query, QueryEntity,
    SegmenterConfig,
};
use crate::embeddings::{
    passage_key, query_entity_key, synthetic_embed, DimsConfig, EmbeddingSpaces, EmbeddingStore,
};
use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub docs: usize,
    pub queries: usize,
    pub relevant_docs_per_query: usize,
    pub relevant_entities_per_query: usize,
    pub entities: usize,
    pub background_entities_per_doc: (usize, usize),
    pub sentences_per_doc: (usize, usize),
    pub words_per_sentence: usize,
    pub vocabulary: usize,
    pub terms_per_query: usize,
    pub term_rate_relevant: f64,
    pub term_rate_other: f64,
    /// Chance that a relevant document mentions two relevant entities.
    pub second_entity_rate: f64,
    /// Linked query entities: this many relevant ones plus one distractor.
    pub query_links: usize,
    pub dim: usize,
    /// Length of the shared direction added to relevant query-entity encodings.
    pub entity_signal: f64,
    /// Length of the shared direction added to the embeddings of every
    /// planted entity, marking them as topical rather than background.
    pub topical_signal: f64,
    /// Weight of the query embedding mixed into relevant passages.
    pub text_signal: f64,
    pub query_noise: f64,
    pub segmenter: SegmenterConfig,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            docs: 500,
            queries: 30,
            relevant_docs_per_query: 15,
            relevant_entities_per_query: 3,
            entities: 1000,
            background_entities_per_doc: (4, 8),
            sentences_per_doc: (8, 16),
            words_per_sentence: 8,
            vocabulary: 3000,
            terms_per_query: 3,
            term_rate_relevant: 0.6,
            term_rate_other: 0.15,
            second_entity_rate: 0.35,
            query_links: 2,
            dim: 32,
            entity_signal: 3.0,
            topical_signal: 1.0,
            text_signal: 0.3,
            query_noise: 0.5,
            segmenter: SegmenterConfig::default(),
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// The 50-document corpus bundled with the command-line tool.
    pub fn toy() -> Self {
        SyntheticConfig {
            docs: 50,
            queries: 10,
            relevant_docs_per_query: 4,
            entities: 120,
            background_entities_per_doc: (2, 4),
            sentences_per_doc: (4, 12),
            vocabulary: 400,
            dim: 8,
            ..SyntheticConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("synthetic config: {m}")));
        if self.queries * self.relevant_docs_per_query > self.docs {
            return bad("more relevant documents than documents");
        }
        if self.queries * self.relevant_entities_per_query + self.background_entities_per_doc.1
            > self.entities
        {
            return bad("not enough entities for the plant");
        }
        if self.relevant_entities_per_query == 0
            || self.relevant_docs_per_query == 0
            || self.queries == 0
        {
            return bad("queries need relevant entities and documents");
        }
        if self.query_links > self.relevant_entities_per_query {
            return bad("more query links than relevant entities");
        }
        if self.sentences_per_doc.0 == 0 || self.sentences_per_doc.0 > self.sentences_per_doc.1 {
            return bad("sentence range");
        }
        if self.background_entities_per_doc.0 > self.background_entities_per_doc.1 {
            return bad("entity range");
        }
        if self.words_per_sentence < 2 || self.vocabulary < 10 || self.dim == 0 {
            return bad("sentence length, vocabulary and dim must be positive");
        }
        let slots = self.sentences_per_doc.0 * self.words_per_sentence;
        if slots < self.background_entities_per_doc.1 + 2 {
            return bad("documents too short for their mentions");
        }
        for r in [
            self.term_rate_relevant,
            self.term_rate_other,
            self.second_entity_rate,
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad("rates must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub corpus: CorpusStore,
    pub catalog: Vec<EntityRecord>,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
    pub query_entities: BTreeMap<String, Vec<QueryEntity>>,
    pub spaces: EmbeddingSpaces,
    /// The planted relevant entities of each query.
    pub relevant_entities: BTreeMap<String, Vec<String>>,
}

const SYLLABLES: [&str; 20] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "da", "pe", "zu", "ha", "qi", "bo", "fe", "gi",
    "ju", "xa", "wo", "ye",
];

fn word(i: usize) -> String {
    let n = SYLLABLES.len();
    format!(
        "{}{}{}",
        SYLLABLES[i % n],
        SYLLABLES[(i / n) % n],
        SYLLABLES[(i / (n * n)) % n]
    )
}

fn unit_sum(parts: &[(f64, Vector)]) -> Vector {
    let mut v = Vector::zeros(parts[0].1.dim());
    for (c, p) in parts {
        v.axpy(*c, p).expect("equal dims");
    }
    v.normalized().unwrap_or(v)
}

/// Generates the planted corpus deterministically from `cfg.seed`.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let entity_ids: Vec<String> = (0..cfg.entities).map(|i| format!("E{i:04}")).collect();
    let query_ids: Vec<String> = (1..=cfg.queries).map(|i| format!("q{i:02}")).collect();

    let mut shuffled = entity_ids.clone();
    shuffled.shuffle(&mut rng);
    let (planted, background) = shuffled.split_at(cfg.queries * cfg.relevant_entities_per_query);
    let relevant_entities: BTreeMap<String, Vec<String>> = query_ids
        .iter()
        .zip(planted.chunks(cfg.relevant_entities_per_query))
        .map(|(q, es)| (q.clone(), es.to_vec()))
        .collect();

    // Query terms come from the top of the word space, away from the
    // background vocabulary.
    let query_terms: BTreeMap<&String, Vec<String>> = query_ids
        .iter()
        .enumerate()
        .map(|(qi, q)| {
            let terms = (0..cfg.terms_per_query)
                .map(|t| word(cfg.vocabulary + qi * cfg.terms_per_query + t))
                .collect();
            (q, terms)
        })
        .collect();

    let mut doc_order: Vec<usize> = (0..cfg.docs).collect();
    doc_order.shuffle(&mut rng);
    let mut owner: Vec<Option<usize>> = vec![None; cfg.docs];
    for (slot, &d) in doc_order
        .iter()
        .take(cfg.queries * cfg.relevant_docs_per_query)
        .enumerate()
    {
        owner[d] = Some(slot % cfg.queries);
    }

    let mut docs = Vec::with_capacity(cfg.docs);
    let mut qrels = Qrels::new();
    let mut doc_queries: BTreeMap<String, usize> = BTreeMap::new();
    for (d, owner) in owner.iter().enumerate() {
        let doc_id = format!("D{d:04}");
        let n_sent = rng.gen_range(cfg.sentences_per_doc.0..=cfg.sentences_per_doc.1);
        let mut sentences: Vec<Vec<String>> = (0..n_sent)
            .map(|_| {
                (0..cfg.words_per_sentence)
                    .map(|_| word(rng.gen_range(0..cfg.vocabulary)))
                    .collect()
            })
            .collect();
        let mut taken: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (qi, q) in query_ids.iter().enumerate() {
            let rate = if *owner == Some(qi) {
                cfg.term_rate_relevant
            } else {
                cfg.term_rate_other
            };
            for t in &query_terms[q] {
                if rng.gen_bool(rate) {
                    let s = rng.gen_range(0..n_sent);
                    let w = rng.gen_range(0..cfg.words_per_sentence);
                    sentences[s][w] = t.clone();
                    taken.insert((s, w));
                }
            }
        }
        let mut linked: Vec<String> = Vec::new();
        if let Some(qi) = owner {
            let q = &query_ids[*qi];
            let rel = &relevant_entities[q];
            let count = if rel.len() > 1 && rng.gen_bool(cfg.second_entity_rate) {
                2
            } else {
                1
            };
            linked.extend(rel.choose_multiple(&mut rng, count).cloned());
            qrels.insert(q, &doc_id, if count >= 2 { 2 } else { 1 })?;
            doc_queries.insert(doc_id.clone(), *qi);
        }
        let n_bg =
            rng.gen_range(cfg.background_entities_per_doc.0..=cfg.background_entities_per_doc.1);
        linked.extend(background.choose_multiple(&mut rng, n_bg).cloned());
        linked.shuffle(&mut rng);

        let mut positions = Vec::new();
        for _ in &linked {
            let pos = loop {
                let p = (
                    rng.gen_range(0..n_sent),
                    rng.gen_range(0..cfg.words_per_sentence),
                );
                if taken.insert(p) {
                    break p;
                }
            };
            positions.push(pos);
        }
        let mut text = String::new();
        let mut offsets: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        let mut chars = 0usize;
        for (s, words) in sentences.iter().enumerate() {
            if s > 0 {
                text.push(' ');
                chars += 1;
            }
            for (w, token) in words.iter().enumerate() {
                if w > 0 {
                    text.push(' ');
                    chars += 1;
                }
                let len = token.chars().count();
                offsets.insert((s, w), (chars, chars + len));
                text.push_str(token);
                chars += len;
            }
            text.push('.');
            chars += 1;
        }
        let mentions = linked
            .iter()
            .zip(&positions)
            .map(|(e, p)| {
                let (start, end) = offsets[p];
                EntityMention {
                    entity_id: e.clone(),
                    surface: sentences[p.0][p.1].clone(),
                    start,
                    end,
                    confidence: (rng.gen_range(0.5..1.0f64) * 1000.0).round() / 1000.0,
                }
            })
            .collect();
        docs.push(Document::new(doc_id, text, mentions, &PunctuationSplitter)?);
    }

    for q in &query_ids {
        if qrels.relevant_count(q) == 0 {
            return Err(Error::InvalidArgument(format!(
                "query {q} received no relevant document"
            )));
        }
    }

    let queries: Vec<Query> = query_ids
        .iter()
        .map(|q| Query {
            query_id: q.clone(),
            text: query_terms[q].join(" "),
        })
        .collect();

    let mut query_entities = BTreeMap::new();
    for q in &query_ids {
        let mut links: Vec<QueryEntity> = relevant_entities[q][..cfg.query_links]
            .iter()
            .map(|e| QueryEntity {
                entity_id: e.clone(),
                confidence: (rng.gen_range(0.6..1.0f64) * 1000.0).round() / 1000.0,
            })
            .collect();
        if cfg.query_links > 0 {
            let distractor = background.choose(&mut rng).expect("non-empty background");
            links.push(QueryEntity {
                entity_id: distractor.clone(),
                confidence: (rng.gen_range(0.1..0.5f64) * 1000.0).round() / 1000.0,
            });
        }
        query_entities.insert(q.clone(), links);
    }

    let catalog: Vec<EntityRecord> = entity_ids
        .iter()
        .map(|e| {
            let mut words: Vec<String> = (0..12)
                .map(|_| word(rng.gen_range(0..cfg.vocabulary)))
                .collect();
            if let Some((q, _)) = relevant_entities.iter().find(|(_, es)| es.contains(e)) {
                for t in &query_terms[q] {
                    if rng.gen_bool(0.5) {
                        let at = rng.gen_range(0..words.len());
                        words[at] = t.clone();
                    }
                }
            }
            EntityRecord {
                entity_id: e.clone(),
                description: words.join(" "),
            }
        })
        .collect();

    let dim = cfg.dim;
    let seed = cfg.seed;
    let mut spaces = EmbeddingSpaces {
        entity: EmbeddingStore::new("entity", dim),
        passage: EmbeddingStore::new("passage", dim),
        query: EmbeddingStore::new("query", dim),
        query_entity: EmbeddingStore::new("query_entity", dim),
    };
    let topical = synthetic_embed("topical-direction", "v", dim, seed);
    let planted_set: BTreeSet<&String> = planted.iter().collect();
    for e in &entity_ids {
        let mut parts = vec![(1.0, synthetic_embed("entity", e, dim, seed))];
        if planted_set.contains(e) {
            parts.push((cfg.topical_signal, topical.clone()));
        }
        spaces.entity.insert(e.clone(), unit_sum(&parts))?;
    }
    let mut query_vecs = BTreeMap::new();
    for q in &query_ids {
        let mut parts: Vec<(f64, Vector)> = relevant_entities[q]
            .iter()
            .map(|e| Ok((1.0, spaces.entity.require(e)?.clone())))
            .collect::<Result<_>>()?;
        parts.push((
            cfg.query_noise,
            synthetic_embed("query-noise", q, dim, seed),
        ));
        let v = unit_sum(&parts);
        spaces.query.insert(q.clone(), v.clone())?;
        query_vecs.insert(q.clone(), v);
    }
    let direction = synthetic_embed("relevance-direction", "u", dim, seed);
    let mentioned: BTreeSet<&str> = docs.iter().flat_map(|d| d.entity_ids()).collect();
    for q in &query_ids {
        let rel = &relevant_entities[q];
        for e in &mentioned {
            let key = query_entity_key(q, e);
            let mut enc = synthetic_embed("query-entity", &key, dim, seed);
            if rel.iter().any(|r| r == e) {
                enc.axpy(cfg.entity_signal, &direction)?;
            }
            spaces.query_entity.insert(key, enc)?;
        }
    }
    for doc in &docs {
        for p in segment_passages(doc, cfg.segmenter) {
            let key = passage_key(&doc.doc_id, p.index);
            let mut parts = vec![(1.0, synthetic_embed("passage", &key, dim, seed))];
            if let Some(qi) = doc_queries.get(&doc.doc_id) {
                parts.push((cfg.text_signal, query_vecs[&query_ids[*qi]].clone()));
            }
            spaces.passage.insert(key, unit_sum(&parts))?;
        }
    }

    let mut corpus = CorpusStore::from_documents(docs)?;
    corpus.set_catalog(catalog.clone())?;
    Ok(SyntheticDataset {
        corpus,
        catalog,
        queries,
        qrels,
        query_entities,
        spaces,
        relevant_entities,
    })
}

/// Hash-based stores for an arbitrary corpus: one vector per catalog or
/// mentioned entity, passage, query and `(query, pooled entity)` pair. These
/// carry no relevance signal; they make every stage runnable without an
/// external encoder.
pub fn hashed_spaces(
    corpus: &CorpusStore,
    queries: &[Query],
    pools: &BTreeMap<String, Vec<String>>,
    dims: DimsConfig,
    segmenter: SegmenterConfig,
    seed: u64,
) -> Result<EmbeddingSpaces> {
    dims.validate()?;
    let mut spaces = EmbeddingSpaces {
        entity: EmbeddingStore::new("entity", dims.m),
        passage: EmbeddingStore::new("passage", dims.n),
        query: EmbeddingStore::new("query", dims.p),
        query_entity: EmbeddingStore::new("query_entity", dims.k),
    };
    let mut entities: BTreeSet<&str> = corpus.catalog().map(|r| r.entity_id.as_str()).collect();
    for doc in corpus.documents() {
        entities.extend(doc.entity_ids());
        for p in segment_passages(doc, segmenter) {
            let key = passage_key(&p.doc_id, p.index);
            spaces
                .passage
                .insert(key.clone(), synthetic_embed("passage", &key, dims.n, seed))?;
        }
    }
    for e in entities {
        spaces
            .entity
            .insert(e, synthetic_embed("entity", e, dims.m, seed))?;
    }
    for q in queries {
        spaces.query.insert(
            q.query_id.clone(),
            synthetic_embed("query", &q.query_id, dims.p, seed),
        )?;
    }
    for (q, pooled) in pools {
        for e in pooled {
            let key = query_entity_key(q, e);
            spaces.query_entity.insert(
                key.clone(),
                synthetic_embed("query_entity", &key, dims.k, seed),
            )?;
        }
    }
    Ok(spaces)
}

/// File names used by `SyntheticDataset::write_dir`.
pub mod files {
    pub const CORPUS: &str = "corpus.jsonl";
    pub const CATALOG: &str = "entities.jsonl";
    pub const QUERIES: &str = "queries.tsv";
    pub const QRELS: &str = "qrels.txt";
    pub const QUERY_ENTITIES: &str = "query_entities.tsv";
    pub const EMBEDDINGS: &str = "embeddings";
}

impl SyntheticDataset {
    /// Serialized files as `(relative path, contents)` in a fixed order.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = vec![
            (files::CORPUS.to_string(), self.corpus.to_jsonl()),
            (files::CATALOG.to_string(), catalog_to_jsonl(&self.catalog)),
            (files::QUERIES.to_string(), queries_to_tsv(&self.queries)),
            (files::QRELS.to_string(), self.qrels.to_trec()),
            (
                files::QUERY_ENTITIES.to_string(),
                query_entities_to_tsv(&self.query_entities),
            ),
        ];
        for (name, store) in EmbeddingSpaces::FILES.iter().zip(self.spaces.stores()) {
            out.push((format!("{}/{name}", files::EMBEDDINGS), store.to_text()));
        }
        out
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join(files::EMBEDDINGS)).map_err(|e| Error::io(dir, e))?;
        for (name, body) in self.files() {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashed_spaces_cover_every_stage() {
        let ds = generate(&SyntheticConfig::toy()).unwrap();
        let pools: BTreeMap<String, Vec<String>> = ds
            .queries
            .iter()
            .map(|q| {
                (
                    q.query_id.clone(),
                    ds.corpus.documents()[0]
                        .entity_ids()
                        .iter()
                        .map(|e| e.to_string())
                        .collect(),
                )
            })
            .collect();
        let dims = DimsConfig {
            k: 3,
            m: 4,
            n: 5,
            p: 6,
        };
        let sp = hashed_spaces(
            &ds.corpus,
            &ds.queries,
            &pools,
            dims,
            SegmenterConfig::default(),
            1,
        )
        .unwrap();
        assert_eq!(sp.dims(), dims);
        assert_eq!(sp.query.len(), ds.queries.len());
        assert!(sp.entity.len() >= ds.catalog.len());
        let doc = &ds.corpus.documents()[3];
        for p in segment_passages(doc, SegmenterConfig::default()) {
            assert!(sp.passage.contains(&passage_key(&p.doc_id, p.index)));
        }
        let again = hashed_spaces(
            &ds.corpus,
            &ds.queries,
            &pools,
            dims,
            SegmenterConfig::default(),
            1,
        )
        .unwrap();
        assert_eq!(again.query_entity.to_text(), sp.query_entity.to_text());
    }

    #[test]
    fn plant_is_consistent() {
        let ds = generate(&SyntheticConfig::toy()).unwrap();
        assert_eq!(ds.corpus.len(), 50);
        assert_eq!(ds.queries.len(), 10);
        for q in &ds.queries {
            let rel = &ds.relevant_entities[&q.query_id];
            for doc in ds.corpus.documents() {
                let hits = doc
                    .entity_ids()
                    .iter()
                    .filter(|e| rel.iter().any(|r| r == *e))
                    .count();
                let grade = ds.qrels.grade(&q.query_id, &doc.doc_id).unwrap_or(0);
                assert_eq!(grade as usize, hits.min(2), "{} {}", q.query_id, doc.doc_id);
            }
            assert_eq!(ds.qrels.relevant_count(&q.query_id), 4);
            for e in ds.corpus.documents()[0].entity_ids() {
                assert!(ds
                    .spaces
                    .query_entity
                    .contains(&query_entity_key(&q.query_id, e)));
            }
        }
        for doc in ds.corpus.documents() {
            for m in &doc.mentions {
                let span: String = doc
                    .text
                    .chars()
                    .skip(m.start)
                    .take(m.end - m.start)
                    .collect();
                assert_eq!(span, m.surface);
            }
            for p in segment_passages(doc, SegmenterConfig::default()) {
                assert!(ds
                    .spaces
                    .passage
                    .contains(&passage_key(&doc.doc_id, p.index)));
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&SyntheticConfig::toy()).unwrap().files();
        let b = generate(&SyntheticConfig::toy()).unwrap().files();
        assert_eq!(a, b);
        let c = generate(&SyntheticConfig {
            seed: 9,
            ..SyntheticConfig::toy()
        })
        .unwrap()
        .files();
        assert_ne!(a, c);
    }

    #[test]
    fn round_trips_through_files() {
        let ds = generate(&SyntheticConfig::toy()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.write_dir(dir.path()).unwrap();
        let corpus = CorpusStore::load(&dir.path().join(files::CORPUS)).unwrap();
        assert_eq!(corpus.documents(), ds.corpus.documents());
        let spaces = EmbeddingSpaces::load_dir(&dir.path().join(files::EMBEDDINGS)).unwrap();
        assert_eq!(spaces.passage.to_text(), ds.spaces.passage.to_text());
        let qrels = Qrels::load(&dir.path().join(files::QRELS)).unwrap();
        assert_eq!(qrels, ds.qrels);
    }

    #[test]
    fn rejects_impossible_plant() {
        let cfg = SyntheticConfig {
            docs: 10,
            ..SyntheticConfig::default()
        };
        assert!(generate(&cfg).is_err());
    }
}
