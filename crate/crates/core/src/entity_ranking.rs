//! Per-query ranking of the pooled candidate entities.
//!
//! Three rankers produce the same [`EntityRanking`]: the learned linear head
//! over query-conditioned entity encodings, BM25 over entity descriptions,
//! and an embedding-similarity ranker that mixes cosine similarity to the
//! query's linked entities with the BM25 score.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{EntityRecord, QueryEntity};
use crate::embeddings::{format_f64, parse_components, query_entity_key, EmbeddingStore};
use crate::error::{Error, Result};
use crate::linalg::{cosine, dot, softmax, Vector};
use crate::retrieval::{bm25_score, rank_order, Analyzer, Bm25Params, InvertedIndex, Ranking};
use crate::training::{adam_step, bce_logit_grads, bce_loss, AdamState, TrainConfig};

/// Linear relevance head: `score(e) = w1 . enc(e) + b1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityHead {
    pub w1: Vector,
    pub b1: f64,
}

impl EntityHead {
    pub fn zeros(k: usize) -> Self {
        EntityHead {
            w1: Vector::zeros(k),
            b1: 0.0,
        }
    }

    /// Uniform(-a, a) weights with `a = sqrt(6 / (k + 1))`, zero bias.
    pub fn init(k: usize, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (k as f64 + 1.0)).sqrt();
        EntityHead {
            w1: Vector((0..k).map(|_| rng.gen_range(-a..a)).collect()),
            b1: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.w1.dim()
    }

    pub fn score(&self, enc: &Vector) -> Result<f64> {
        score_entity(self, enc)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#entity-head k={}\nw1\t", self.dim());
        crate::embeddings::write_components(&mut out, self.w1.as_slice());
        out.push_str(&format!("\nb1\t{}\n", format_f64(self.b1)));
        out
    }

    pub fn parse(text: &str, origin: &std::path::Path) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let k: usize = header
            .strip_prefix("#entity-head k=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::parse(origin, 1, "expected `#entity-head k=<dim>`"))?;
        let mut w1 = None;
        let mut b1 = None;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let (name, values) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, lineno, "expected `name<TAB>values`"))?;
            let values = parse_components(values).map_err(|m| Error::parse(origin, lineno, m))?;
            match name {
                "w1" if values.len() == k => w1 = Some(Vector(values)),
                "b1" if values.len() == 1 => b1 = Some(values[0]),
                _ => {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        format!("unexpected block `{name}`"),
                    ))
                }
            }
        }
        match (w1, b1) {
            (Some(w1), Some(b1)) => Ok(EntityHead { w1, b1 }),
            _ => Err(Error::parse(origin, 0, "entity head needs w1 and b1")),
        }
    }
}

pub fn score_entity(head: &EntityHead, enc: &Vector) -> Result<f64> {
    if enc.dim() != head.dim() {
        return Err(Error::Shape(format!(
            "entity encoding has dim {}, head expects {}",
            enc.dim(),
            head.dim()
        )));
    }
    Ok(dot(head.w1.as_slice(), enc.as_slice()) + head.b1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEntity {
    pub entity_id: String,
    pub raw_score: f64,
    /// Softmax of the raw score over the pooled set.
    pub prob: f64,
    pub rank: usize,
}

/// Pooled entities of one query, sorted by raw score desc then id asc.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityRanking {
    pub query_id: String,
    entries: Vec<ScoredEntity>,
    lookup: HashMap<String, usize>,
}

impl EntityRanking {
    /// Normalizes raw scores with a softmax over all given entities and sorts.
    pub fn from_raw(query_id: impl Into<String>, raw: Vec<(String, f64)>) -> Result<Self> {
        let query_id = query_id.into();
        if raw.is_empty() {
            return Ok(EntityRanking {
                query_id,
                entries: Vec::new(),
                lookup: HashMap::new(),
            });
        }
        let probs = softmax(&raw.iter().map(|(_, s)| *s).collect::<Vec<_>>())?;
        let mut entries: Vec<ScoredEntity> = raw
            .into_iter()
            .zip(probs)
            .map(|((entity_id, raw_score), prob)| ScoredEntity {
                entity_id,
                raw_score,
                prob,
                rank: 0,
            })
            .collect();
        entries
            .sort_by(|a, b| rank_order((&a.entity_id, a.raw_score), (&b.entity_id, b.raw_score)));
        let mut lookup = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter_mut().enumerate() {
            e.rank = i + 1;
            if lookup.insert(e.entity_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(e.entity_id.clone()));
            }
        }
        Ok(EntityRanking {
            query_id,
            entries,
            lookup,
        })
    }

    pub fn entries(&self) -> &[ScoredEntity] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, entity_id: &str) -> Option<&ScoredEntity> {
        self.lookup.get(entity_id).map(|&i| &self.entries[i])
    }

    /// Keeps the top `k` entities and re-normalizes over the survivors.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        let raw = self
            .entries
            .iter()
            .take(k)
            .map(|e| (e.entity_id.clone(), e.raw_score))
            .collect();
        EntityRanking::from_raw(self.query_id.clone(), raw)
    }

    /// Same ranking with every raw score shifted by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        let raw = self
            .entries
            .iter()
            .map(|e| (e.entity_id.clone(), e.raw_score + c))
            .collect();
        EntityRanking::from_raw(self.query_id.clone(), raw)
    }

    /// TREC-run view with entity ids in the docid column and raw scores.
    pub fn to_ranking(&self) -> Ranking {
        Ranking {
            query_id: self.query_id.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| crate::retrieval::RankedItem {
                    id: e.entity_id.clone(),
                    score: e.raw_score,
                    rank: e.rank,
                })
                .collect(),
        }
    }

    pub fn from_ranking(r: &Ranking) -> Result<Self> {
        EntityRanking::from_raw(
            r.query_id.clone(),
            r.entries.iter().map(|e| (e.id.clone(), e.score)).collect(),
        )
    }
}

/// Scores every pooled entity with the learned head.
pub fn rank_entities(
    head: &EntityHead,
    query_id: &str,
    pooled: &[String],
    encodings: &EmbeddingStore,
) -> Result<EntityRanking> {
    let raw = pooled
        .iter()
        .map(|e| {
            let enc = encodings
                .get(&query_entity_key(query_id, e))
                .ok_or_else(|| Error::MissingEmbedding {
                    space: encodings.space().to_string(),
                    id: query_entity_key(query_id, e),
                })?;
            Ok((e.clone(), score_entity(head, enc)?))
        })
        .collect::<Result<Vec<_>>>()?;
    EntityRanking::from_raw(query_id, raw)
}

/// Mean BCE of the head over `(encoding, label)` pairs with its gradient.
pub fn entity_head_loss_and_grad(
    head: &EntityHead,
    examples: &[(&Vector, f64)],
) -> Result<(f64, EntityHead)> {
    let logits = examples
        .iter()
        .map(|(enc, _)| score_entity(head, enc))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<f64> = examples.iter().map(|(_, y)| *y).collect();
    let loss = bce_loss(&logits, &labels)?;
    let mut grad = EntityHead::zeros(head.dim());
    for (g, (enc, _)) in bce_logit_grads(&logits, &labels).into_iter().zip(examples) {
        grad.w1.axpy(g, enc)?;
        grad.b1 += g;
    }
    Ok((loss, grad))
}

/// Trains the head with Adam on balanced `(encoding, label)` examples.
pub fn train_entity_head(examples: &[(Vector, f64)], cfg: &TrainConfig) -> Result<EntityHead> {
    cfg.validate()?;
    let first = examples
        .first()
        .ok_or(Error::Empty("entity training examples"))?;
    let k = first.0.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut head = EntityHead::init(k, &mut rng);
    let mut w_state = AdamState::new(k);
    let mut b_state = AdamState::new(1);
    let adam = cfg.adam();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::new();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let items: Vec<(&Vector, f64)> = batch
                .iter()
                .map(|&i| (&examples[i].0, examples[i].1))
                .collect();
            let (loss, grad) = entity_head_loss_and_grad(&head, &items)?;
            epoch_loss += loss * batch.len() as f64;
            adam_step(
                head.w1.as_mut_slice(),
                grad.w1.as_slice(),
                &mut w_state,
                &adam,
            )?;
            let mut b = [head.b1];
            adam_step(&mut b, &[grad.b1], &mut b_state, &adam)?;
            head.b1 = b[0];
        }
        history.push(epoch_loss / examples.len() as f64);
        if cfg.should_stop(&history) {
            break;
        }
    }
    Ok(head)
}

/// Index over entity descriptions for BM25 entity ranking.
pub fn description_index<'a, I>(catalog: I, analyzer: Analyzer) -> Result<InvertedIndex>
where
    I: IntoIterator<Item = &'a EntityRecord>,
{
    InvertedIndex::build(
        catalog
            .into_iter()
            .map(|r| (r.entity_id.as_str(), r.description.as_str())),
        analyzer,
    )
}

/// BM25 of the query against each pooled entity's description. Entities
/// without a description score 0.
pub fn bm25_entity_rank(
    query_id: &str,
    query_text: &str,
    pooled: &[String],
    descriptions: &InvertedIndex,
    params: Bm25Params,
) -> Result<EntityRanking> {
    let terms = descriptions.analyzer().tokenize(query_text);
    let raw = pooled
        .iter()
        .map(|e| {
            let s = if descriptions.internal_id(e).is_some() {
                bm25_score(descriptions, &terms, e, params)?
            } else {
                0.0
            };
            Ok((e.clone(), s))
        })
        .collect::<Result<Vec<_>>>()?;
    EntityRanking::from_raw(query_id, raw)
}

/// `S_emb(E) = sum over linked query entities e of C(e) * cos(E, e)`.
/// Query entities without an embedding are ignored.
pub fn embedding_score(
    entity: &Vector,
    query_entities: &[QueryEntity],
    entity_store: &EmbeddingStore,
) -> Result<f64> {
    let mut total = 0.0;
    for qe in query_entities {
        if let Some(v) = entity_store.get(&qe.entity_id) {
            total += qe.confidence * cosine(entity, v)?;
        }
    }
    Ok(total)
}

/// Min-max to [0,1]; constant lists map to 0.5.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Interpolates min-max normalized BM25 and embedding scores:
/// `lambda * bm25 + (1 - lambda) * S_emb`.
pub fn geeer_entity_rank(
    query_id: &str,
    query_entities: &[QueryEntity],
    pooled: &[String],
    entity_store: &EmbeddingStore,
    bm25: &EntityRanking,
    lambda: f64,
) -> Result<EntityRanking> {
    if !query_entities
        .iter()
        .any(|qe| entity_store.contains(&qe.entity_id))
    {
        return Err(Error::NotApplicable(format!(
            "query {query_id} has no linked entity with an embedding"
        )));
    }
    let mut emb = Vec::with_capacity(pooled.len());
    let mut sparse = Vec::with_capacity(pooled.len());
    for e in pooled {
        let v = entity_store.require(e)?;
        emb.push(embedding_score(v, query_entities, entity_store)?);
        sparse.push(bm25.get(e).map_or(0.0, |s| s.raw_score));
    }
    let emb = min_max(&emb);
    let sparse = min_max(&sparse);
    let raw = pooled
        .iter()
        .zip(sparse.iter().zip(&emb))
        .map(|(e, (s, x))| (e.clone(), lambda * s + (1.0 - lambda) * x))
        .collect();
    EntityRanking::from_raw(query_id, raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::synthetic_embed;
    use proptest::prelude::*;
    use rand::Rng;

    fn ids(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn score_entity_examples() {
        let head = EntityHead {
            w1: Vector::zeros(3),
            b1: 0.7,
        };
        assert_eq!(
            score_entity(&head, &Vector(vec![5.0, -1.0, 2.0])).unwrap(),
            0.7
        );

        let head = EntityHead {
            w1: Vector(vec![1.0, 0.0, 0.0]),
            b1: 0.0,
        };
        assert_eq!(
            score_entity(&head, &Vector(vec![2.0, 9.0, 9.0])).unwrap(),
            2.0
        );

        let head = EntityHead {
            w1: Vector(vec![0.5, -1.0, 2.0, 0.25]),
            b1: -0.1,
        };
        let enc = Vector(vec![1.0, 2.0, -0.5, 4.0]);
        // 0.5 - 2 - 1 + 1 - 0.1
        assert!((score_entity(&head, &enc).unwrap() - (-1.6)).abs() < 1e-12);
        assert!(score_entity(&head, &Vector::zeros(3)).is_err());
    }

    fn store_with(query: &str, encs: &[(&str, Vec<f64>)]) -> EmbeddingStore {
        let mut s = EmbeddingStore::new("query_entity", encs[0].1.len());
        for (e, v) in encs {
            s.insert(query_entity_key(query, e), Vector(v.clone()))
                .unwrap();
        }
        s
    }

    #[test]
    fn singleton_and_tied_pools() {
        let head = EntityHead {
            w1: Vector(vec![1.0]),
            b1: 0.0,
        };
        let s = store_with("q", &[("a", vec![3.0]), ("b", vec![3.0])]);
        let r = rank_entities(&head, "q", &ids(&["a"]), &s).unwrap();
        assert_eq!(r.entries()[0].prob, 1.0);
        assert_eq!(r.entries()[0].rank, 1);

        let r = rank_entities(&head, "q", &ids(&["b", "a"]), &s).unwrap();
        assert_eq!(r.entries()[0].entity_id, "a");
        assert_eq!(r.entries()[0].prob, 0.5);
        assert_eq!(r.entries()[1].prob, 0.5);
    }

    #[test]
    fn three_entity_softmax() {
        let head = EntityHead {
            w1: Vector(vec![1.0]),
            b1: 0.0,
        };
        let s = store_with("q", &[("x", vec![1.0]), ("y", vec![2.0]), ("z", vec![3.0])]);
        let r = rank_entities(&head, "q", &ids(&["x", "y", "z"]), &s).unwrap();
        let expect = softmax(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.get("x").unwrap().rank, 3);
        assert_eq!(r.get("y").unwrap().rank, 2);
        assert_eq!(r.get("z").unwrap().rank, 1);
        assert!((r.get("x").unwrap().prob - expect[0]).abs() < 1e-15);
        assert!((r.get("z").unwrap().prob - expect[2]).abs() < 1e-15);
    }

    #[test]
    fn missing_encoding_names_pair() {
        let head = EntityHead::zeros(1);
        let s = store_with("q", &[("a", vec![1.0])]);
        let err = rank_entities(&head, "q", &ids(&["a", "ghost"]), &s).unwrap_err();
        assert!(err.to_string().contains("q::ghost"), "{err}");
    }

    #[test]
    fn head_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let head = EntityHead {
            w1: Vector((0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()),
            b1: 0.3,
        };
        let encs: Vec<Vector> = (0..6)
            .map(|i| synthetic_embed("t", &i.to_string(), 4, 0))
            .collect();
        let ex: Vec<(&Vector, f64)> = encs
            .iter()
            .enumerate()
            .map(|(i, v)| (v, (i % 2) as f64))
            .collect();
        let (_, grad) = entity_head_loss_and_grad(&head, &ex).unwrap();
        let h = 1e-6;
        let loss_at = |hd: &EntityHead| entity_head_loss_and_grad(hd, &ex).unwrap().0;
        for i in 0..4 {
            let mut plus = head.clone();
            plus.w1[i] += h;
            let mut minus = head.clone();
            minus.w1[i] -= h;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            assert!((fd - grad.w1[i]).abs() / fd.abs().max(1e-6) < 1e-4);
        }
        let mut plus = head.clone();
        plus.b1 += h;
        let mut minus = head.clone();
        minus.b1 -= h;
        let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
        assert!((fd - grad.b1).abs() / fd.abs().max(1e-6) < 1e-4);
    }

    fn separable(n: usize) -> Vec<(Vector, f64)> {
        (0..n)
            .map(|i| {
                let mut v = synthetic_embed("sep", &i.to_string(), 8, 1);
                let y = (i % 2) as f64;
                v[0] = if y == 1.0 {
                    1.0 + v[0].abs()
                } else {
                    -1.0 - v[0].abs()
                };
                (v, y)
            })
            .collect()
    }

    #[test]
    fn learns_separable_data_deterministically() {
        let data = separable(80);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            epochs: 200,
            batch_size: 20,
            seed: 3,
            ..TrainConfig::default()
        };
        let head = train_entity_head(&data, &cfg).unwrap();
        let refs: Vec<(&Vector, f64)> = data.iter().map(|(v, y)| (v, *y)).collect();
        let (loss, _) = entity_head_loss_and_grad(&head, &refs).unwrap();
        assert!(loss < 0.1, "loss {loss}");
        assert_eq!(head, train_entity_head(&data, &cfg).unwrap());
        assert!(train_entity_head(&[], &cfg).is_err());
    }

    #[test]
    fn head_checkpoint_round_trip() {
        let head = EntityHead {
            w1: Vector(vec![0.1, -1.0 / 3.0]),
            b1: 2.5e-7,
        };
        let back = EntityHead::parse(&head.to_text(), std::path::Path::new("h")).unwrap();
        assert_eq!(back, head);
    }

    #[test]
    fn bm25_entity_ranking() {
        let catalog = vec![
            EntityRecord {
                entity_id: "bear".into(),
                description: "black bear attacks hikers".into(),
            },
            EntityRecord {
                entity_id: "tea".into(),
                description: "green tea from china".into(),
            },
            EntityRecord {
                entity_id: "park".into(),
                description: "national park with bear country".into(),
            },
        ];
        let ix = description_index(&catalog, Analyzer::default()).unwrap();
        let pooled = ids(&["tea", "park", "bear", "nodesc"]);
        let r = bm25_entity_rank("q", "bear attacks", &pooled, &ix, Bm25Params::default()).unwrap();
        assert_eq!(r.get("tea").unwrap().raw_score, 0.0);
        assert_eq!(r.get("nodesc").unwrap().raw_score, 0.0);
        assert_eq!(r.entries()[0].entity_id, "bear");
        // brute force: score each description on its own
        let terms = vec!["bear".to_string(), "attacks".to_string()];
        let mut brute: Vec<(String, f64)> = catalog
            .iter()
            .map(|c| {
                (
                    c.entity_id.clone(),
                    bm25_score(&ix, &terms, &c.entity_id, Bm25Params::default()).unwrap(),
                )
            })
            .collect();
        brute.sort_by(|a, b| rank_order((&a.0, a.1), (&b.0, b.1)));
        let got: Vec<&str> = r
            .entries()
            .iter()
            .filter(|e| e.entity_id != "nodesc")
            .map(|e| e.entity_id.as_str())
            .collect();
        assert_eq!(got, brute.iter().map(|b| b.0.as_str()).collect::<Vec<_>>());
    }

    fn unit(dim: usize, i: usize) -> Vector {
        let mut v = Vector::zeros(dim);
        v[i] = 1.0;
        v
    }

    #[test]
    fn embedding_score_examples() {
        let mut store = EmbeddingStore::new("entity", 3);
        store.insert("q1", unit(3, 0)).unwrap();
        store.insert("q2", unit(3, 1)).unwrap();
        let single = [QueryEntity {
            entity_id: "q1".into(),
            confidence: 1.0,
        }];
        assert!((embedding_score(&unit(3, 0), &single, &store).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(embedding_score(&unit(3, 2), &single, &store).unwrap(), 0.0);
        let two = [
            QueryEntity {
                entity_id: "q1".into(),
                confidence: 0.5,
            },
            QueryEntity {
                entity_id: "q2".into(),
                confidence: 0.5,
            },
        ];
        assert!((embedding_score(&unit(3, 0), &two, &store).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn geeer_mixes_normalized_scores() {
        let mut store = EmbeddingStore::new("entity", 3);
        store.insert("qe", unit(3, 0)).unwrap();
        store.insert("a", unit(3, 0)).unwrap();
        store.insert("b", unit(3, 1)).unwrap();
        let qents = [QueryEntity {
            entity_id: "qe".into(),
            confidence: 1.0,
        }];
        let pooled = ids(&["a", "b"]);
        let bm25 =
            EntityRanking::from_raw("q", vec![("a".into(), 0.0), ("b".into(), 4.0)]).unwrap();
        let r = geeer_entity_rank("q", &qents, &pooled, &store, &bm25, 0.25).unwrap();
        assert!((r.get("a").unwrap().raw_score - 0.75).abs() < 1e-12);
        assert!((r.get("b").unwrap().raw_score - 0.25).abs() < 1e-12);
        assert!(geeer_entity_rank("q", &[], &pooled, &store, &bm25, 0.5).is_err());
        assert_eq!(min_max(&[2.0, 2.0]), vec![0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn ranking_invariants(scores in proptest::collection::vec(-20.0f64..20.0, 1..30), shift in -100.0f64..100.0, keep in 1usize..30) {
            let raw: Vec<(String, f64)> = scores.iter().enumerate().map(|(i, s)| (format!("e{i:02}"), *s)).collect();
            let r = EntityRanking::from_raw("q", raw).unwrap();
            let total: f64 = r.entries().iter().map(|e| e.prob).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            for w in r.entries().windows(2) {
                prop_assert!(w[0].raw_score >= w[1].raw_score);
                prop_assert!(w[0].prob >= w[1].prob);
            }
            let s = r.shifted(shift).unwrap();
            for (a, b) in r.entries().iter().zip(s.entries()) {
                prop_assert_eq!(&a.entity_id, &b.entity_id);
                prop_assert!((a.prob - b.prob).abs() < 1e-9);
            }
            let t = r.truncated(keep).unwrap();
            let survivors: Vec<&str> = r.entries().iter().take(keep).map(|e| e.entity_id.as_str()).collect();
            prop_assert_eq!(t.entries().iter().map(|e| e.entity_id.as_str()).collect::<Vec<_>>(), survivors);
        }
    }
}
