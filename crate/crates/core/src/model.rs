//! Query-specific document scoring.
//!
//! For a query `Q` and candidate document `d`:
//!
//! ```text
//! V_e  = sum_{e in d} w_e * emb(e)                 entity-centric, dim m
//! V_t  = mean of passage embeddings                text-centric,   dim n
//! d^Q  = W2 [V_t; V_e] + b2                        hybrid,         dim p
//! V    = [Q; d^Q; Q + d^Q; Q - d^Q; Q * d^Q]                       dim 5p
//! S    = W3 . V + b3
//! ```
//!
//! The entity weights `w_e` come from the query's [`EntityRanking`]: the
//! entity relevance probabilities renormalized within the document, a
//! constant 1, or the reciprocal of the entity's rank.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    segment_passages, CorpusStore, Document, Passage, QueryEntity, SegmenterConfig,
};
use crate::embeddings::{
    format_f64, parse_components, passage_key, DimsConfig, EmbeddingSpaces, EmbeddingStore,
};
use crate::entity_ranking::EntityRanking;
use crate::error::{Error, Result};
use crate::linalg::{cosine, linear, sigmoid, softmax, Matrix, Vector};
use crate::retrieval::Ranking;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    /// Entity relevance probability, renormalized over the document.
    #[default]
    Probability,
    /// Every entity weighs 1.
    Uniform,
    /// `1 / rank(e)` in the query's entity ranking.
    ReciprocalRank,
}

impl fmt::Display for WeightingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightingMode::Probability => "probability",
            WeightingMode::Uniform => "uniform",
            WeightingMode::ReciprocalRank => "reciprocal_rank",
        })
    }
}

impl FromStr for WeightingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probability" | "prob" => Ok(WeightingMode::Probability),
            "uniform" => Ok(WeightingMode::Uniform),
            "reciprocal_rank" | "rr" => Ok(WeightingMode::ReciprocalRank),
            other => Err(Error::InvalidArgument(format!(
                "unknown weighting mode `{other}`"
            ))),
        }
    }
}

/// Non-trainable switches of the scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: WeightingMode,
    /// When false the entity-centric embedding is replaced by zeros.
    pub use_entities: bool,
    pub finetune_entity_embeddings: bool,
    /// Weight each entity by its mention count as well.
    pub count_multiplicity: bool,
    /// Only the top-k ranked entities contribute, if set.
    pub top_k_entities: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            mode: WeightingMode::Probability,
            use_entities: true,
            finetune_entity_embeddings: false,
            count_multiplicity: false,
            top_k_entities: None,
        }
    }
}

/// Weights `w_e` of the distinct entities of `doc`, in first-mention order.
pub fn entity_weights(
    doc: &Document,
    ranking: &EntityRanking,
    mode: WeightingMode,
) -> Result<Vec<(String, f64)>> {
    entity_weights_with(
        doc,
        ranking,
        &ModelConfig {
            mode,
            ..ModelConfig::default()
        },
    )
}

pub fn entity_weights_with(
    doc: &Document,
    ranking: &EntityRanking,
    config: &ModelConfig,
) -> Result<Vec<(String, f64)>> {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for m in &doc.mentions {
        match counts.iter_mut().find(|(id, _)| *id == m.entity_id) {
            Some(slot) => slot.1 += 1,
            None => counts.push((&m.entity_id, 1)),
        }
    }
    let mut kept = Vec::with_capacity(counts.len());
    for (id, count) in counts {
        let scored = ranking.get(id).ok_or_else(|| Error::MissingEntity {
            query_id: ranking.query_id.clone(),
            entity_id: id.to_string(),
        })?;
        if config.top_k_entities.is_some_and(|k| scored.rank > k) {
            continue;
        }
        let multiplicity = if config.count_multiplicity {
            count as f64
        } else {
            1.0
        };
        kept.push((id, scored, multiplicity));
    }
    if kept.is_empty() {
        return Ok(Vec::new());
    }
    let weights: Vec<f64> = match config.mode {
        WeightingMode::Probability => {
            // prob_e / sum_{e' in d} prob_e' is a softmax over the document's
            // raw scores, which avoids dividing underflowed probabilities.
            let logits: Vec<f64> = kept.iter().map(|(_, s, c)| s.raw_score + c.ln()).collect();
            softmax(&logits)?
        }
        WeightingMode::Uniform => kept.iter().map(|(_, _, c)| *c).collect(),
        WeightingMode::ReciprocalRank => kept.iter().map(|(_, s, c)| c / s.rank as f64).collect(),
    };
    Ok(kept
        .into_iter()
        .zip(weights)
        .map(|((id, _, _), w)| (id.to_string(), w))
        .collect())
}

/// `sum_e w_e * emb(e)`; the zero vector when there are no weights.
pub fn entity_centric_embedding(
    weights: &[(String, f64)],
    entities: &EmbeddingStore,
) -> Result<Vector> {
    let mut v = Vector::zeros(entities.dim());
    for (id, w) in weights {
        v.axpy(*w, entities.require(id)?)?;
    }
    Ok(v)
}

/// Mean of the passage embeddings.
pub fn text_centric_embedding(passages: &[Passage], store: &EmbeddingStore) -> Result<Vector> {
    if passages.is_empty() {
        return Err(Error::Empty("passages for text-centric embedding"));
    }
    let mut v = Vector::zeros(store.dim());
    for p in passages {
        v.axpy(1.0, store.require(&passage_key(&p.doc_id, p.index))?)?;
    }
    Ok(v.scale(1.0 / passages.len() as f64))
}

/// `(Q + d, Q - d, Q * d)`.
pub fn interaction_vectors(q: &Vector, dq: &Vector) -> Result<(Vector, Vector, Vector)> {
    Ok((q.add(dq)?, q.sub(dq)?, q.hadamard(dq)?))
}

/// Everything about one (query, document) pair except the trainable
/// parameters and the entity embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct DocFeatures {
    pub doc_id: String,
    pub text: Vector,
    pub weights: Vec<(String, f64)>,
}

impl DocFeatures {
    pub fn build(
        doc: &Document,
        ranking: &EntityRanking,
        config: &ModelConfig,
        passages: &EmbeddingStore,
        segmenter: SegmenterConfig,
    ) -> Result<Self> {
        let text = text_centric_embedding(&segment_passages(doc, segmenter), passages).map_err(
            |e| match e {
                Error::Empty(_) => Error::InvalidDocument {
                    doc_id: doc.doc_id.clone(),
                    message: "no passages".into(),
                },
                other => other,
            },
        )?;
        Ok(DocFeatures {
            doc_id: doc.doc_id.clone(),
            text,
            weights: entity_weights_with(doc, ranking, config)?,
        })
    }
}

/// Intermediate values of one forward pass, kept for back-propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub v_e: Vector,
    /// `[V_t; V_e]`
    pub fused_input: Vector,
    pub d_q: Vector,
    /// `[Q; d^Q; Q + d^Q; Q - d^Q; Q * d^Q]`
    pub interactions: Vector,
    pub logit: f64,
}

/// Gradients of a scalar loss with respect to the model parameters, and to
/// entity embeddings when tracked.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w2: Matrix,
    pub b2: Vector,
    pub w3: Vector,
    pub b3: f64,
    pub entities: Option<BTreeMap<String, Vector>>,
}

impl Gradients {
    pub fn zeros(model: &DreqModel, track_entities: bool) -> Self {
        Gradients {
            w2: Matrix::zeros(model.w2.rows(), model.w2.cols()),
            b2: Vector::zeros(model.b2.dim()),
            w3: Vector::zeros(model.w3.dim()),
            b3: 0.0,
            entities: track_entities.then(BTreeMap::new),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub weights: Vec<(String, f64)>,
    pub no_entities: bool,
    pub v_e_norm: f64,
    pub v_t_norm: f64,
    pub d_q_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDocument {
    pub doc_id: String,
    pub logit: f64,
    pub prob: f64,
    pub diagnostics: Diagnostics,
}

/// Trainable scorer parameters plus its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DreqModel {
    pub dims: DimsConfig,
    pub config: ModelConfig,
    /// `p x (n + m)`, text block first.
    pub w2: Matrix,
    pub b2: Vector,
    /// `5p`
    pub w3: Vector,
    pub b3: f64,
}

fn xavier(rng: &mut impl Rng, fan_in: usize, fan_out: usize, count: usize) -> Vec<f64> {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..count).map(|_| rng.gen_range(-a..a)).collect()
}

impl DreqModel {
    pub fn zeros(dims: DimsConfig, config: ModelConfig) -> Self {
        DreqModel {
            dims,
            config,
            w2: Matrix::zeros(dims.p, dims.n + dims.m),
            b2: Vector::zeros(dims.p),
            w3: Vector::zeros(5 * dims.p),
            b3: 0.0,
        }
    }

    /// Uniform(-a, a) weights with `a = sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(dims: DimsConfig, config: ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        dims.validate()?;
        let (p, cols) = (dims.p, dims.n + dims.m);
        Ok(DreqModel {
            dims,
            config,
            w2: Matrix::from_rows(p, cols, xavier(rng, cols, p, p * cols))?,
            b2: Vector::zeros(p),
            w3: Vector(xavier(rng, 5 * p, 1, 5 * p)),
            b3: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        d.validate()?;
        if self.w2.rows() != d.p
            || self.w2.cols() != d.n + d.m
            || self.b2.dim() != d.p
            || self.w3.dim() != 5 * d.p
        {
            return Err(Error::Shape(format!("parameters do not match dims {d:?}")));
        }
        if !(self.w2.is_finite()
            && self.b2.is_finite()
            && self.w3.is_finite()
            && self.b3.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite model parameters".into()));
        }
        Ok(())
    }

    /// `W2 [V_t; V_e] + b2`.
    pub fn hybrid_embedding(&self, v_t: &Vector, v_e: &Vector) -> Result<Vector> {
        if v_t.dim() != self.dims.n || v_e.dim() != self.dims.m {
            return Err(Error::Shape(format!(
                "hybrid input dims ({}, {}) != (n={}, m={})",
                v_t.dim(),
                v_e.dim(),
                self.dims.n,
                self.dims.m
            )));
        }
        linear(&self.w2, &Vector::concat(&[v_t, v_e]), &self.b2)
    }

    pub fn forward(
        &self,
        query: &Vector,
        doc: &DocFeatures,
        entities: &EmbeddingStore,
    ) -> Result<Forward> {
        if query.dim() != self.dims.p {
            return Err(Error::Shape(format!(
                "query embedding has dim {}, model expects p={}",
                query.dim(),
                self.dims.p
            )));
        }
        let v_e = if self.config.use_entities {
            entity_centric_embedding(&doc.weights, entities)?
        } else {
            Vector::zeros(self.dims.m)
        };
        let fused_input = Vector::concat(&[&doc.text, &v_e]);
        let d_q = self.hybrid_embedding(&doc.text, &v_e)?;
        let (add, sub, mul) = interaction_vectors(query, &d_q)?;
        let interactions = Vector::concat(&[query, &d_q, &add, &sub, &mul]);
        let logit = self.w3.dot(&interactions)? + self.b3;
        Ok(Forward {
            v_e,
            fused_input,
            d_q,
            interactions,
            logit,
        })
    }

    /// Accumulates `g_logit * d(logit)/d(params)` into `grads` and returns
    /// `d(loss)/d(V_e)`.
    pub fn backward(
        &self,
        query: &Vector,
        doc: &DocFeatures,
        fwd: &Forward,
        g_logit: f64,
        grads: &mut Gradients,
    ) -> Result<Vector> {
        let p = self.dims.p;
        grads.w3.axpy(g_logit, &fwd.interactions)?;
        grads.b3 += g_logit;

        // d logit / d d^Q through the d^Q, add, sub and mul blocks.
        let w3 = self.w3.as_slice();
        let g_dq = Vector(
            (0..p)
                .map(|i| {
                    g_logit * (w3[p + i] + w3[2 * p + i] - w3[3 * p + i] + w3[4 * p + i] * query[i])
                })
                .collect(),
        );
        for r in 0..p {
            let g = g_dq[r];
            if g == 0.0 {
                continue;
            }
            let row_start = r * fwd.fused_input.dim();
            let row = &mut grads.w2.as_mut_slice()[row_start..row_start + fwd.fused_input.dim()];
            for (gw, x) in row.iter_mut().zip(fwd.fused_input.iter()) {
                *gw += g * x;
            }
        }
        grads.b2.axpy(1.0, &g_dq)?;

        let g_x = self.w2.transpose_mul(&g_dq)?;
        let g_v_e = Vector::from_slice(&g_x.as_slice()[self.dims.n..]);
        if self.config.use_entities {
            if let Some(table) = grads.entities.as_mut() {
                for (id, w) in &doc.weights {
                    table
                        .entry(id.clone())
                        .or_insert_with(|| Vector::zeros(self.dims.m))
                        .axpy(*w, &g_v_e)?;
                }
            }
        }
        Ok(g_v_e)
    }

    pub fn score_features(
        &self,
        query: &Vector,
        doc: &DocFeatures,
        entities: &EmbeddingStore,
    ) -> Result<ScoredDocument> {
        let fwd = self.forward(query, doc, entities)?;
        Ok(ScoredDocument {
            doc_id: doc.doc_id.clone(),
            logit: fwd.logit,
            prob: sigmoid(fwd.logit),
            diagnostics: Diagnostics {
                weights: doc.weights.clone(),
                no_entities: doc.weights.is_empty(),
                v_e_norm: fwd.v_e.norm(),
                v_t_norm: doc.text.norm(),
                d_q_norm: fwd.d_q.norm(),
            },
        })
    }

    pub fn to_text(&self) -> String {
        let d = self.dims;
        let c = self.config;
        let mut out = format!(
            "#dreq-model k={} m={} n={} p={} mode={} use_entities={} finetune_entity_embeddings={} count_multiplicity={} top_k_entities={}\n",
            d.k,
            d.m,
            d.n,
            d.p,
            c.mode,
            c.use_entities,
            c.finetune_entity_embeddings,
            c.count_multiplicity,
            c.top_k_entities.map_or("none".to_string(), |k| k.to_string()),
        );
        for r in 0..self.w2.rows() {
            out.push_str(&format!("w2.{r}\t"));
            crate::embeddings::write_components(&mut out, self.w2.row(r));
            out.push('\n');
        }
        out.push_str("b2\t");
        crate::embeddings::write_components(&mut out, self.b2.as_slice());
        out.push_str("\nw3\t");
        crate::embeddings::write_components(&mut out, self.w3.as_slice());
        out.push_str(&format!("\nb3\t{}\n", format_f64(self.b3)));
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|h| h.strip_prefix("#dreq-model "))
            .ok_or_else(|| Error::parse(origin, 1, "expected `#dreq-model` header"))?;
        let mut fields = BTreeMap::new();
        for f in header.split_whitespace() {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, 1, format!("bad header field `{f}`")))?;
            fields.insert(k, v);
        }
        let get = |key: &str| {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| Error::parse(origin, 1, format!("header lacks `{key}`")))
        };
        let num = |key: &str| -> Result<usize> {
            get(key)?
                .parse()
                .map_err(|_| Error::parse(origin, 1, format!("bad `{key}`")))
        };
        let flag = |key: &str| -> Result<bool> {
            get(key)?
                .parse()
                .map_err(|_| Error::parse(origin, 1, format!("bad `{key}`")))
        };
        let dims = DimsConfig {
            k: num("k")?,
            m: num("m")?,
            n: num("n")?,
            p: num("p")?,
        };
        let top_k = match get("top_k_entities")? {
            "none" => None,
            v => Some(
                v.parse()
                    .map_err(|_| Error::parse(origin, 1, "bad `top_k_entities`"))?,
            ),
        };
        let config = ModelConfig {
            mode: get("mode")?.parse()?,
            use_entities: flag("use_entities")?,
            finetune_entity_embeddings: flag("finetune_entity_embeddings")?,
            count_multiplicity: flag("count_multiplicity")?,
            top_k_entities: top_k,
        };
        let mut model = DreqModel::zeros(dims, config);
        let mut seen = 0usize;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let (name, values) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, lineno, "expected `name<TAB>values`"))?;
            let values = parse_components(values).map_err(|m| Error::parse(origin, lineno, m))?;
            let target: &mut [f64] = if let Some(r) = name.strip_prefix("w2.") {
                let r: usize = r
                    .parse()
                    .ok()
                    .filter(|&r| r < dims.p)
                    .ok_or_else(|| Error::parse(origin, lineno, format!("bad row `{name}`")))?;
                let cols = model.w2.cols();
                &mut model.w2.as_mut_slice()[r * cols..(r + 1) * cols]
            } else {
                match name {
                    "b2" => model.b2.as_mut_slice(),
                    "w3" => model.w3.as_mut_slice(),
                    "b3" => std::slice::from_mut(&mut model.b3),
                    _ => {
                        return Err(Error::parse(
                            origin,
                            lineno,
                            format!("unknown block `{name}`"),
                        ))
                    }
                }
            };
            if target.len() != values.len() {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!(
                        "block `{name}` needs {} values, got {}",
                        target.len(),
                        values.len()
                    ),
                ));
            }
            target.copy_from_slice(&values);
            seen += 1;
        }
        if seen != dims.p + 3 {
            return Err(Error::parse(
                origin,
                0,
                format!("expected {} blocks, found {seen}", dims.p + 3),
            ));
        }
        model.validate()?;
        Ok(model)
    }
}

/// Scores one candidate document end to end.
pub fn score_document(
    model: &DreqModel,
    query: &Vector,
    doc: &Document,
    ranking: &EntityRanking,
    spaces: &EmbeddingSpaces,
    segmenter: SegmenterConfig,
) -> Result<ScoredDocument> {
    let features = DocFeatures::build(doc, ranking, &model.config, &spaces.passage, segmenter)?;
    model.score_features(query, &features, &spaces.entity)
}

/// Re-orders candidates by logit, ties by doc id.
pub fn rerank(
    model: &DreqModel,
    candidates: &Ranking,
    corpus: &CorpusStore,
    ranking: &EntityRanking,
    spaces: &EmbeddingSpaces,
    segmenter: SegmenterConfig,
) -> Result<Ranking> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate ranking"));
    }
    let query = spaces.query.require(&candidates.query_id)?;
    let scored = candidates
        .ids()
        .map(|id| {
            let doc = corpus.require(id)?;
            let s = score_document(model, query, doc, ranking, spaces, segmenter)?;
            Ok((id.to_string(), s.logit))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ranking::from_scores(candidates.query_id.clone(), scored))
}

/// Unsupervised baseline: a document scores the highest cosine between any
/// linked query entity and any of its own entities. Documents without
/// embedded entities score negative infinity.
pub fn maxsimcos_rerank(
    query_entities: &[QueryEntity],
    candidates: &Ranking,
    corpus: &CorpusStore,
    entities: &EmbeddingStore,
) -> Result<Ranking> {
    let query_vecs: Vec<&Vector> = query_entities
        .iter()
        .filter_map(|qe| entities.get(&qe.entity_id))
        .collect();
    if query_vecs.is_empty() {
        return Err(Error::NotApplicable(format!(
            "query {} has no linked entity with an embedding",
            candidates.query_id
        )));
    }
    let scored = candidates
        .ids()
        .map(|id| {
            let doc = corpus.require(id)?;
            let mut best = f64::NEG_INFINITY;
            for e in doc.entity_ids() {
                if let Some(v) = entities.get(e) {
                    for q in &query_vecs {
                        best = best.max(cosine(q, v)?);
                    }
                }
            }
            Ok((id.to_string(), best))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ranking::from_scores(candidates.query_id.clone(), scored))
}
