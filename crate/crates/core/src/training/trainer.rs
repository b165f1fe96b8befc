use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamState};
use super::examples::TrainingExample;
use super::folds::FoldPlan;
use super::loss::{bce_logit_grads, bce_loss};
use super::TrainConfig;
use crate::corpus::{CorpusStore, SegmenterConfig};
use crate::embeddings::{query_entity_key, DimsConfig, EmbeddingSpaces, EmbeddingStore};
use crate::entity_ranking::{score_entity, EntityHead, EntityRanking};
use crate::error::{Error, Result};
use crate::linalg::{softmax, Vector};
use crate::model::{DocFeatures, DreqModel, Gradients, ModelConfig, WeightingMode};
use crate::retrieval::Ranking;

/// A document example with its precomputed features.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub query_id: String,
    pub features: DocFeatures,
    pub label: f64,
}

/// Mean BCE over the batch and its gradients. Entity-embedding gradients
/// are collected when `track_entities` is set.
pub fn batch_loss_and_gradients(
    model: &DreqModel,
    batch: &[&LabeledFeatures],
    queries: &EmbeddingStore,
    entities: &EmbeddingStore,
    track_entities: bool,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let mut forwards = Vec::with_capacity(batch.len());
    for item in batch {
        let q = queries.require(&item.query_id)?;
        forwards.push((q, model.forward(q, &item.features, entities)?));
    }
    let logits: Vec<f64> = forwards.iter().map(|(_, f)| f.logit).collect();
    let labels: Vec<f64> = batch.iter().map(|i| i.label).collect();
    let loss = bce_loss(&logits, &labels)?;
    let mut grads = Gradients::zeros(model, track_entities);
    for ((item, (q, fwd)), g) in batch
        .iter()
        .zip(&forwards)
        .zip(bce_logit_grads(&logits, &labels))
    {
        model.backward(q, &item.features, fwd, g, &mut grads)?;
    }
    Ok((loss, grads))
}

/// A document example for the joint objective, where the entity weights are
/// recomputed from the entity head on every pass.
#[derive(Debug, Clone, PartialEq)]
pub struct JointExample {
    pub query_id: String,
    pub text: Vector,
    /// Distinct entities of the document.
    pub entities: Vec<String>,
    pub label: f64,
}

/// Loss and gradients of the document BCE when probability-mode weights
/// are produced by `head`, so the gradient also reaches `W1` and `b1`:
/// `dL/ds_e = w_e (emb(e) - V_e) . dL/dV_e`.
pub fn joint_loss_and_gradients(
    model: &DreqModel,
    head: &EntityHead,
    batch: &[JointExample],
    spaces: &EmbeddingSpaces,
) -> Result<(f64, Gradients, EntityHead)> {
    if model.config.mode != WeightingMode::Probability || !model.config.use_entities {
        return Err(Error::NotApplicable(
            "joint gradients need probability weighting with entities enabled".into(),
        ));
    }
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let mut passes = Vec::with_capacity(batch.len());
    for ex in batch {
        let encs = ex
            .entities
            .iter()
            .map(|e| {
                spaces
                    .query_entity
                    .require(&query_entity_key(&ex.query_id, e))
            })
            .collect::<Result<Vec<_>>>()?;
        let scores = encs
            .iter()
            .map(|enc| score_entity(head, enc))
            .collect::<Result<Vec<_>>>()?;
        let weights = if scores.is_empty() {
            Vec::new()
        } else {
            softmax(&scores)?
        };
        let features = DocFeatures {
            doc_id: String::new(),
            text: ex.text.clone(),
            weights: ex.entities.iter().cloned().zip(weights).collect(),
        };
        let q = spaces.query.require(&ex.query_id)?;
        let fwd = model.forward(q, &features, &spaces.entity)?;
        passes.push((q, encs, features, fwd));
    }
    let logits: Vec<f64> = passes.iter().map(|p| p.3.logit).collect();
    let labels: Vec<f64> = batch.iter().map(|e| e.label).collect();
    let loss = bce_loss(&logits, &labels)?;
    let mut grads = Gradients::zeros(model, true);
    let mut head_grad = EntityHead::zeros(head.dim());
    for ((q, encs, features, fwd), g) in passes.iter().zip(bce_logit_grads(&logits, &labels)) {
        let g_v_e = model.backward(q, features, fwd, g, &mut grads)?;
        for ((id, w), enc) in features.weights.iter().zip(encs) {
            let centered = spaces.entity.require(id)?.sub(&fwd.v_e)?;
            let g_s = w * centered.dot(&g_v_e)?;
            head_grad.w1.axpy(g_s, enc)?;
            head_grad.b1 += g_s;
        }
    }
    Ok((loss, grads, head_grad))
}

/// Adam moments for every trainable tensor of the scorer.
struct Optimizer {
    w2: AdamState,
    b2: AdamState,
    w3: AdamState,
    b3: AdamState,
    entities: HashMap<String, AdamState>,
}

impl Optimizer {
    fn new(model: &DreqModel) -> Self {
        Optimizer {
            w2: AdamState::new(model.w2.as_slice().len()),
            b2: AdamState::new(model.b2.dim()),
            w3: AdamState::new(model.w3.dim()),
            b3: AdamState::new(1),
            entities: HashMap::new(),
        }
    }

    /// Entity rows are updated lazily: only rows with a gradient in the
    /// batch take a step.
    fn step(
        &mut self,
        model: &mut DreqModel,
        entities: &mut EmbeddingStore,
        grads: &Gradients,
        cfg: &TrainConfig,
    ) -> Result<()> {
        let adam = cfg.adam();
        adam_step(
            model.w2.as_mut_slice(),
            grads.w2.as_slice(),
            &mut self.w2,
            &adam,
        )?;
        adam_step(
            model.b2.as_mut_slice(),
            grads.b2.as_slice(),
            &mut self.b2,
            &adam,
        )?;
        adam_step(
            model.w3.as_mut_slice(),
            grads.w3.as_slice(),
            &mut self.w3,
            &adam,
        )?;
        adam_step(
            std::slice::from_mut(&mut model.b3),
            &[grads.b3],
            &mut self.b3,
            &adam,
        )?;
        if let Some(table) = &grads.entities {
            for (id, g) in table {
                let row = entities
                    .get_mut(id)
                    .ok_or_else(|| Error::MissingEmbedding {
                        space: "entity".into(),
                        id: id.clone(),
                    })?;
                let state = self
                    .entities
                    .entry(id.clone())
                    .or_insert_with(|| AdamState::new(g.dim()));
                adam_step(row.as_mut_slice(), g.as_slice(), state, &adam)?;
            }
        }
        Ok(())
    }
}

/// Result of training on one set of examples.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: DreqModel,
    /// Fine-tuned entity table, when fine-tuning was enabled.
    pub entities: Option<EmbeddingStore>,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains a freshly initialized scorer on `items`.
pub fn train_model(
    dims: DimsConfig,
    config: ModelConfig,
    items: &[LabeledFeatures],
    spaces: &EmbeddingSpaces,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainedModel> {
    cfg.validate()?;
    if items.is_empty() {
        return Err(Error::Empty("training examples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = ModelConfig {
        finetune_entity_embeddings: cfg.finetune_entity_embeddings,
        ..config
    };
    let mut model = DreqModel::init(dims, config, &mut rng)?;
    let finetune = cfg.finetune_entity_embeddings && config.use_entities;
    let mut entities = spaces.entity.clone();
    let mut optimizer = Optimizer::new(&model);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut epoch_losses = Vec::new();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&LabeledFeatures> = chunk.iter().map(|&i| &items[i]).collect();
            let (loss, grads) =
                batch_loss_and_gradients(&model, &batch, &spaces.query, &entities, finetune)?;
            total += loss * batch.len() as f64;
            optimizer.step(&mut model, &mut entities, &grads, cfg)?;
        }
        epoch_losses.push(total / items.len() as f64);
        if cfg.should_stop(&epoch_losses) {
            break;
        }
    }
    Ok(TrainedModel {
        model,
        entities: finetune.then_some(entities),
        epoch_losses,
    })
}

/// Read-only inputs shared by every fold.
#[derive(Debug, Clone, Copy)]
pub struct TrainingInputs<'a> {
    pub corpus: &'a CorpusStore,
    pub spaces: &'a EmbeddingSpaces,
    pub entity_rankings: &'a BTreeMap<String, EntityRanking>,
    pub candidates: &'a BTreeMap<String, Ranking>,
    pub segmenter: SegmenterConfig,
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub trained: TrainedModel,
    /// Re-ranked candidates of the fold's test queries.
    pub runs: Vec<Ranking>,
}

/// Seed of fold `fold` derived from the run seed.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Builds features for every pair that training or re-ranking will touch,
/// failing before any training if an embedding or ranking is missing.
pub fn build_feature_cache(
    config: &ModelConfig,
    pairs: impl IntoIterator<Item = (String, String)>,
    inputs: &TrainingInputs<'_>,
) -> Result<BTreeMap<(String, String), DocFeatures>> {
    let mut cache = BTreeMap::new();
    for (qid, doc_id) in pairs {
        if cache.contains_key(&(qid.clone(), doc_id.clone())) {
            continue;
        }
        inputs.spaces.query.require(&qid)?;
        let ranking = inputs
            .entity_rankings
            .get(&qid)
            .ok_or_else(|| Error::InvalidArgument(format!("no entity ranking for query {qid}")))?;
        let doc = inputs.corpus.require(&doc_id)?;
        let features = DocFeatures::build(
            doc,
            ranking,
            config,
            &inputs.spaces.passage,
            inputs.segmenter,
        )?;
        if config.use_entities {
            for (e, _) in &features.weights {
                inputs.spaces.entity.require(e)?;
            }
        }
        cache.insert((qid, doc_id), features);
    }
    Ok(cache)
}

/// Cross-validated training: per fold, trains on the training queries'
/// examples and re-ranks the test queries' candidates.
pub fn train_dreq(
    config: ModelConfig,
    examples: &[TrainingExample],
    folds: &FoldPlan,
    inputs: &TrainingInputs<'_>,
    cfg: &TrainConfig,
) -> Result<Vec<FoldResult>> {
    cfg.validate()?;
    folds.validate()?;
    let dims = inputs.spaces.dims();
    let example_pairs = examples
        .iter()
        .map(|e| (e.query_id.clone(), e.item_id.clone()));
    let candidate_pairs = folds.folds.iter().flat_map(|f| &f.test).flat_map(|q| {
        inputs
            .candidates
            .get(q)
            .into_iter()
            .flat_map(move |r| r.ids().map(move |d| (q.clone(), d.to_string())))
    });
    let cache = build_feature_cache(&config, example_pairs.chain(candidate_pairs), inputs)?;

    let mut results = Vec::with_capacity(folds.folds.len());
    for (i, fold) in folds.folds.iter().enumerate() {
        let train_set: std::collections::HashSet<&str> =
            fold.train.iter().map(String::as_str).collect();
        let items: Vec<LabeledFeatures> = examples
            .iter()
            .filter(|e| train_set.contains(e.query_id.as_str()))
            .map(|e| LabeledFeatures {
                query_id: e.query_id.clone(),
                features: cache[&(e.query_id.clone(), e.item_id.clone())].clone(),
                label: f64::from(e.label),
            })
            .collect();
        let trained = train_model(
            dims,
            config,
            &items,
            inputs.spaces,
            cfg,
            fold_seed(cfg.seed, i),
        )?;
        log::info!(
            "fold {i}: {} examples, {} epochs, final loss {:.6}",
            items.len(),
            trained.epoch_losses.len(),
            trained.epoch_losses.last().copied().unwrap_or(f64::NAN)
        );
        let entities = trained.entities.as_ref().unwrap_or(&inputs.spaces.entity);
        let mut runs = Vec::new();
        for qid in &fold.test {
            let Some(cands) = inputs.candidates.get(qid) else {
                continue;
            };
            let q = inputs.spaces.query.require(qid)?;
            let scored = cands
                .ids()
                .map(|d| {
                    let f = &cache[&(qid.clone(), d.to_string())];
                    Ok((
                        d.to_string(),
                        trained.model.score_features(q, f, entities)?.logit,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            runs.push(Ranking::from_scores(qid.clone(), scored));
        }
        results.push(FoldResult {
            fold: i,
            trained,
            runs,
        });
    }
    Ok(results)
}

/// Training log as TSV: `fold<TAB>epoch<TAB>loss`.
pub fn format_training_log(results: &[FoldResult]) -> String {
    let mut out = String::from("fold\tepoch\tloss\n");
    for r in results {
        for (e, loss) in r.trained.epoch_losses.iter().enumerate() {
            out.push_str(&format!("{}\t{}\t{:.9}\n", r.fold, e + 1, loss));
        }
    }
    out
}
