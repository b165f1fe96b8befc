//! End-to-end cross-validated experiment: candidate retrieval, fold-aware
//! entity ranking, scorer training per weighting variant, evaluation.

use std::collections::BTreeMap;
use std::fmt;

use crate::corpus::{pool_entities, CorpusStore, Document, Qrels, Query, SegmenterConfig};
use crate::embeddings::{query_entity_key, EmbeddingSpaces, EmbeddingStore};
use crate::entity_ranking::{rank_entities, train_entity_head, EntityHead, EntityRanking};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_run, Cutoffs, MetricsReport};
use crate::linalg::Vector;
use crate::model::{ModelConfig, WeightingMode};
use crate::retrieval::{retrieve, Analyzer, InvertedIndex, Ranking, RetrievalParams};
use crate::training::{
    build_doc_examples, build_entity_examples, fold_seed, make_folds, train_dreq, FoldPlan,
    FoldResult, TrainConfig, TrainingInputs,
};

/// One re-ranker configuration of the ablation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    Full,
    Uniform,
    ReciprocalRank,
    NoEntity,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::Uniform,
        Variant::ReciprocalRank,
        Variant::NoEntity,
    ];

    pub fn model_config(self) -> ModelConfig {
        let mode = match self {
            Variant::Full | Variant::NoEntity => WeightingMode::Probability,
            Variant::Uniform => WeightingMode::Uniform,
            Variant::ReciprocalRank => WeightingMode::ReciprocalRank,
        };
        ModelConfig {
            mode,
            use_entities: self != Variant::NoEntity,
            ..ModelConfig::default()
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::Uniform => "uniform",
            Variant::ReciprocalRank => "rr",
            Variant::NoEntity => "no-entity",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "prob" | "probability" => Ok(Variant::Full),
            "uniform" => Ok(Variant::Uniform),
            "rr" | "reciprocal_rank" => Ok(Variant::ReciprocalRank),
            "no-entity" | "no_entity" | "noentity" => Ok(Variant::NoEntity),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub analyzer: Analyzer,
    pub retrieval: RetrievalParams,
    pub candidate_depth: usize,
    pub folds: usize,
    pub seed: u64,
    pub entity_train: TrainConfig,
    pub dreq_train: TrainConfig,
    pub segmenter: SegmenterConfig,
    pub cutoffs: Cutoffs,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            analyzer: Analyzer::default(),
            retrieval: RetrievalParams::default(),
            candidate_depth: 1000,
            folds: 5,
            seed: 0,
            entity_train: TrainConfig::default(),
            dreq_train: TrainConfig::default(),
            segmenter: SegmenterConfig::default(),
            cutoffs: Cutoffs::default(),
        }
    }
}

/// Candidate lists for every query.
pub fn retrieve_candidates(
    index: &InvertedIndex,
    queries: &[Query],
    depth: usize,
    params: &RetrievalParams,
) -> Result<BTreeMap<String, Ranking>> {
    queries
        .iter()
        .map(|q| {
            Ok((
                q.query_id.clone(),
                retrieve(index, &q.query_id, &q.text, depth, params)?,
            ))
        })
        .collect()
}

pub fn candidate_documents<'a>(
    corpus: &'a CorpusStore,
    candidates: &Ranking,
) -> Result<Vec<&'a Document>> {
    candidates.ids().map(|d| corpus.require(d)).collect()
}

/// Pooled entity set of each query's candidates.
pub fn pool_all(
    corpus: &CorpusStore,
    candidates: &BTreeMap<String, Ranking>,
) -> Result<BTreeMap<String, Vec<String>>> {
    candidates
        .iter()
        .map(|(q, r)| Ok((q.clone(), pool_entities(candidate_documents(corpus, r)?))))
        .collect()
}

/// Entity-head training pairs for the given queries, from transferred labels.
pub fn entity_training_pairs<'a>(
    query_ids: impl IntoIterator<Item = &'a String>,
    corpus: &CorpusStore,
    qrels: &Qrels,
    candidates: &BTreeMap<String, Ranking>,
    encodings: &EmbeddingStore,
    seed: u64,
) -> Result<Vec<(Vector, f64)>> {
    let mut out = Vec::new();
    for q in query_ids {
        let Some(r) = candidates.get(q) else { continue };
        for ex in build_entity_examples(qrels, q, candidate_documents(corpus, r)?, seed) {
            let enc = encodings.require(&query_entity_key(q, &ex.item_id))?;
            out.push((enc.clone(), f64::from(ex.label)));
        }
    }
    Ok(out)
}

/// Trains one entity head per fold on that fold's training queries and
/// ranks each query's pooled entities with the head of the fold that holds
/// it out.
pub fn fold_entity_rankings(
    corpus: &CorpusStore,
    qrels: &Qrels,
    candidates: &BTreeMap<String, Ranking>,
    pooled: &BTreeMap<String, Vec<String>>,
    encodings: &EmbeddingStore,
    folds: &FoldPlan,
    cfg: &TrainConfig,
) -> Result<(Vec<EntityHead>, BTreeMap<String, EntityRanking>)> {
    let mut heads = Vec::with_capacity(folds.folds.len());
    let mut rankings = BTreeMap::new();
    for (i, fold) in folds.folds.iter().enumerate() {
        let pairs =
            entity_training_pairs(&fold.train, corpus, qrels, candidates, encodings, cfg.seed)?;
        let head_cfg = TrainConfig {
            seed: fold_seed(cfg.seed, i),
            ..*cfg
        };
        let head = train_entity_head(&pairs, &head_cfg)?;
        for q in &fold.test {
            if let Some(p) = pooled.get(q) {
                rankings.insert(q.clone(), rank_entities(&head, q, p, encodings)?);
            }
        }
        heads.push(head);
    }
    Ok((heads, rankings))
}

/// Everything an experiment reads.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentData<'a> {
    pub corpus: &'a CorpusStore,
    pub queries: &'a [Query],
    pub qrels: &'a Qrels,
    pub spaces: &'a EmbeddingSpaces,
}

#[derive(Debug, Clone)]
pub struct VariantResult {
    pub variant: Variant,
    pub folds: Vec<FoldResult>,
    pub runs: BTreeMap<String, Ranking>,
    pub report: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub folds: FoldPlan,
    pub candidates: BTreeMap<String, Ranking>,
    pub candidate_report: MetricsReport,
    pub entity_heads: Vec<EntityHead>,
    pub entity_rankings: BTreeMap<String, EntityRanking>,
    pub variants: Vec<VariantResult>,
}

impl ExperimentReport {
    pub fn variant(&self, v: Variant) -> Option<&VariantResult> {
        self.variants.iter().find(|r| r.variant == v)
    }

    /// `system<TAB>map<TAB>ndcg<TAB>p<TAB>recall` with the candidate run first.
    pub fn comparison_tsv(&self) -> String {
        let mut out = String::from("system");
        for name in self.candidate_report.metric_names() {
            out.push('\t');
            out.push_str(&name);
        }
        out.push('\n');
        let rows = std::iter::once(("candidates".to_string(), &self.candidate_report)).chain(
            self.variants
                .iter()
                .map(|v| (v.variant.to_string(), &v.report)),
        );
        for (name, r) in rows {
            let m = r.mean;
            out.push_str(&format!(
                "{name}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                m.map, m.ndcg, m.precision, m.recall
            ));
        }
        out
    }
}

fn merge_runs(folds: &[FoldResult]) -> BTreeMap<String, Ranking> {
    folds
        .iter()
        .flat_map(|f| f.runs.iter().cloned())
        .map(|r| (r.query_id.clone(), r))
        .collect()
}

/// Runs retrieval, fold-aware entity ranking and one cross-validated
/// scorer per variant, all on the same fold plan.
pub fn run_experiment(
    data: ExperimentData<'_>,
    cfg: &ExperimentConfig,
    variants: &[Variant],
) -> Result<ExperimentReport> {
    let index = InvertedIndex::from_corpus(data.corpus, cfg.analyzer)?;
    let candidates =
        retrieve_candidates(&index, data.queries, cfg.candidate_depth, &cfg.retrieval)?;
    let judged: BTreeMap<String, Ranking> = candidates
        .iter()
        .filter(|(q, _)| data.qrels.contains_query(q))
        .map(|(q, r)| (q.clone(), r.clone()))
        .collect();
    let qids: Vec<String> = judged.keys().cloned().collect();
    let folds = make_folds(&qids, cfg.folds, cfg.seed)?;
    let pooled = pool_all(data.corpus, &judged)?;
    let entity_cfg = TrainConfig {
        seed: cfg.seed,
        ..cfg.entity_train
    };
    let (entity_heads, entity_rankings) = fold_entity_rankings(
        data.corpus,
        data.qrels,
        &judged,
        &pooled,
        &data.spaces.query_entity,
        &folds,
        &entity_cfg,
    )?;
    let examples = build_doc_examples(data.qrels, &judged, cfg.seed);
    let inputs = TrainingInputs {
        corpus: data.corpus,
        spaces: data.spaces,
        entity_rankings: &entity_rankings,
        candidates: &judged,
        segmenter: cfg.segmenter,
    };
    let dreq_cfg = TrainConfig {
        seed: cfg.seed,
        ..cfg.dreq_train
    };
    let mut results = Vec::with_capacity(variants.len());
    for &variant in variants {
        let fold_results = train_dreq(
            variant.model_config(),
            &examples,
            &folds,
            &inputs,
            &dreq_cfg,
        )?;
        let runs = merge_runs(&fold_results);
        let report = evaluate_run(&runs, data.qrels, &variant.to_string(), cfg.cutoffs)?;
        log::info!(
            "{variant}: nDCG@{} = {:.4}",
            cfg.cutoffs.ndcg,
            report.mean.ndcg
        );
        results.push(VariantResult {
            variant,
            folds: fold_results,
            runs,
            report,
        });
    }
    let candidate_report = evaluate_run(&judged, data.qrels, "candidates", cfg.cutoffs)?;
    Ok(ExperimentReport {
        folds,
        candidates,
        candidate_report,
        entity_heads,
        entity_rankings,
        variants: results,
    })
}
