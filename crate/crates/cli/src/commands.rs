//! One function per subcommand. Each reads its inputs through a
//! [`Workspace`], writes every output atomically and finishes with a manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;

use dreq::corpus::{load_catalog, load_queries, load_query_entities, CorpusStore, Qrels, Query};
use dreq::embeddings::{EmbeddingSpaces, EmbeddingStore};
use dreq::entity_ranking::{
    bm25_entity_rank, description_index, geeer_entity_rank, rank_entities as rank_query_entities,
    EntityHead, EntityRanking,
};
use dreq::evaluation::{
    difficulty_report, evaluate_run, paired_t_test, wig, wig_terciles, MetricsReport, Tercile,
};
use dreq::model::{maxsimcos_rerank, rerank as rerank_query, DreqModel};
use dreq::pipeline::{fold_entity_rankings, pool_all, run_experiment, ExperimentData, Variant};
use dreq::retrieval::{retrieve as retrieve_query, InvertedIndex, Ranking, RetrievalMode};
use dreq::synthetic::{generate, hashed_spaces, SyntheticConfig};
use dreq::training::{
    build_doc_examples, format_training_log, make_folds, train_dreq as train_folds, FoldPlan,
    TrainingInputs,
};
use dreq::trec::{format_run, load_run};
use dreq::Error;

use crate::config::Config;
use crate::workspace::{artifact, Workspace};
use crate::{EntityRankMode, RerankMode};

fn load_corpus(ws: &mut Workspace) -> Result<CorpusStore> {
    let mut corpus = CorpusStore::load(&ws.input("corpus")?)?;
    if let Some(path) = ws.optional_input("catalog") {
        corpus.set_catalog(load_catalog(&path)?)?;
    }
    Ok(corpus)
}

fn load_qrels(ws: &mut Workspace) -> Result<Qrels> {
    Ok(Qrels::load(&ws.input("qrels")?)?)
}

fn load_query_list(ws: &mut Workspace) -> Result<Vec<Query>> {
    Ok(load_queries(&ws.input("queries")?)?)
}

fn load_candidates(ws: &mut Workspace) -> Result<BTreeMap<String, Ranking>> {
    Ok(load_run(&ws.require(artifact::CANDIDATES)?)?)
}

fn load_spaces(ws: &mut Workspace) -> Result<EmbeddingSpaces> {
    Ok(EmbeddingSpaces::load_dir(&ws.embeddings_dir()?)?)
}

fn judged(candidates: &BTreeMap<String, Ranking>, qrels: &Qrels) -> BTreeMap<String, Ranking> {
    candidates
        .iter()
        .filter(|(q, _)| qrels.contains_query(q))
        .map(|(q, r)| (q.clone(), r.clone()))
        .collect()
}

fn pooled_to_tsv(pooled: &BTreeMap<String, Vec<String>>) -> String {
    let mut out = String::new();
    for (q, entities) in pooled {
        for e in entities {
            let _ = writeln!(out, "{q}\t{e}");
        }
    }
    out
}

fn load_pooled(ws: &mut Workspace) -> Result<BTreeMap<String, Vec<String>>> {
    let path = ws.require(artifact::POOLED)?;
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut pooled: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let Some((q, e)) = line.split_once('\t') else {
            bail!(
                "{}:{}: expected `query_id<TAB>entity_id`",
                path.display(),
                i + 1
            );
        };
        pooled.entry(q.to_string()).or_default().push(e.to_string());
    }
    Ok(pooled)
}

/// The fold plan over judged queries, regenerated when the seed, fold count
/// or query set changed.
fn ensure_folds(ws: &mut Workspace, queries: &BTreeMap<String, Ranking>) -> Result<FoldPlan> {
    let path = ws.path(artifact::FOLDS.0);
    let qids: Vec<String> = queries.keys().cloned().collect();
    let k: usize = ws.config.get("folds")?;
    let seed = ws.config.seed()?;
    if path.exists() {
        let plan = FoldPlan::load(&path)?;
        let mut covered: Vec<String> = plan
            .folds
            .iter()
            .flat_map(|f| f.test.iter().cloned())
            .collect();
        covered.sort();
        if plan.seed == seed && plan.folds.len() == k && covered == qids {
            return Ok(plan);
        }
        info!("fold plan at {} is stale; regenerating", path.display());
    }
    let plan = make_folds(&qids, k, seed)?;
    ws.write(path, plan.to_json())?;
    Ok(plan)
}

fn load_entity_rankings(ws: &mut Workspace, mode: &str) -> Result<BTreeMap<String, EntityRanking>> {
    let path = ws.path(&format!("entities.{mode}.run"));
    let path = ws.require_path(path, &format!("rank-entities --mode {mode}"))?;
    load_run(&path)?
        .values()
        .map(|r| Ok((r.query_id.clone(), EntityRanking::from_ranking(r)?)))
        .collect()
}

fn variant_of(cfg: &Config, flag: Option<&str>) -> Result<Variant> {
    match flag {
        Some(v) => Ok(v.parse()?),
        None => cfg.variant(),
    }
}

fn candidate_tag(cfg: &Config) -> Result<&'static str> {
    Ok(match cfg.get::<RetrievalMode>("retrieval.mode")? {
        RetrievalMode::Bm25 => "bm25",
        RetrievalMode::Bm25Rm3 => "bm25rm3",
    })
}

pub fn build_index(cfg: &Config) -> Result<()> {
    let mut ws = Workspace::new(cfg, "build-index")?;
    let corpus = ws.stage("load", load_corpus)?;
    let index = ws.stage("index", |_| {
        Ok(InvertedIndex::from_corpus(&corpus, cfg.analyzer()?)?)
    })?;
    ws.write_name(artifact::INDEX.0, index.to_json()?)?;
    println!(
        "indexed {} documents, {} terms",
        index.doc_count(),
        index.vocabulary_size()
    );
    ws.finish()
}

pub fn retrieve(cfg: &Config) -> Result<()> {
    let mut ws = Workspace::new(cfg, "retrieve")?;
    let index = InvertedIndex::load(&ws.require(artifact::INDEX)?)?;
    let queries = load_query_list(&mut ws)?;
    let params = cfg.retrieval()?;
    let depth: usize = cfg.get("retrieval.depth")?;
    let runs = ws.stage("retrieve", |_| {
        Ok(queries
            .par_iter()
            .map(|q| retrieve_query(&index, &q.query_id, &q.text, depth, &params))
            .collect::<Result<Vec<_>, Error>>()?)
    })?;
    let sorted: BTreeMap<&str, &Ranking> = runs.iter().map(|r| (r.query_id.as_str(), r)).collect();
    ws.write_name(
        artifact::CANDIDATES.0,
        format_run(sorted.into_values(), candidate_tag(cfg)?),
    )?;
    println!("retrieved candidates for {} queries", runs.len());
    ws.finish()
}

pub fn pool_entities(cfg: &Config) -> Result<()> {
    let mut ws = Workspace::new(cfg, "pool-entities")?;
    let corpus = load_corpus(&mut ws)?;
    let candidates = load_candidates(&mut ws)?;
    let pooled = pool_all(&corpus, &candidates)?;
    ws.write_name(artifact::POOLED.0, pooled_to_tsv(&pooled))?;
    let total: usize = pooled.values().map(Vec::len).sum();
    println!("pooled {total} entities over {} queries", pooled.len());
    ws.finish()
}

pub fn synth_embed(cfg: &Config) -> Result<()> {
    let mut ws = Workspace::new(cfg, "synth-embed")?;
    let corpus = load_corpus(&mut ws)?;
    let queries = load_query_list(&mut ws)?;
    let pooled = load_pooled(&mut ws)?;
    let spaces = ws.stage("embed", |_| {
        Ok(hashed_spaces(
            &corpus,
            &queries,
            &pooled,
            cfg.synth_dims()?,
            cfg.segmenter()?,
            cfg.seed()?,
        )?)
    })?;
    let dir = ws.path(artifact::EMBEDDINGS.0);
    for (name, store) in EmbeddingSpaces::FILES.iter().zip(spaces.stores()) {
        ws.write(dir.join(name), store.to_text())?;
    }
    println!("wrote synthetic embeddings to {}", dir.display());
    ws.finish()
}

pub fn synth_corpus(cfg: &Config, out: &Path) -> Result<()> {
    let mut ws = Workspace::new(cfg, "synth-corpus")?;
    let base = match cfg.raw("synth.preset") {
        "default" => SyntheticConfig::default(),
        "toy" => SyntheticConfig::toy(),
        other => bail!("unknown synth.preset `{other}` (expected default or toy)"),
    };
    let ds = generate(&SyntheticConfig {
        seed: cfg.seed()?,
        segmenter: cfg.segmenter()?,
        ..base
    })?;
    for (name, body) in ds.files() {
        ws.write(out.join(name), body)?;
    }
    let conf = "corpus = corpus.jsonl\ncatalog = entities.jsonl\nqueries = queries.tsv\nqrels = qrels.txt\n\
                query_entities = query_entities.tsv\nembeddings = embeddings\nwork = work\n";
    ws.write(out.join("dreq.conf"), conf)?;
    println!(
        "wrote {} documents and {} queries to {}",
        ds.corpus.len(),
        ds.queries.len(),
        out.display()
    );
    ws.finish()
}

pub fn train_entity_ranker(cfg: &Config) -> Result<()> {
    let mut ws = Workspace::new(cfg, "train-entity-ranker")?;
    let corpus = load_corpus(&mut ws)?;
    let qrels = load_qrels(&mut ws)?;
    let candidates = judged(&load_candidates(&mut ws)?, &qrels);
    let spaces = load_spaces(&mut ws)?;
    let folds = ensure_folds(&mut ws, &candidates)?;
    let train_cfg = cfg.entity_train()?;
    let (heads, _) = ws.stage("train", |_| {
        Ok(fold_entity_rankings(
            &corpus,
            &qrels,
            &candidates,
            &BTreeMap::new(),
            &spaces.query_entity,
            &folds,
            &train_cfg,
        )?)
    })?;
    let dir = ws.path(artifact::ENTITY_HEADS.0);
    for (i, head) in heads.iter().enumerate() {
        ws.write(dir.join(format!("fold{i}.head")), head.to_text())?;
    }
    println!("trained {} entity heads", heads.len());
    ws.finish()
}

fn load_heads(ws: &mut Workspace, folds: &FoldPlan) -> Result<Vec<EntityHead>> {
    let dir = ws.require(artifact::ENTITY_HEADS)?;
    (0..folds.folds.len())
        .map(|i| {
            let path =
                ws.require_path(dir.join(format!("fold{i}.head")), artifact::ENTITY_HEADS.1)?;
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(EntityHead::parse(&text, &path)?)
        })
        .collect()
}

pub fn rank_entities(cfg: &Config, mode: EntityRankMode) -> Result<()> {
    let mut ws = Workspace::new(cfg, "rank-entities")?;
    let pooled = load_pooled(&mut ws)?;
    let jobs: Vec<(&String, &Vec<String>)> = pooled.iter().collect();
    let (name, rankings): (&str, Vec<EntityRanking>) = match mode {
        EntityRankMode::Learned => {
            let folds = FoldPlan::load(&ws.require(artifact::FOLDS)?)?;
            let heads = load_heads(&mut ws, &folds)?;
            let spaces = load_spaces(&mut ws)?;
            let ranked = jobs
                .par_iter()
                .map(|(q, p)| {
                    let fold = folds.test_fold_of(q).unwrap_or(0);
                    rank_query_entities(&heads[fold], q, p, &spaces.query_entity)
                })
                .collect::<Result<Vec<_>, Error>>()?;
            ("learned", ranked)
        }
        EntityRankMode::Bm25 | EntityRankMode::Geeer => {
            let corpus = load_corpus(&mut ws)?;
            if corpus.catalog().next().is_none() {
                bail!("BM25 entity ranking needs entity descriptions: set `catalog`");
            }
            let index = description_index(corpus.catalog(), cfg.analyzer()?)?;
            let texts: BTreeMap<String, String> = load_query_list(&mut ws)?
                .into_iter()
                .map(|q| (q.query_id, q.text))
                .collect();
            let bm25 = cfg.retrieval()?.bm25;
            let sparse = jobs
                .par_iter()
                .map(|(q, p)| {
                    let text = texts.get(*q).map(String::as_str).unwrap_or("");
                    bm25_entity_rank(q, text, p, &index, bm25)
                })
                .collect::<Result<Vec<_>, Error>>()?;
            if matches!(mode, EntityRankMode::Bm25) {
                ("bm25", sparse)
            } else {
                let links = load_query_entities(&ws.input("query_entities")?)?;
                let spaces = load_spaces(&mut ws)?;
                let lambda: f64 = cfg.get("geeer.lambda")?;
                let mixed = jobs
                    .par_iter()
                    .zip(sparse.par_iter())
                    .map(|((q, p), b)| {
                        let linked = links.get(*q).map(Vec::as_slice).unwrap_or(&[]);
                        match geeer_entity_rank(q, linked, p, &spaces.entity, b, lambda) {
                            Err(Error::NotApplicable(why)) => {
                                warn!("{why}; using the BM25 entity ranking");
                                Ok(b.clone())
                            }
                            other => other,
                        }
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                ("geeer", mixed)
            }
        }
    };
    let runs: Vec<Ranking> = rankings.iter().map(EntityRanking::to_ranking).collect();
    ws.write_name(
        &format!("entities.{name}.run"),
        format_run(&runs, &format!("entities-{name}")),
    )?;
    println!("ranked entities for {} queries ({name})", runs.len());
    ws.finish()
}

pub fn train_dreq(cfg: &Config, variant: Option<&str>) -> Result<()> {
    let mut ws = Workspace::new(cfg, "train-dreq")?;
    let variant = variant_of(cfg, variant)?;
    let corpus = load_corpus(&mut ws)?;
    let qrels = load_qrels(&mut ws)?;
    let candidates = judged(&load_candidates(&mut ws)?, &qrels);
    let spaces = load_spaces(&mut ws)?;
    let rankings = load_entity_rankings(&mut ws, cfg.raw("entity_ranker"))?;
    let folds = ensure_folds(&mut ws, &candidates)?;
    let inputs = TrainingInputs {
        corpus: &corpus,
        spaces: &spaces,
        entity_rankings: &rankings,
        candidates: &candidates,
        segmenter: cfg.segmenter()?,
    };
    let examples = build_doc_examples(&qrels, &candidates, cfg.seed()?);
    let model_cfg = cfg.model_config(variant)?;
    let train_cfg = cfg.dreq_train()?;
    let results = ws.stage("train", |_| {
        Ok(train_folds(
            model_cfg, &examples, &folds, &inputs, &train_cfg,
        )?)
    })?;
    let dir = ws.path(artifact::MODELS.0).join(variant.to_string());
    for r in &results {
        ws.write(
            dir.join(format!("fold{}.model", r.fold)),
            r.trained.model.to_text(),
        )?;
        if let Some(store) = &r.trained.entities {
            ws.write(
                dir.join(format!("fold{}.entity.emb", r.fold)),
                store.to_text(),
            )?;
        }
    }
    ws.write(dir.join("train.log"), format_training_log(&results))?;
    println!(
        "trained {} {variant} models on {} examples",
        results.len(),
        examples.len()
    );
    ws.finish()
}

pub fn rerank(cfg: &Config, mode: RerankMode, variant: Option<&str>) -> Result<()> {
    let mut ws = Workspace::new(cfg, "rerank")?;
    let corpus = load_corpus(&mut ws)?;
    let candidates = load_candidates(&mut ws)?;
    let spaces = load_spaces(&mut ws)?;
    let jobs: Vec<&Ranking> = candidates.values().collect();
    let (name, runs) = match mode {
        RerankMode::Maxsimcos => {
            let links = load_query_entities(&ws.input("query_entities")?)?;
            let runs = jobs
                .par_iter()
                .map(|c| {
                    let linked = links.get(&c.query_id).map(Vec::as_slice).unwrap_or(&[]);
                    match maxsimcos_rerank(linked, c, &corpus, &spaces.entity) {
                        Err(Error::NotApplicable(why)) => {
                            warn!("{why}; keeping the candidate order");
                            Ok((*c).clone())
                        }
                        other => other,
                    }
                })
                .collect::<Result<Vec<_>, Error>>()?;
            ("maxsimcos".to_string(), runs)
        }
        RerankMode::Dreq => {
            let variant = variant_of(cfg, variant)?;
            let rankings = load_entity_rankings(&mut ws, cfg.raw("entity_ranker"))?;
            let folds = FoldPlan::load(&ws.require(artifact::FOLDS)?)?;
            let dir = ws.path(artifact::MODELS.0).join(variant.to_string());
            let producer = format!("train-dreq --variant {variant}");
            let mut models = Vec::new();
            for i in 0..folds.folds.len() {
                let path = ws.require_path(dir.join(format!("fold{i}.model")), &producer)?;
                let text = std::fs::read_to_string(&path)?;
                let model = DreqModel::parse(&text, &path)?;
                let tuned = dir.join(format!("fold{i}.entity.emb"));
                let fold_spaces = if tuned.exists() {
                    EmbeddingSpaces {
                        entity: EmbeddingStore::load(&tuned)?,
                        ..spaces.clone()
                    }
                } else {
                    spaces.clone()
                };
                models.push((model, fold_spaces));
            }
            let segmenter = cfg.segmenter()?;
            let empty = |q: &str| EntityRanking::from_raw(q, Vec::new());
            let runs = jobs
                .par_iter()
                .map(|c| {
                    let (model, sp) = &models[folds.test_fold_of(&c.query_id).unwrap_or(0)];
                    let ranking = match rankings.get(&c.query_id) {
                        Some(r) => r.clone(),
                        None => empty(&c.query_id)?,
                    };
                    rerank_query(model, c, &corpus, &ranking, sp, segmenter)
                })
                .collect::<Result<Vec<_>, Error>>()?;
            (format!("dreq.{variant}"), runs)
        }
    };
    let path = ws.path("runs").join(format!("{name}.run"));
    ws.write(path.clone(), format_run(&runs, &name))?;
    println!("wrote {}", path.display());
    ws.finish()
}

fn run_tag(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn evaluate_file(ws: &mut Workspace, path: &Path, qrels: &Qrels) -> Result<MetricsReport> {
    let runs = load_run(&ws.require_path(path.to_path_buf(), "retrieve or rerank")?)?;
    evaluate_run(&runs, qrels, &run_tag(path), ws.config.cutoffs()?)
        .with_context(|| format!("evaluating {}", path.display()))
}

pub fn evaluate(cfg: &Config, run: &Path, baseline: Option<&Path>) -> Result<()> {
    let mut ws = Workspace::new(cfg, "evaluate")?;
    let qrels = load_qrels(&mut ws)?;
    let report = evaluate_file(&mut ws, run, &qrels)?;
    let reports = ws.path("reports");
    ws.write(
        reports.join(format!("{}.metrics.tsv", report.tag)),
        report.to_tsv(),
    )?;
    let names = report.metric_names();
    let m = report.mean;
    for (name, value) in names.iter().zip([m.map, m.ndcg, m.precision, m.recall]) {
        println!("{name}\t{value:.4}");
    }
    if let Some(base_path) = baseline {
        let base = evaluate_file(&mut ws, base_path, &qrels)?;
        let mut tsv = String::from("metric\tsystem\tbaseline\tt\tp\tsignificant\n");
        for name in &names {
            let sys = report.per_query_metric(name)?;
            let bas = base.per_query_metric(name)?;
            let a: Vec<f64> = sys.values().copied().collect();
            let b: Vec<f64> = bas.values().copied().collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let t = paired_t_test(&a, &b)?;
            let t_text = t.t.map_or("undefined".to_string(), |x| format!("{x:.6}"));
            let _ = writeln!(
                tsv,
                "{name}\t{:.6}\t{:.6}\t{t_text}\t{:.6}\t{}",
                mean(&a),
                mean(&b),
                t.p,
                t.significant
            );
        }
        print!("{tsv}");
        ws.write(
            reports.join(format!("{}.vs.{}.ttest.tsv", report.tag, base.tag)),
            tsv,
        )?;
    }
    ws.finish()
}

fn wig_scores(
    cfg: &Config,
    runs: &BTreeMap<String, Ranking>,
    queries: &[Query],
) -> Result<BTreeMap<String, f64>> {
    let analyzer = cfg.analyzer()?;
    let k: usize = cfg.get("wig.k")?;
    let texts: BTreeMap<&str, &str> = queries
        .iter()
        .map(|q| (q.query_id.as_str(), q.text.as_str()))
        .collect();
    runs.iter()
        .map(|(q, r)| {
            let text = texts
                .get(q.as_str())
                .with_context(|| format!("query {q} of the run is not in `queries`"))?;
            let terms = analyzer.tokenize(text).len();
            Ok((
                q.clone(),
                wig(terms, r, k).with_context(|| format!("WIG of query {q}"))?,
            ))
        })
        .collect()
}

pub fn qpp(cfg: &Config, run: Option<&Path>) -> Result<()> {
    let mut ws = Workspace::new(cfg, "qpp")?;
    let path = match run {
        Some(p) => ws.require_path(p.to_path_buf(), "retrieve or rerank")?,
        None => ws.require(artifact::CANDIDATES)?,
    };
    let runs = load_run(&path)?;
    let queries = load_query_list(&mut ws)?;
    let scores = wig_scores(cfg, &runs, &queries)?;
    let terciles = wig_terciles(&scores)?;
    let mut tsv = String::from("query_id\twig\ttercile\n");
    for (q, w) in &scores {
        let _ = writeln!(tsv, "{q}\t{w:.6}\t{}", terciles[q]);
    }
    ws.write(ws.path("reports").join("wig.tsv"), &tsv)?;
    for t in [Tercile::Easy, Tercile::Medium, Tercile::Hard] {
        println!("{t}\t{}", terciles.values().filter(|x| **x == t).count());
    }
    ws.finish()
}

pub fn difficulty(cfg: &Config, baseline: &Path, system: &Path, metric: &str) -> Result<()> {
    let mut ws = Workspace::new(cfg, "difficulty")?;
    let qrels = load_qrels(&mut ws)?;
    let queries = load_query_list(&mut ws)?;
    let base = evaluate_file(&mut ws, baseline, &qrels)?;
    let sys = evaluate_file(&mut ws, system, &qrels)?;
    let b = base.per_query_metric(metric)?;
    let s = sys.per_query_metric(metric)?;
    let base_runs: BTreeMap<String, Ranking> = load_run(baseline)?
        .into_iter()
        .filter(|(q, _)| qrels.contains_query(q))
        .collect();
    let scores = wig_scores(cfg, &base_runs, &queries)?;
    let report = difficulty_report(&b, &s, (scores.len() >= 3).then_some(&scores))?;
    let reports = ws.path("reports");
    ws.write(reports.join("difficulty.bins.tsv"), report.bins_tsv())?;
    let h = report.helped;
    let mut summary = format!(
        "helped\t{}\nhurt\t{}\nunchanged\t{}\n",
        h.helped, h.hurt, h.unchanged
    );
    for t in [Tercile::Easy, Tercile::Medium, Tercile::Hard] {
        let members: Vec<&String> = report
            .terciles
            .iter()
            .filter(|(_, x)| **x == t)
            .map(|(q, _)| q)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mean = |m: &BTreeMap<String, f64>| {
            members
                .iter()
                .map(|q| m.get(*q).copied().unwrap_or(0.0))
                .sum::<f64>()
                / members.len() as f64
        };
        let _ = writeln!(
            summary,
            "{t}\t{}\t{:.6}\t{:.6}",
            members.len(),
            mean(&b),
            mean(&s)
        );
    }
    print!("{summary}");
    ws.write(reports.join("difficulty.summary.tsv"), summary)?;
    ws.finish()
}

pub fn ablate(cfg: &Config) -> Result<()> {
    let mut ws = Workspace::new(cfg, "ablate")?;
    let corpus = load_corpus(&mut ws)?;
    let queries = load_query_list(&mut ws)?;
    let qrels = load_qrels(&mut ws)?;
    let spaces = load_spaces(&mut ws)?;
    let data = ExperimentData {
        corpus: &corpus,
        queries: &queries,
        qrels: &qrels,
        spaces: &spaces,
    };
    let exp = cfg.experiment()?;
    let report = ws.stage("experiment", |_| {
        Ok(run_experiment(data, &exp, &Variant::ALL)?)
    })?;
    let runs_dir = ws.path("runs");
    ws.write(
        runs_dir.join("ablate.candidates.run"),
        format_run(report.candidates.values(), candidate_tag(cfg)?),
    )?;
    let full = report
        .variant(Variant::Full)
        .context("full variant missing")?;
    let ndcg = full.report.metric_names()[1].clone();
    let full_scores: Vec<f64> = full.report.per_query_metric(&ndcg)?.into_values().collect();
    let mut ttest = format!("variant\t{ndcg}\tt_vs_full\tp_vs_full\n");
    for v in &report.variants {
        let tag = format!("ablate.{}", v.variant);
        ws.write(
            runs_dir.join(format!("{tag}.run")),
            format_run(v.runs.values(), &tag),
        )?;
        let scores: Vec<f64> = v.report.per_query_metric(&ndcg)?.into_values().collect();
        let t = paired_t_test(&full_scores, &scores)?;
        let t_text = t.t.map_or("undefined".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(
            ttest,
            "{}\t{:.6}\t{t_text}\t{:.6}",
            v.variant, v.report.mean.ndcg, t.p
        );
    }
    let reports = ws.path("reports");
    let table = report.comparison_tsv();
    print!("{table}");
    ws.write(reports.join("ablation.tsv"), table)?;
    ws.write(reports.join("ablation.ttest.tsv"), ttest)?;
    ws.finish()
}
