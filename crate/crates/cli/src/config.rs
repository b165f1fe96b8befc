//! Flat `key = value` configuration.
//!
//! Values are layered: built-in defaults, then the config file, then
//! `DREQ_*` environment variables, then `--set key=value` flags. Relative
//! paths in the file resolve against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

use dreq::corpus::SegmenterConfig;
use dreq::embeddings::DimsConfig;
use dreq::evaluation::Cutoffs;
use dreq::model::ModelConfig;
use dreq::pipeline::{ExperimentConfig, Variant};
use dreq::retrieval::{Analyzer, Bm25Params, RetrievalMode, RetrievalParams, Rm3Params};
use dreq::training::TrainConfig;

pub const ENV_PREFIX: &str = "DREQ_";

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("corpus", "", "documents with entity links (JSONL)"),
    (
        "catalog",
        "",
        "entity catalog with descriptions (JSONL), optional",
    ),
    ("queries", "", "queries (TSV: query_id, text)"),
    ("qrels", "", "relevance judgments (TREC qrels)"),
    (
        "query_entities",
        "",
        "entities linked in queries (TSV: query_id, entity_id, confidence)",
    ),
    (
        "embeddings",
        "",
        "directory with the four embedding stores; empty uses <work>/embeddings",
    ),
    (
        "work",
        "work",
        "directory for every artifact the subcommands write",
    ),
    ("seed", "0", "seed for folds, sampling and initialization"),
    (
        "analyzer.stem",
        "false",
        "Snowball stemming of index and query terms",
    ),
    ("retrieval.mode", "bm25_rm3", "bm25 or bm25_rm3"),
    ("retrieval.depth", "1000", "candidates retrieved per query"),
    ("bm25.k1", "0.9", "BM25 term saturation"),
    ("bm25.b", "0.4", "BM25 length normalization"),
    ("rm3.fb_docs", "10", "feedback documents"),
    ("rm3.fb_terms", "10", "feedback terms"),
    (
        "rm3.original_weight",
        "0.5",
        "weight of the original query model",
    ),
    ("segmenter.window", "10", "sentences per passage"),
    ("segmenter.stride", "5", "sentence stride between passages"),
    ("folds", "5", "cross-validation folds over judged queries"),
    (
        "entity_ranker",
        "learned",
        "entity ranking used by the scorer: learned, bm25 or geeer",
    ),
    (
        "geeer.lambda",
        "0.5",
        "BM25 share of the GEEER-style interpolation",
    ),
    (
        "variant",
        "full",
        "scorer variant: full, uniform, rr or no-entity",
    ),
    (
        "model.finetune_entity_embeddings",
        "false",
        "update entity embeddings while training",
    ),
    (
        "model.count_multiplicity",
        "false",
        "weight entities by their mention count as well",
    ),
    (
        "model.top_k_entities",
        "0",
        "only the top-k ranked entities contribute; 0 keeps all",
    ),
    (
        "entity_train.learning_rate",
        "1e-5",
        "Adam step size of the entity head",
    ),
    ("entity_train.batch_size", "20", "entity head batch size"),
    ("entity_train.epochs", "20", "entity head epochs"),
    (
        "entity_train.patience",
        "3",
        "epochs without improvement before stopping; 0 disables",
    ),
    (
        "entity_train.early_stop_delta",
        "1e-5",
        "minimum loss improvement over the patience window",
    ),
    (
        "dreq_train.learning_rate",
        "1e-5",
        "Adam step size of the scorer",
    ),
    ("dreq_train.batch_size", "20", "scorer batch size"),
    ("dreq_train.epochs", "20", "scorer epochs"),
    (
        "dreq_train.patience",
        "3",
        "epochs without improvement before stopping; 0 disables",
    ),
    (
        "dreq_train.early_stop_delta",
        "1e-5",
        "minimum loss improvement over the patience window",
    ),
    ("eval.ndcg_k", "20", "nDCG cutoff"),
    ("eval.precision_k", "20", "precision cutoff"),
    ("eval.recall_k", "1000", "recall cutoff"),
    ("wig.k", "20", "top-k depth of the WIG predictor"),
    (
        "synth.dims",
        "32",
        "dimension of every store written by synth-embed",
    ),
    (
        "synth.preset",
        "default",
        "synth-corpus size: default (500 docs) or toy (50 docs)",
    ),
];

/// Environment variable that overrides `key`: `bm25.k1` -> `DREQ_BM25_K1`.
pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_uppercase().replace('.', "_"))
}

fn is_path_key(key: &str) -> bool {
    matches!(
        key,
        "corpus" | "catalog" | "queries" | "qrels" | "query_entities" | "embeddings" | "work"
    )
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn defaults() -> Self {
        Config {
            values: KEYS
                .iter()
                .map(|(k, v, _)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        let base = origin.parent().unwrap_or(Path::new(""));
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", origin.display(), i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if !known(key) {
                bail!("{}:{}: unknown key `{key}`", origin.display(), i + 1);
            }
            let value = if is_path_key(key) && !value.is_empty() && Path::new(value).is_relative() {
                base.join(value).to_string_lossy().into_owned()
            } else {
                value.to_string()
            };
            self.values.insert(key.to_string(), value);
        }
        Ok(())
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        for (key, _, _) in KEYS {
            if let Some(v) = lookup(&env_name(key)) {
                self.values.insert(key.to_string(), v);
            }
        }
    }

    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects key=value, got `{assignment}`"))?;
        let key = key.trim();
        if !known(key) {
            bail!("unknown config key `{key}`");
        }
        self.values
            .insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Layers file, environment and overrides over the defaults.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = Config::defaults();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_text(&text, path)?;
        }
        cfg.apply_env(|name| std::env::var(name).ok());
        for o in overrides {
            cfg.set(o)?;
        }
        Ok(cfg)
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key);
        v.parse::<T>()
            .map_err(|e| anyhow!("config `{key}` = `{v}`: {e}"))
    }

    /// Path-valued key; errors when unset.
    pub fn path(&self, key: &str) -> Result<PathBuf> {
        match self.raw(key) {
            "" => bail!(
                "config key `{key}` is not set (use --config, --set {key}=... or {})",
                env_name(key)
            ),
            v => Ok(PathBuf::from(v)),
        }
    }

    pub fn optional_path(&self, key: &str) -> Option<PathBuf> {
        Some(self.raw(key))
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    }

    /// Resolved configuration as sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn digest(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn seed(&self) -> Result<u64> {
        self.get("seed")
    }

    pub fn analyzer(&self) -> Result<Analyzer> {
        Ok(Analyzer::new(self.get("analyzer.stem")?))
    }

    pub fn retrieval(&self) -> Result<RetrievalParams> {
        let params = RetrievalParams {
            mode: self.get::<RetrievalMode>("retrieval.mode")?,
            bm25: Bm25Params {
                k1: self.get("bm25.k1")?,
                b: self.get("bm25.b")?,
            },
            rm3: Rm3Params {
                fb_docs: self.get("rm3.fb_docs")?,
                fb_terms: self.get("rm3.fb_terms")?,
                original_weight: self.get("rm3.original_weight")?,
            },
        };
        params.bm25.validate()?;
        params.rm3.validate()?;
        Ok(params)
    }

    pub fn segmenter(&self) -> Result<SegmenterConfig> {
        Ok(SegmenterConfig::new(
            self.get("segmenter.window")?,
            self.get("segmenter.stride")?,
        )?)
    }

    fn train(&self, prefix: &str) -> Result<TrainConfig> {
        let key = |k: &str| format!("{prefix}.{k}");
        let cfg = TrainConfig {
            learning_rate: self.get(&key("learning_rate"))?,
            batch_size: self.get(&key("batch_size"))?,
            epochs: self.get(&key("epochs"))?,
            patience: self.get(&key("patience"))?,
            early_stop_delta: self.get(&key("early_stop_delta"))?,
            finetune_entity_embeddings: self.get("model.finetune_entity_embeddings")?,
            seed: self.seed()?,
            ..TrainConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn entity_train(&self) -> Result<TrainConfig> {
        self.train("entity_train")
    }

    pub fn dreq_train(&self) -> Result<TrainConfig> {
        self.train("dreq_train")
    }

    pub fn cutoffs(&self) -> Result<Cutoffs> {
        Ok(Cutoffs {
            precision: self.get("eval.precision_k")?,
            ndcg: self.get("eval.ndcg_k")?,
            recall: self.get("eval.recall_k")?,
        })
    }

    pub fn variant(&self) -> Result<Variant> {
        self.get("variant")
    }

    /// Scorer switches for `variant`, with the shared model options applied.
    pub fn model_config(&self, variant: Variant) -> Result<ModelConfig> {
        let top_k: usize = self.get("model.top_k_entities")?;
        Ok(ModelConfig {
            finetune_entity_embeddings: self.get("model.finetune_entity_embeddings")?,
            count_multiplicity: self.get("model.count_multiplicity")?,
            top_k_entities: (top_k > 0).then_some(top_k),
            ..variant.model_config()
        })
    }

    pub fn synth_dims(&self) -> Result<DimsConfig> {
        let d: usize = self.get("synth.dims")?;
        let dims = DimsConfig::uniform(d);
        dims.validate()?;
        Ok(dims)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            analyzer: self.analyzer()?,
            retrieval: self.retrieval()?,
            candidate_depth: self.get("retrieval.depth")?,
            folds: self.get("folds")?,
            seed: self.seed()?,
            entity_train: self.entity_train()?,
            dreq_train: self.dreq_train()?,
            segmenter: self.segmenter()?,
            cutoffs: self.cutoffs()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering_order() {
        let mut cfg = Config::defaults();
        cfg.apply_text(
            "bm25.k1 = 1.2  # tuned\nwork = out\n",
            Path::new("/etc/dreq/run.conf"),
        )
        .unwrap();
        assert_eq!(cfg.raw("bm25.k1"), "1.2");
        assert_eq!(cfg.raw("work"), "/etc/dreq/out");
        cfg.apply_env(|n| (n == "DREQ_BM25_K1").then(|| "1.5".to_string()));
        assert_eq!(cfg.get::<f64>("bm25.k1").unwrap(), 1.5);
        cfg.set("bm25.k1=2.0").unwrap();
        assert_eq!(cfg.retrieval().unwrap().bm25.k1, 2.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_fail() {
        let mut cfg = Config::defaults();
        let err = cfg
            .apply_text("bm25.k2 = 1\n", Path::new("x.conf"))
            .unwrap_err();
        assert!(err.to_string().contains("x.conf:1"), "{err}");
        assert!(cfg.set("nope=1").is_err());
        cfg.set("folds=five").unwrap();
        assert!(cfg.experiment().is_err());
        assert!(cfg.path("corpus").is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = Config::defaults();
        let mut b = Config::defaults();
        assert_eq!(a.digest(), b.digest());
        b.set("seed=1").unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        assert_eq!(env_name("rm3.fb_docs"), "DREQ_RM3_FB_DOCS");
    }

    #[test]
    fn defaults_parse() {
        let cfg = Config::defaults();
        cfg.experiment().unwrap();
        cfg.model_config(cfg.variant().unwrap()).unwrap();
        cfg.synth_dims().unwrap();
        assert_eq!(cfg.experiment().unwrap(), ExperimentConfig::default());
    }
}
