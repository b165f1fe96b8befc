use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::config::Config;

/// Artifact file names inside the work directory, with the subcommand that
/// produces each one.
pub mod artifact {
    pub const INDEX: (&str, &str) = ("index.json", "build-index");
    pub const CANDIDATES: (&str, &str) = ("candidates.run", "retrieve");
    pub const POOLED: (&str, &str) = ("pooled.tsv", "pool-entities");
    pub const EMBEDDINGS: (&str, &str) = ("embeddings", "synth-embed");
    pub const FOLDS: (&str, &str) = ("folds.json", "train-entity-ranker");
    pub const ENTITY_HEADS: (&str, &str) = ("entity_heads", "train-entity-ranker");
    pub const MODELS: (&str, &str) = ("models", "train-dreq");
}

/// Writes `contents` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(tmp.path(), std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    config_digest: String,
    seed: u64,
    inputs: Vec<String>,
    outputs: Vec<String>,
    stage_ms: BTreeMap<String, u128>,
}

/// Artifact directory plus the bookkeeping of one subcommand invocation.
pub struct Workspace<'a> {
    pub config: &'a Config,
    pub root: PathBuf,
    subcommand: &'static str,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    stages: BTreeMap<String, u128>,
}

impl<'a> Workspace<'a> {
    pub fn new(config: &'a Config, subcommand: &'static str) -> Result<Self> {
        let root = config.path("work")?;
        Ok(Workspace {
            config,
            root,
            subcommand,
            inputs: Vec::new(),
            outputs: Vec::new(),
            stages: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Path of an upstream artifact, which must exist.
    pub fn require(&mut self, (name, producer): (&str, &str)) -> Result<PathBuf> {
        let path = self.path(name);
        self.require_path(path, producer)
    }

    pub fn require_path(&mut self, path: PathBuf, producer: &str) -> Result<PathBuf> {
        if !path.exists() {
            bail!("missing {}: run `dreq {producer}` first", path.display());
        }
        self.inputs.push(path.clone());
        Ok(path)
    }

    /// A configured input file.
    pub fn input(&mut self, key: &str) -> Result<PathBuf> {
        let path = self.config.path(key)?;
        if !path.exists() {
            bail!("{key} file {} does not exist", path.display());
        }
        self.inputs.push(path.clone());
        Ok(path)
    }

    pub fn optional_input(&mut self, key: &str) -> Option<PathBuf> {
        let path = self.config.optional_path(key)?;
        self.inputs.push(path.clone());
        Some(path)
    }

    /// The embedding directory: the configured one, else `synth-embed` output.
    pub fn embeddings_dir(&mut self) -> Result<PathBuf> {
        match self.config.optional_path("embeddings") {
            Some(dir) => self.require_path(dir, "synth-embed (or set `embeddings`)"),
            None => self.require(artifact::EMBEDDINGS),
        }
    }

    pub fn write(&mut self, path: PathBuf, contents: impl AsRef<[u8]>) -> Result<()> {
        write_atomic(&path, contents.as_ref())?;
        self.outputs.push(path);
        Ok(())
    }

    pub fn write_name(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        self.write(self.path(name), contents)
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn stage<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let started = Instant::now();
        let out = f(self)?;
        self.stages
            .insert(stage.to_string(), started.elapsed().as_millis());
        Ok(out)
    }

    /// Writes `manifests/<subcommand>.json`.
    pub fn finish(self) -> Result<()> {
        let show = |v: &[PathBuf]| {
            v.iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
        };
        let manifest = Manifest {
            subcommand: self.subcommand,
            config_digest: self.config.digest(),
            seed: self.config.seed()?,
            inputs: show(&self.inputs),
            outputs: show(&self.outputs),
            stage_ms: self.stages,
        };
        let path = self
            .root
            .join("manifests")
            .join(format!("{}.json", self.subcommand));
        write_atomic(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/out.txt");
        write_atomic(&path, b"first version").unwrap();
        write_atomic(&path, b"2").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"2");
        assert_eq!(
            std::fs::read_dir(path.parent().unwrap()).unwrap().count(),
            1
        );
    }

    #[test]
    fn missing_artifact_names_producer() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = Config::defaults();
        cfg.set(&format!("work={}", dir.path().display())).unwrap();
        let mut ws = Workspace::new(&cfg, "rerank").unwrap();
        let err = ws.require(artifact::CANDIDATES).unwrap_err();
        assert!(err.to_string().contains("dreq retrieve"), "{err}");
    }
}
