use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy/dreq.conf")
}

fn dreq(work: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dreq"))
        .arg("--config")
        .arg(toy_config())
        .arg("--set")
        .arg(format!("work={}", work.display()))
        .args(args)
        .env_remove("DREQ_CONFIG")
        .output()
        .expect("spawn dreq")
}

fn ok(work: &Path, args: &[&str]) -> String {
    let out = dreq(work, args);
    assert!(
        out.status.success(),
        "dreq {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn pipeline(work: &Path, threads: &str) {
    let t = ["--threads", threads];
    ok(work, &["build-index"]);
    ok(work, &[&["retrieve"][..], &t].concat());
    ok(work, &["pool-entities"]);
    ok(work, &["train-entity-ranker"]);
    for mode in ["learned", "bm25", "geeer"] {
        ok(work, &[&["rank-entities", "--mode", mode][..], &t].concat());
    }
    ok(work, &["train-dreq"]);
    ok(work, &["train-dreq", "--variant", "rr"]);
    ok(work, &[&["rerank"][..], &t].concat());
    ok(work, &[&["rerank", "--variant", "rr"][..], &t].concat());
    ok(work, &[&["rerank", "--mode", "maxsimcos"][..], &t].concat());
    let run = work.join("runs/dreq.full.run");
    let cands = work.join("candidates.run");
    ok(
        work,
        &[
            "evaluate",
            "--run",
            run.to_str().unwrap(),
            "--baseline",
            cands.to_str().unwrap(),
        ],
    );
    ok(work, &["qpp"]);
    ok(
        work,
        &[
            "difficulty",
            "--baseline",
            cands.to_str().unwrap(),
            "--system",
            run.to_str().unwrap(),
        ],
    );
    ok(work, &["ablate"]);
}

/// Every artifact except the manifests, which record paths and timings.
fn artifacts(work: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![work.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                if path.file_name().unwrap() != "manifests" {
                    stack.push(path);
                }
            } else {
                out.insert(
                    path.strip_prefix(work).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

#[test]
fn toy_pipeline_is_complete_and_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), "1");
    pipeline(b.path(), "4");
    let left = artifacts(a.path());
    let right = artifacts(b.path());
    for expected in [
        "candidates.run",
        "runs/dreq.full.run",
        "runs/dreq.rr.run",
        "runs/maxsimcos.run",
        "models/full/fold0.model",
        "entity_heads/fold4.head",
        "reports/dreq.full.metrics.tsv",
        "reports/dreq.full.vs.candidates.ttest.tsv",
        "reports/wig.tsv",
        "reports/difficulty.bins.tsv",
        "reports/ablation.tsv",
        "runs/ablate.no-entity.run",
    ] {
        assert!(left.contains_key(Path::new(expected)), "missing {expected}");
    }
    assert_eq!(
        left.keys().collect::<Vec<_>>(),
        right.keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &left {
        assert!(
            bytes == &right[name],
            "{} differs between runs",
            name.display()
        );
    }
    let manifest = std::fs::read_to_string(a.path().join("manifests/train-dreq.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(json["config_digest"].as_str().unwrap().len(), 64);
    assert_eq!(json["seed"], 0);
}

#[test]
fn missing_upstream_artifact_names_the_step() {
    let work = tempfile::tempdir().unwrap();
    let out = dreq(work.path(), &["retrieve"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dreq build-index"), "{err}");
    ok(work.path(), &["build-index"]);
    ok(work.path(), &["retrieve"]);
    let out = dreq(work.path(), &["train-dreq"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rank-entities --mode learned"));
    let out = dreq(work.path(), &["rerank"]);
    assert!(!out.status.success());
}

#[test]
fn evaluate_lists_unknown_queries() {
    let work = tempfile::tempdir().unwrap();
    let run = work.path().join("odd.run");
    std::fs::write(
        &run,
        "q01 Q0 D0001 1 2.0 x\nzz9 Q0 D0001 1 1.0 x\nzz7 Q0 D0002 1 1.0 x\n",
    )
    .unwrap();
    let out = dreq(work.path(), &["evaluate", "--run", run.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("zz7") && err.contains("zz9"), "{err}");
    assert!(!work.path().join("reports").exists());
}

#[test]
fn unknown_flag_prints_usage() {
    let work = tempfile::tempdir().unwrap();
    let out = dreq(work.path(), &["build-index", "--no-such-flag"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = dreq(work.path(), &["--set", "bm25.k9=1", "build-index"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bm25.k9"));
}

#[test]
fn environment_overrides_config_file() {
    let work = tempfile::tempdir().unwrap();
    ok(work.path(), &["build-index"]);
    let out = Command::new(env!("CARGO_BIN_EXE_dreq"))
        .arg("--config")
        .arg(toy_config())
        .arg("--set")
        .arg(format!("work={}", work.path().display()))
        .arg("retrieve")
        .env("DREQ_RETRIEVAL_DEPTH", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    let run = std::fs::read_to_string(work.path().join("candidates.run")).unwrap();
    assert_eq!(run.lines().filter(|l| l.starts_with("q01 ")).count(), 7);
}

#[test]
fn seed_changes_folds_and_digest() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, seed) in [(a.path(), "1"), (b.path(), "2")] {
        ok(dir, &["--seed", seed, "build-index"]);
        ok(dir, &["--seed", seed, "retrieve"]);
        ok(dir, &["--seed", seed, "pool-entities"]);
        ok(dir, &["--seed", seed, "train-entity-ranker"]);
    }
    let read = |d: &Path, f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    assert_ne!(read(a.path(), "folds.json"), read(b.path(), "folds.json"));
    let digest = |d: &Path| {
        let v: serde_json::Value =
            serde_json::from_str(&read(d, "manifests/retrieve.json")).unwrap();
        v["config_digest"].as_str().unwrap().to_string()
    };
    assert_ne!(digest(a.path()), digest(b.path()));
}
