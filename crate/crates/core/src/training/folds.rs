use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Query-level cross-validation plan. Test sets partition the queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Index of the fold whose test set holds the query.
    pub fn test_fold_of(&self, query_id: &str) -> Option<usize> {
        self.folds
            .iter()
            .position(|f| f.test.iter().any(|q| q == query_id))
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let all: HashSet<&str> = self
            .folds
            .iter()
            .flat_map(|f| f.train.iter().chain(&f.test))
            .map(String::as_str)
            .collect();
        for (i, f) in self.folds.iter().enumerate() {
            let train: HashSet<&str> = f.train.iter().map(String::as_str).collect();
            for q in &f.test {
                if !seen.insert(q.as_str()) {
                    return Err(Error::InvalidArgument(format!(
                        "query {q} in more than one test fold"
                    )));
                }
                if train.contains(q.as_str()) {
                    return Err(Error::InvalidArgument(format!(
                        "query {q} in train and test of fold {i}"
                    )));
                }
            }
            if train.len() + f.test.len() != all.len() {
                return Err(Error::InvalidArgument(format!(
                    "fold {i} does not cover every query"
                )));
            }
        }
        if seen.len() != all.len() {
            return Err(Error::InvalidArgument(
                "test folds do not cover every query".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fold plan serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let plan: FoldPlan =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }
}

/// Seeded shuffle, then query `i` of the shuffled order goes to test fold `i % k`.
pub fn make_folds(query_ids: &[String], k: usize, seed: u64) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one fold".into()));
    }
    let unique: HashSet<&String> = query_ids.iter().collect();
    if unique.len() != query_ids.len() {
        return Err(Error::InvalidArgument("duplicate query ids".into()));
    }
    if query_ids.len() < k {
        return Err(Error::InvalidArgument(format!(
            "{} queries cannot fill {k} folds",
            query_ids.len()
        )));
    }
    let mut shuffled = query_ids.to_vec();
    shuffled.sort();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut tests: Vec<Vec<String>> = vec![Vec::new(); k];
    for (i, q) in shuffled.into_iter().enumerate() {
        tests[i % k].push(q);
    }
    let folds = (0..k)
        .map(|i| {
            let mut train: Vec<String> = tests
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, t)| t.iter().cloned())
                .collect();
            train.sort();
            let mut test = tests[i].clone();
            test.sort();
            Fold { train, test }
        })
        .collect();
    Ok(FoldPlan { seed, folds })
}
