//! Effectiveness metrics, significance testing, query performance
//! prediction and per-query difficulty analysis.

mod difficulty;
mod metrics;
mod qpp;
mod stats;

use std::collections::BTreeMap;

pub use difficulty::{
    difficulty_bins, difficulty_report, queries_helped, DifficultyBin, DifficultyReport,
    HelpedCounts, DEFAULT_BINS,
};
pub use metrics::{
    average_precision, mean_average_precision, ndcg_at_k, precision_at_k, recall_at_k,
};
pub use qpp::{wig, wig_terciles, Tercile};
pub use stats::{
    incomplete_beta, ln_gamma, paired_t_test, student_t_two_tailed, TTestResult, SIGNIFICANCE_LEVEL,
};

use crate::corpus::Qrels;
use crate::error::{Error, Result};
use crate::retrieval::Ranking;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cutoffs {
    pub precision: usize,
    pub ndcg: usize,
    pub recall: usize,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs {
            precision: 20,
            ndcg: 20,
            recall: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QueryMetrics {
    pub map: f64,
    pub ndcg: f64,
    pub precision: f64,
    pub recall: f64,
}

impl QueryMetrics {
    pub fn compute(ranking: &Ranking, qrels: &Qrels, cutoffs: Cutoffs) -> Result<Self> {
        Ok(QueryMetrics {
            map: average_precision(ranking, qrels),
            ndcg: ndcg_at_k(ranking, qrels, cutoffs.ndcg)?,
            precision: precision_at_k(ranking, qrels, cutoffs.precision)?,
            recall: recall_at_k(ranking, qrels, cutoffs.recall)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub tag: String,
    pub cutoffs: Cutoffs,
    pub per_query: BTreeMap<String, QueryMetrics>,
    pub mean: QueryMetrics,
}

/// Evaluates a run over every query in `qrels`. Judged queries missing from
/// the run score zero; run queries absent from `qrels` are an error.
pub fn evaluate_run(
    runs: &BTreeMap<String, Ranking>,
    qrels: &Qrels,
    tag: &str,
    cutoffs: Cutoffs,
) -> Result<MetricsReport> {
    let unknown: Vec<&str> = runs
        .keys()
        .filter(|q| !qrels.contains_query(q))
        .map(String::as_str)
        .collect();
    if !unknown.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "run references queries without judgments: {}",
            unknown.join(", ")
        )));
    }
    let mut per_query = BTreeMap::new();
    for qid in qrels.query_ids() {
        let metrics = match runs.get(qid) {
            Some(r) => QueryMetrics::compute(r, qrels, cutoffs)?,
            None => QueryMetrics::default(),
        };
        per_query.insert(qid.to_string(), metrics);
    }
    if per_query.is_empty() {
        return Err(Error::Empty("qrels"));
    }
    let n = per_query.len() as f64;
    let sum = |f: fn(&QueryMetrics) -> f64| per_query.values().map(f).sum::<f64>() / n;
    let mean = QueryMetrics {
        map: sum(|m| m.map),
        ndcg: sum(|m| m.ndcg),
        precision: sum(|m| m.precision),
        recall: sum(|m| m.recall),
    };
    Ok(MetricsReport {
        tag: tag.to_string(),
        cutoffs,
        per_query,
        mean,
    })
}

impl MetricsReport {
    pub fn metric_names(&self) -> [String; 4] {
        [
            "map".to_string(),
            format!("ndcg@{}", self.cutoffs.ndcg),
            format!("p@{}", self.cutoffs.precision),
            format!("recall@{}", self.cutoffs.recall),
        ]
    }

    /// Per-query values of one metric by name, as accepted by `metric_names`.
    pub fn per_query_metric(&self, name: &str) -> Result<BTreeMap<String, f64>> {
        let idx = self
            .metric_names()
            .iter()
            .position(|m| m == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{name}`")))?;
        Ok(self
            .per_query
            .iter()
            .map(|(q, m)| (q.clone(), [m.map, m.ndcg, m.precision, m.recall][idx]))
            .collect())
    }

    /// `metric<TAB>query_id|ALL<TAB>value` rows, per-query rows first.
    pub fn to_tsv(&self) -> String {
        let names = self.metric_names();
        let mut out = String::new();
        let mut emit = |qid: &str, m: &QueryMetrics| {
            for (name, v) in names.iter().zip([m.map, m.ndcg, m.precision, m.recall]) {
                out.push_str(&format!("{name}\t{qid}\t{v:.6}\n"));
            }
        };
        for (q, m) in &self.per_query {
            emit(q, m);
        }
        emit("ALL", &self.mean);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (BTreeMap<String, Ranking>, Qrels) {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a", 1).unwrap();
        qrels.insert("q2", "b", 2).unwrap();
        let run = Ranking::from_scores("q1", vec![("a".into(), 1.0), ("b".into(), 0.5)]);
        (BTreeMap::from([("q1".to_string(), run)]), qrels)
    }

    #[test]
    fn means_and_missing_queries() {
        let (runs, qrels) = setup();
        let r = evaluate_run(&runs, &qrels, "sys", Cutoffs::default()).unwrap();
        assert_eq!(r.per_query["q1"].map, 1.0);
        assert_eq!(r.per_query["q2"], QueryMetrics::default());
        assert_eq!(r.mean.map, 0.5);
        assert_eq!(r.mean.precision, 0.025);
        let tsv = r.to_tsv();
        assert!(tsv.contains("ndcg@20\tALL\t0.500000\n"));
        assert_eq!(tsv.lines().count(), 12);
        assert_eq!(r.per_query_metric("ndcg@20").unwrap()["q1"], 1.0);
        assert!(r.per_query_metric("bogus").is_err());
    }

    #[test]
    fn unknown_queries_listed() {
        let (mut runs, qrels) = setup();
        runs.insert("zz".into(), Ranking::from_scores("zz", vec![]));
        runs.insert("yy".into(), Ranking::from_scores("yy", vec![]));
        let err = evaluate_run(&runs, &qrels, "sys", Cutoffs::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("yy, zz"), "{err}");
    }
}
