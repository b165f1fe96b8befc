//! Per-query ranking metrics over graded judgments.

use std::collections::BTreeMap;

use crate::corpus::Qrels;
use crate::error::{Error, Result};
use crate::retrieval::Ranking;

fn judgments<'a>(ranking: &Ranking, qrels: &'a Qrels) -> Option<&'a BTreeMap<String, u32>> {
    qrels.for_query(&ranking.query_id)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidArgument("cutoff k must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn relevant_in_top(ranking: &Ranking, qrels: &Qrels, k: usize) -> usize {
    ranking
        .ids()
        .take(k)
        .filter(|d| qrels.is_relevant(&ranking.query_id, d))
        .count()
}

/// Fraction of the top `k` slots holding a relevant document. Short
/// rankings count the missing slots as non-relevant.
pub fn precision_at_k(ranking: &Ranking, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    Ok(relevant_in_top(ranking, qrels, k) as f64 / k as f64)
}

pub fn recall_at_k(ranking: &Ranking, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    let r = qrels.relevant_count(&ranking.query_id);
    if r == 0 {
        return Ok(0.0);
    }
    Ok(relevant_in_top(ranking, qrels, k) as f64 / r as f64)
}

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

fn discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

/// nDCG with exponential gain `2^g - 1` and `log2(rank + 1)` discount.
/// Zero when the query has no relevant documents.
pub fn ndcg_at_k(ranking: &Ranking, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    let Some(judged) = judgments(ranking, qrels) else {
        return Ok(0.0);
    };
    let dcg: f64 = ranking
        .ids()
        .take(k)
        .enumerate()
        .map(|(i, d)| gain(judged.get(d).copied().unwrap_or(0)) / discount(i + 1))
        .sum();
    let mut grades: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
    grades.sort_unstable_by(|a, b| b.cmp(a));
    let ideal: f64 = grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / discount(i + 1))
        .sum();
    Ok(if ideal > 0.0 { dcg / ideal } else { 0.0 })
}

/// Uninterpolated average precision over all `R` relevant documents.
pub fn average_precision(ranking: &Ranking, qrels: &Qrels) -> f64 {
    let r = qrels.relevant_count(&ranking.query_id);
    if r == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in ranking.ids().enumerate() {
        if qrels.is_relevant(&ranking.query_id, d) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / r as f64
}

pub fn mean_average_precision<'a>(
    rankings: impl IntoIterator<Item = &'a Ranking>,
    qrels: &Qrels,
) -> f64 {
    let aps: Vec<f64> = rankings
        .into_iter()
        .map(|r| average_precision(r, qrels))
        .collect();
    if aps.is_empty() {
        0.0
    } else {
        aps.iter().sum::<f64>() / aps.len() as f64
    }
}
