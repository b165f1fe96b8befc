use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::retrieval::Ranking;

/// Weighted information gain of a candidate list. The collection term is
/// the mean score over the whole list.
pub fn wig(query_term_count: usize, ranking: &Ranking, k: usize) -> Result<f64> {
    if query_term_count == 0 {
        return Err(Error::InvalidArgument(format!(
            "query {} has no terms",
            ranking.query_id
        )));
    }
    if k == 0 || k > ranking.len() {
        return Err(Error::InvalidArgument(format!(
            "WIG k={k} but query {} has {} candidates",
            ranking.query_id,
            ranking.len()
        )));
    }
    let n = ranking.len() as f64;
    let collection = ranking.entries.iter().map(|e| e.score).sum::<f64>() / n;
    let gain: f64 = ranking.entries[..k]
        .iter()
        .map(|e| e.score - collection)
        .sum();
    Ok(gain / k as f64 / (query_term_count as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tercile {
    Easy,
    Medium,
    Hard,
}

impl fmt::Display for Tercile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tercile::Easy => "easy",
            Tercile::Medium => "medium",
            Tercile::Hard => "hard",
        })
    }
}

/// Splits queries into thirds by descending WIG (ties by query id).
/// Remainders go to the earlier groups.
pub fn wig_terciles(wig_by_query: &BTreeMap<String, f64>) -> Result<BTreeMap<String, Tercile>> {
    let n = wig_by_query.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "terciles need at least 3 queries, got {n}"
        )));
    }
    let mut order: Vec<(&String, f64)> = wig_by_query.iter().map(|(q, w)| (q, *w)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let sizes = split_sizes(n, 3);
    let labels = [Tercile::Easy, Tercile::Medium, Tercile::Hard];
    let mut out = BTreeMap::new();
    let mut it = order.into_iter();
    for (size, label) in sizes.into_iter().zip(labels) {
        for (q, _) in it.by_ref().take(size) {
            out.insert(q.clone(), label);
        }
    }
    Ok(out)
}

/// Sizes of `parts` contiguous groups over `n` items, larger groups first.
pub(crate) fn split_sizes(n: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| n / parts + usize::from(i < n % parts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(scores: &[f64]) -> Ranking {
        Ranking::from_scores(
            "q",
            scores
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("d{i}"), *s))
                .collect(),
        )
    }

    #[test]
    fn wig_examples() {
        assert_eq!(wig(3, &ranking(&[2.0, 2.0, 2.0, 2.0]), 2).unwrap(), 0.0);
        let r = ranking(&[5.0, 4.0, 2.0, 1.0]);
        let got = wig(4, &r, 2).unwrap();
        let expected = ((5.0 - 3.0) + (4.0 - 3.0)) / 2.0 / 2.0;
        assert!((got - expected).abs() < 1e-15);
        assert!(wig(4, &r, 5).is_err());
        assert!(wig(0, &r, 2).is_err());
    }

    #[test]
    fn tercile_sizes() {
        for (n, sizes) in [(9, [3, 3, 3]), (10, [4, 3, 3]), (11, [4, 4, 3])] {
            let w: BTreeMap<String, f64> = (0..n).map(|i| (format!("q{i:02}"), i as f64)).collect();
            let t = wig_terciles(&w).unwrap();
            for (label, size) in [Tercile::Easy, Tercile::Medium, Tercile::Hard]
                .iter()
                .zip(sizes)
            {
                assert_eq!(t.values().filter(|x| *x == label).count(), size);
            }
        }
        assert!(wig_terciles(&BTreeMap::from([("a".to_string(), 1.0)])).is_err());
    }

    #[test]
    fn tercile_assignment() {
        let w: BTreeMap<String, f64> =
            [("a", 0.1), ("b", 0.9), ("c", 0.5), ("d", 0.5), ("e", -1.0)]
                .iter()
                .map(|(q, v)| (q.to_string(), *v))
                .collect();
        let t = wig_terciles(&w).unwrap();
        assert_eq!(t["b"], Tercile::Easy);
        assert_eq!(t["c"], Tercile::Easy);
        assert_eq!(t["d"], Tercile::Medium);
        assert_eq!(t["a"], Tercile::Medium);
        assert_eq!(t["e"], Tercile::Hard);
    }
}
