use std::collections::BTreeMap;

use super::qpp::{split_sizes, Tercile};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HelpedCounts {
    pub helped: usize,
    pub hurt: usize,
    pub unchanged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyBin {
    pub index: usize,
    pub query_ids: Vec<String>,
    pub baseline_mean: f64,
    pub system_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyReport {
    pub bins: Vec<DifficultyBin>,
    pub helped: HelpedCounts,
    /// Empty unless WIG values were supplied.
    pub terciles: BTreeMap<String, Tercile>,
}

fn check_aligned(baseline: &BTreeMap<String, f64>, system: &BTreeMap<String, f64>) -> Result<()> {
    if baseline.len() != system.len() || baseline.keys().ne(system.keys()) {
        let missing: Vec<&str> = baseline
            .keys()
            .filter(|q| !system.contains_key(*q))
            .chain(system.keys().filter(|q| !baseline.contains_key(*q)))
            .map(String::as_str)
            .collect();
        return Err(Error::InvalidArgument(format!(
            "per-query metrics are not aligned; unmatched queries: {}",
            missing.join(", ")
        )));
    }
    Ok(())
}

/// Counts queries where the system is strictly better, strictly worse or
/// equal to the baseline.
pub fn queries_helped(
    baseline: &BTreeMap<String, f64>,
    system: &BTreeMap<String, f64>,
) -> Result<HelpedCounts> {
    check_aligned(baseline, system)?;
    let mut c = HelpedCounts::default();
    for (q, b) in baseline {
        let s = system[q];
        if s > *b {
            c.helped += 1;
        } else if s < *b {
            c.hurt += 1;
        } else {
            c.unchanged += 1;
        }
    }
    Ok(c)
}

/// Sorts queries by baseline metric (ascending, ties by query id) and cuts
/// them into `min(bins, n)` contiguous bins, earlier bins taking the
/// remainder.
pub fn difficulty_bins(
    baseline: &BTreeMap<String, f64>,
    system: &BTreeMap<String, f64>,
    bins: usize,
) -> Result<Vec<DifficultyBin>> {
    check_aligned(baseline, system)?;
    if baseline.is_empty() {
        return Err(Error::Empty("query set"));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bin count must be positive".into()));
    }
    let mut order: Vec<(&String, f64)> = baseline.iter().map(|(q, v)| (q, *v)).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let mut it = order.into_iter();
    let mut out = Vec::new();
    for (index, size) in split_sizes(baseline.len(), bins.min(baseline.len()))
        .into_iter()
        .enumerate()
    {
        let members: Vec<(&String, f64)> = it.by_ref().take(size).collect();
        let n = members.len() as f64;
        out.push(DifficultyBin {
            index,
            baseline_mean: members.iter().map(|m| m.1).sum::<f64>() / n,
            system_mean: members.iter().map(|m| system[m.0]).sum::<f64>() / n,
            query_ids: members.into_iter().map(|m| m.0.clone()).collect(),
        });
    }
    Ok(out)
}

pub fn difficulty_report(
    baseline: &BTreeMap<String, f64>,
    system: &BTreeMap<String, f64>,
    wig: Option<&BTreeMap<String, f64>>,
) -> Result<DifficultyReport> {
    Ok(DifficultyReport {
        bins: difficulty_bins(baseline, system, DEFAULT_BINS)?,
        helped: queries_helped(baseline, system)?,
        terciles: match wig {
            Some(w) => super::qpp::wig_terciles(w)?,
            None => BTreeMap::new(),
        },
    })
}

impl DifficultyReport {
    /// `bin<TAB>queries<TAB>baseline<TAB>system` rows.
    pub fn bins_tsv(&self) -> String {
        let mut out = String::from("bin\tqueries\tbaseline\tsystem\n");
        for b in &self.bins {
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}\n",
                b.index,
                b.query_ids.len(),
                b.baseline_mean,
                b.system_mean
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metric(values: &[f64]) -> BTreeMap<String, f64> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("q{i:03}"), *v))
            .collect()
    }

    #[test]
    fn bin_sizes() {
        let base = metric(&(0..250).map(|i| i as f64).collect::<Vec<_>>());
        let bins = difficulty_bins(&base, &base, 20).unwrap();
        let sizes: Vec<usize> = bins.iter().map(|b| b.query_ids.len()).collect();
        assert_eq!(sizes, [vec![13; 10], vec![12; 10]].concat());
        let twenty = metric(&[0.5; 20]);
        let bins = difficulty_bins(&twenty, &twenty, 20).unwrap();
        assert!(bins.iter().all(|b| b.query_ids.len() == 1));
        let order: Vec<&str> = bins.iter().map(|b| b.query_ids[0].as_str()).collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(order, sorted);
        assert!(difficulty_bins(&BTreeMap::new(), &BTreeMap::new(), 20).is_err());
    }

    #[test]
    fn bins_sorted_by_baseline() {
        let base = metric(&[0.9, 0.1, 0.5, 0.3]);
        let sys = metric(&[1.0, 0.2, 0.4, 0.3]);
        let bins = difficulty_bins(&base, &sys, 2).unwrap();
        assert_eq!(bins[0].query_ids, vec!["q001", "q003"]);
        assert!((bins[0].baseline_mean - 0.2).abs() < 1e-15);
        assert!((bins[0].system_mean - 0.25).abs() < 1e-15);
        assert_eq!(bins[1].query_ids, vec!["q002", "q000"]);
    }

    #[test]
    fn helped_counts() {
        let base = metric(&[0.5, 0.5, 0.5, 0.2]);
        assert_eq!(
            queries_helped(&base, &base).unwrap(),
            HelpedCounts {
                helped: 0,
                hurt: 0,
                unchanged: 4
            }
        );
        let sys = metric(&[0.5 + 1e-9, 0.5, 0.5, 0.2]);
        assert_eq!(
            queries_helped(&base, &sys).unwrap(),
            HelpedCounts {
                helped: 1,
                hurt: 0,
                unchanged: 3
            }
        );
        let mixed = metric(&[0.6, 0.4, 0.5, 0.3]);
        assert_eq!(
            queries_helped(&base, &mixed).unwrap(),
            HelpedCounts {
                helped: 2,
                hurt: 1,
                unchanged: 1
            }
        );
        assert!(queries_helped(&base, &metric(&[0.1])).is_err());
    }
}
