//! TREC run files: `qid Q0 docid rank score tag`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::retrieval::{RankedItem, Ranking};

/// Serializes rankings in the order given, scores with six decimals.
pub fn format_run<'a, I>(rankings: I, tag: &str) -> String
where
    I: IntoIterator<Item = &'a Ranking>,
{
    let mut out = String::new();
    for r in rankings {
        for e in &r.entries {
            let _ = writeln!(
                out,
                "{} Q0 {} {} {:.6} {}",
                r.query_id, e.id, e.rank, e.score, tag
            );
        }
    }
    out
}

/// Parses a run into per-query rankings ordered by the rank column.
pub fn parse_run(text: &str, origin: &Path) -> Result<BTreeMap<String, Ranking>> {
    let mut runs: BTreeMap<String, Vec<RankedItem>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 {
            return Err(Error::parse(
                origin,
                i + 1,
                "expected `qid Q0 docid rank score tag`",
            ));
        }
        let rank: usize = fields[3]
            .parse()
            .map_err(|_| Error::parse(origin, i + 1, format!("bad rank `{}`", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| Error::parse(origin, i + 1, format!("bad score `{}`", fields[4])))?;
        runs.entry(fields[0].to_string())
            .or_default()
            .push(RankedItem {
                id: fields[2].to_string(),
                score,
                rank,
            });
    }
    let mut out = BTreeMap::new();
    for (qid, mut entries) in runs {
        entries.sort_by_key(|e| e.rank);
        let ranking = Ranking {
            query_id: qid.clone(),
            entries,
        };
        ranking
            .validate()
            .map_err(|e| Error::parse(origin, 0, e.to_string()))?;
        out.insert(qid, ranking);
    }
    Ok(out)
}

pub fn load_run(path: &Path) -> Result<BTreeMap<String, Ranking>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run(&text, path)
}
