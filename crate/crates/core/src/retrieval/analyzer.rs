use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

/// Lowercases, splits on non-alphanumeric characters and optionally stems
/// with the Snowball English (Porter2) stemmer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analyzer {
    pub stem: bool,
}

impl Analyzer {
    pub fn new(stem: bool) -> Self {
        Analyzer { stem }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let lower = text.to_lowercase();
        let tokens = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty());
        if self.stem {
            let stemmer = Stemmer::create(Algorithm::English);
            tokens.map(|t| stemmer.stem(t).into_owned()).collect()
        } else {
            tokens.map(str::to_string).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_and_lowercases() {
        let a = Analyzer::default();
        assert_eq!(
            a.tokenize("Black-Bear  ATTACKS, 2024!"),
            vec!["black", "bear", "attacks", "2024"]
        );
        assert!(a.tokenize(" -- ").is_empty());
    }

    #[test]
    fn stemming_is_optional() {
        let a = Analyzer::new(true);
        assert_eq!(a.tokenize("running attacks"), vec!["run", "attack"]);
    }
}
