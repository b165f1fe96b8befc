use crate::error::{Error, Result};
use crate::linalg::sigmoid;

const CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy of `sigmoid(logit)` against 0/1 labels, with
/// probabilities clamped to `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(logits: &[f64], labels: &[f64]) -> Result<f64> {
    if logits.len() != labels.len() {
        return Err(Error::Shape(format!(
            "bce: {} logits, {} labels",
            logits.len(),
            labels.len()
        )));
    }
    if logits.is_empty() {
        return Err(Error::Empty("bce batch"));
    }
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| bce_from_prob(sigmoid(z), y))
        .sum();
    Ok(total / logits.len() as f64)
}

pub fn bce_from_prob(p: f64, y: f64) -> f64 {
    let p = p.clamp(CLAMP, 1.0 - CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// d(mean BCE)/d(logit_i) = (sigmoid(logit_i) - y_i) / N.
pub fn bce_logit_grads(logits: &[f64], labels: &[f64]) -> Vec<f64> {
    let n = logits.len() as f64;
    logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| (sigmoid(z) - y) / n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn logit(p: f64) -> f64 {
        (p / (1.0 - p)).ln()
    }

    #[test]
    fn worked_values() {
        assert!(bce_from_prob(1.0, 1.0) < 1e-11);
        assert!((bce_loss(&[0.0], &[1.0]).unwrap() - 2f64.ln()).abs() < 1e-12);
        let l = bce_loss(&[logit(0.8), logit(0.3)], &[1.0, 0.0]).unwrap();
        assert!((l - 0.2899092).abs() < 1e-6);
        assert!((l - (-(0.8f64.ln()) - 0.7f64.ln()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(bce_loss(&[], &[]).is_err());
        assert!(bce_loss(&[0.0], &[]).is_err());
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let l = bce_loss(&[1e4, -1e4], &[0.0, 1.0]).unwrap();
        assert!(l.is_finite());
        assert!((l + CLAMP.ln()).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn non_negative(z in proptest::collection::vec(-30.0f64..30.0, 1..10), bits in proptest::collection::vec(0u8..2, 10)) {
            let y: Vec<f64> = bits[..z.len()].iter().map(|&b| b as f64).collect();
            prop_assert!(bce_loss(&z, &y).unwrap() >= 0.0);
        }
    }
}
