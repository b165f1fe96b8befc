//! Pointwise binary cross-entropy training with Adam.

mod adam;
mod examples;
mod folds;
mod loss;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use examples::{build_doc_examples, build_entity_examples, TrainingExample};
pub use folds::{make_folds, Fold, FoldPlan};
pub use loss::{bce_from_prob, bce_logit_grads, bce_loss};
pub use trainer::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Update entity embeddings through the entity-centric embedding.
    pub finetune_entity_embeddings: bool,
    /// Stop once the epoch loss improved by less than this over `patience` epochs.
    pub early_stop_delta: f64,
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            batch_size: 20,
            epochs: 20,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            finetune_entity_embeddings: false,
            early_stop_delta: 1e-5,
            patience: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "training needs learning_rate > 0 and batch_size >= 1, got {} and {}",
                self.learning_rate, self.batch_size
            )));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    /// True once the loss has stalled: `history[e - patience] - history[e] < delta`.
    pub fn should_stop(&self, history: &[f64]) -> bool {
        let n = history.len();
        self.patience > 0
            && n > self.patience
            && history[n - 1 - self.patience] - history[n - 1] < self.early_stop_delta
    }
}
