//! Diachronic word embeddings aligned through a shared ("compass") context
//! matrix.

pub mod distance;
pub mod matrix;
pub mod sgns;
pub mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use distance::{build_distance_series, cosine_distance, DistanceSeries};
pub use matrix::EmbeddingMatrix;
pub use train::{balance_sample, train_compass, train_slice, CompassModel, SliceEmbeddings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dimension: usize,
    pub window: usize,
    pub negative: usize,
    pub min_count: u64,
    pub slice_min_count: u64,
    pub compass_epochs: usize,
    pub slice_epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    /// Set from the pipeline-level seed.
    #[serde(skip)]
    pub seed: u64,
    /// Documents per month kept by balanced sampling.
    pub monthly_quota: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dimension: 300,
            window: 5,
            negative: 5,
            min_count: 10,
            slice_min_count: 10,
            compass_epochs: 5,
            slice_epochs: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
            seed: 42,
            monthly_quota: 10_000,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("embedding window must be positive".into()));
        }
        if !(self.lr_start > 0.0 && self.lr_end >= 0.0 && self.lr_end <= self.lr_start) {
            return Err(Error::Config("learning rates must satisfy 0 <= lr_end <= lr_start, lr_start > 0".into()));
        }
        if self.monthly_quota == 0 {
            return Err(Error::Config("monthly_quota must be positive".into()));
        }
        Ok(())
    }
}
