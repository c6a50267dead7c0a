//! On-disk formats: `.grb` tensors, `.stats` statistics and bundles.

pub mod bundle;
pub mod stats_file;
pub mod tensor;

use std::path::Path;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::stats::GaussianStats;

pub use bundle::{load_bundle, write_bundle, Bundle, BundleCounts, Manifest};
pub use stats_file::{read_stats, write_stats, STATS_MAGIC};
pub use tensor::{read_tensor, write_tensor, Dtype, Tensor, TensorData, TENSOR_MAGIC};

/// A feature distribution given either as raw embeddings or as cached
/// statistics.
#[derive(Debug, Clone)]
pub enum FeatureSource {
    Embeddings(EmbeddingMatrix),
    Stats(GaussianStats),
}

/// Reads a `.grb` embedding tensor or a `.stats` file, chosen by magic.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureSource> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&STATS_MAGIC) {
        stats_file::decode_stats(&bytes).map(FeatureSource::Stats)
    } else {
        tensor::decode_tensor(&bytes)?
            .to_embedding_matrix()
            .map(FeatureSource::Embeddings)
    }
}
