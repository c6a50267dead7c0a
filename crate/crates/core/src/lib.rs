//! Evaluation metrics for text-to-image generation over precomputed
//! embeddings.
//!
//! - [`stats`] and [`frechet`]: Gaussian statistics of feature sets and the
//!   Fréchet distance between them.
//! - [`cmd`]: the Cross Model Distance and its image-text consistency term.
//! - [`itm`] and [`retrieval`]: image-text matching scores, contrastive
//!   losses and Recall@K.
//! - [`gan`]: stage-wise adversarial loss formulas.
//! - [`io`]: the `.grb` tensor, `.stats` and bundle formats.
//! - [`cli`]: the `t2ieval` command-line front end.

pub mod cli;
pub mod cmd;
pub mod embedding;
pub mod error;
pub mod frechet;
pub mod gan;
pub mod io;
pub mod itm;
pub mod retrieval;
pub mod stats;

pub use cmd::{cmd_expanded, compute_cmd, compute_itdis, CmdReport, RegularizationFlags};
pub use embedding::EmbeddingMatrix;
pub use error::{Error, Result};
pub use frechet::{frechet_distance, frechet_distance_detailed, sqrtm_psd, FrechetDistance};
pub use gan::{
    d_adversarial_loss, g2_total, g3_total, g_adversarial_loss, mean_pool_words, ScoreBatch,
};
pub use itm::{
    attention_context, build_similarity_matrix, contrastive_loss, itm_total, sentence_score,
    word_region_score, CaptionBundle, MatchLevel, SimilarityMatrix, WordRegionParams,
};
pub use retrieval::{rank_retrieval, RecallAtK, RetrievalReport};
pub use stats::{estimate_stats, merge_stats, GaussianStats};
