//! Recall@K for paired image-text retrieval.
//!
//! Ground truth pairs image `i` with sentence `i`. Ties are broken in
//! favour of the lower index, so ranks are deterministic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::itm::SimilarityMatrix;

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecallAtK {
    pub k: usize,
    /// Percentage of images whose caption is in the top `k` sentences.
    pub image_to_text: f64,
    /// Percentage of sentences whose image is in the top `k` images.
    pub text_to_image: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalReport {
    pub m: usize,
    pub recalls: Vec<RecallAtK>,
}

impl RetrievalReport {
    pub fn at(&self, k: usize) -> Option<&RecallAtK> {
        self.recalls.iter().find(|r| r.k == k)
    }
}

/// 1-based rank of `target` among `len` candidates scored by `score`.
fn rank_of(target: usize, len: usize, score: impl Fn(usize) -> f64) -> usize {
    let s = score(target);
    1 + (0..len)
        .filter(|&j| {
            let v = score(j);
            v > s || (v == s && j < target)
        })
        .count()
}

/// Per-query ranks of the ground-truth partner, `(image→text, text→image)`.
pub fn ground_truth_ranks(scores: &SimilarityMatrix) -> (Vec<usize>, Vec<usize>) {
    let m = scores.m();
    let i2t = (0..m)
        .map(|i| rank_of(i, m, |j| scores.get(i, j)))
        .collect();
    let t2i = (0..m)
        .map(|j| rank_of(j, m, |i| scores.get(i, j)))
        .collect();
    (i2t, t2i)
}

fn recall(ranks: &[usize], k: usize) -> f64 {
    100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64
}

pub fn rank_retrieval(scores: &SimilarityMatrix, ks: &[usize]) -> Result<RetrievalReport> {
    if scores.m() == 0 {
        return Err(Error::EmptyInput);
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidParameter(
            "recall cutoffs must be a nonempty list of positive integers".into(),
        ));
    }
    let (i2t, t2i) = ground_truth_ranks(scores);
    Ok(RetrievalReport {
        m: scores.m(),
        recalls: ks
            .iter()
            .map(|&k| RecallAtK {
                k,
                image_to_text: recall(&i2t, k),
                text_to_image: recall(&t2i, k),
            })
            .collect(),
    })
}
