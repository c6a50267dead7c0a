//! Stage-wise adversarial loss formulas over batches of discriminator
//! probabilities. Batch means stand in for expectations.

use crate::embedding::EmbeddingMatrix;
use crate::error::{ensure_finite, Error, Result};
use crate::itm::DEFAULT_LAMBDA1;

/// Probabilities are clamped to `[SCORE_EPS, 1 - SCORE_EPS]`.
pub const SCORE_EPS: f64 = 1e-7;

/// Default weight of the sentence-level matching loss in the second stage.
pub const DEFAULT_STAGE2_SENTENCE_WEIGHT: f64 = DEFAULT_LAMBDA1;

/// Discriminator outputs `D(x)` for a batch, clamped away from 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBatch {
    values: Vec<f64>,
}

impl ScoreBatch {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyBatch);
        }
        ensure_finite(values)?;
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "discriminator score {v} is not a probability"
            )));
        }
        Ok(Self {
            values: values
                .iter()
                .map(|v| v.clamp(SCORE_EPS, 1.0 - SCORE_EPS))
                .collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn mean_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.values.iter().map(|&v| f(v)).sum::<f64>() / self.values.len() as f64
    }
}

/// `−½·mean(ln D(real)) − ½·mean(ln(1 − D(fake)))`.
///
/// Serves the unconditional first stage and both conditional stages; any
/// conditioning happens upstream of the scores.
pub fn d_adversarial_loss(real: &ScoreBatch, fake: &ScoreBatch) -> f64 {
    -0.5 * real.mean_of(f64::ln) - 0.5 * fake.mean_of(|v| (1.0 - v).ln())
}

/// `−½·mean(ln D(fake))`.
pub fn g_adversarial_loss(fake: &ScoreBatch) -> f64 {
    -0.5 * fake.mean_of(f64::ln)
}

/// Second-stage generator objective: conditional adversarial loss plus the
/// weighted sentence-level matching loss.
pub fn g2_total(g_cond: f64, itm_sentence: f64, weight_s: f64) -> Result<f64> {
    ensure_finite(&[g_cond, itm_sentence, weight_s])?;
    Ok(g_cond + weight_s * itm_sentence)
}

/// Third-stage generator objective:
/// `g_cond + λ1·itm_sentence + λ2·itm_word`.
pub fn g3_total(
    g_cond: f64,
    itm_sentence: f64,
    itm_word: f64,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    ensure_finite(&[g_cond, itm_sentence, itm_word, lambda1, lambda2])?;
    Ok(g_cond + lambda1 * itm_sentence + lambda2 * itm_word)
}

/// Column-wise mean of a caption's word vectors.
///
/// Each column is summed in sorted order, so the result is bit-identical
/// under any reordering of the words.
pub fn mean_pool_words(words: &EmbeddingMatrix) -> Result<Vec<f64>> {
    if words.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    let t = words.rows() as f64;
    let mut column = Vec::with_capacity(words.rows());
    Ok((0..words.dim())
        .map(|k| {
            column.clear();
            column.extend(words.iter_rows().map(|r| r[k]));
            column.sort_by(f64::total_cmp);
            column.iter().sum::<f64>() / t
        })
        .collect())
}
