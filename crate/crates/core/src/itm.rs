//! Image-text matching: sentence and word-region scores, attention context
//! vectors, batch contrastive losses and the weighted ITM total.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{dot, l2_norm, EmbeddingMatrix};
use crate::error::{ensure_finite, Error, Result};

/// Contrastive temperature.
pub const DEFAULT_GAMMA: f64 = 10.0;
/// Attention sharpness for word-region contexts.
pub const DEFAULT_GAMMA1: f64 = 4.0;
/// Aggregation sharpness for word relevances.
pub const DEFAULT_GAMMA2: f64 = 5.0;
/// Weight of the sentence-level losses.
pub const DEFAULT_LAMBDA1: f64 = 4.0;
/// Weight of the word-level losses.
pub const DEFAULT_LAMBDA2: f64 = 1.0;

/// Square matrix of matching scores; entry `(i, j)` scores image `i`
/// against sentence `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    m: usize,
    scores: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds an `rows x cols` matrix from row-major scores.
    pub fn new(rows: usize, cols: usize, scores: Vec<f64>) -> Result<Self> {
        if rows != cols {
            return Err(Error::NonSquare { rows, cols });
        }
        if scores.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} score matrix needs {} values, got {}",
                rows * cols,
                scores.len()
            )));
        }
        if let Some(index) = scores.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(Self { m: rows, scores })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let mut scores = Vec::with_capacity(m * m);
        for row in rows {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::NonSquare {
                    rows: m,
                    cols: row.len(),
                });
            }
            scores.extend_from_slice(row);
        }
        Self::new(m, m, scores)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, image: usize, sentence: usize) -> f64 {
        self.scores[image * self.m + sentence]
    }

    pub fn row(&self, image: usize) -> &[f64] {
        &self.scores[image * self.m..(image + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }

    pub fn transpose(&self) -> SimilarityMatrix {
        let m = self.m;
        let scores = (0..m * m).map(|k| self.get(k % m, k / m)).collect();
        SimilarityMatrix { m, scores }
    }

    /// Applies `f` to every entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SimilarityMatrix> {
        Self::new(self.m, self.m, self.scores.iter().map(|&v| f(v)).collect())
    }
}

/// Paired image and caption embeddings for a batch of `M` pairs.
///
/// Region and word features are optional so sentence-level workflows can
/// run without them; word-level scoring requires both.
#[derive(Debug, Clone)]
pub struct CaptionBundle {
    images: EmbeddingMatrix,
    sentences: EmbeddingMatrix,
    regions: Option<Vec<EmbeddingMatrix>>,
    words: Option<Vec<EmbeddingMatrix>>,
}

impl CaptionBundle {
    pub fn new(
        images: EmbeddingMatrix,
        sentences: EmbeddingMatrix,
        regions: Option<Vec<EmbeddingMatrix>>,
        words: Option<Vec<EmbeddingMatrix>>,
    ) -> Result<Self> {
        let m = images.rows();
        let d = images.dim();
        if sentences.rows() != m {
            return Err(Error::ShapeMismatch(format!(
                "{m} images but {} sentences",
                sentences.rows()
            )));
        }
        if sentences.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: sentences.dim(),
            });
        }
        for (name, group) in [("region", &regions), ("word", &words)] {
            let Some(group) = group else { continue };
            if group.len() != m {
                return Err(Error::ShapeMismatch(format!(
                    "{m} pairs but {} {name} groups",
                    group.len()
                )));
            }
            for (k, block) in group.iter().enumerate() {
                if block.rows() == 0 {
                    return Err(Error::ShapeMismatch(format!("{name} group {k} is empty")));
                }
                if block.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: block.dim(),
                    });
                }
            }
        }
        Ok(Self {
            images,
            sentences,
            regions,
            words,
        })
    }

    pub fn m(&self) -> usize {
        self.images.rows()
    }

    pub fn dim(&self) -> usize {
        self.images.dim()
    }

    pub fn images(&self) -> &EmbeddingMatrix {
        &self.images
    }

    pub fn sentences(&self) -> &EmbeddingMatrix {
        &self.sentences
    }

    pub fn regions(&self) -> Option<&[EmbeddingMatrix]> {
        self.regions.as_deref()
    }

    pub fn words(&self) -> Option<&[EmbeddingMatrix]> {
        self.words.as_deref()
    }

    /// Longest caption in words, if word features are present.
    pub fn max_words(&self) -> Option<usize> {
        self.words
            .as_ref()
            .and_then(|w| w.iter().map(EmbeddingMatrix::rows).max())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchLevel {
    Sentence,
    Word,
}

/// Hyperparameters for word-region scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordRegionParams {
    pub gamma1: f64,
    pub gamma2: f64,
    /// L2-normalize words and regions before the attention dot products.
    pub normalize_attention: bool,
}

impl Default for WordRegionParams {
    fn default() -> Self {
        Self {
            gamma1: DEFAULT_GAMMA1,
            gamma2: DEFAULT_GAMMA2,
            normalize_attention: false,
        }
    }
}

/// `max + ln Σ exp(x − max)`; `values` must be nonempty and finite.
pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Cosine similarity between an image vector and a sentence vector.
pub fn sentence_score(image: &[f64], sentence: &[f64]) -> Result<f64> {
    cosine(image, sentence)
}

/// Attention-weighted region context for every word.
///
/// Weights are a softmax over regions of `gamma1 · ⟨word, region⟩`.
pub fn attention_context(
    words: &EmbeddingMatrix,
    regions: &EmbeddingMatrix,
    gamma1: f64,
) -> Result<EmbeddingMatrix> {
    check_positive("gamma1", gamma1)?;
    if words.rows() == 0 || regions.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if words.dim() != regions.dim() {
        return Err(Error::DimensionMismatch {
            expected: words.dim(),
            found: regions.dim(),
        });
    }
    let dim = words.dim();
    let mut out = Vec::with_capacity(words.rows() * dim);
    let mut logits = vec![0.0; regions.rows()];
    for word in words.iter_rows() {
        for (logit, region) in logits.iter_mut().zip(regions.iter_rows()) {
            *logit = gamma1 * dot(word, region);
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut context = vec![0.0; dim];
        for (w, region) in weights.iter().zip(regions.iter_rows()) {
            let alpha = w / total;
            for (c, r) in context.iter_mut().zip(region) {
                *c += alpha * r;
            }
        }
        out.extend(context);
    }
    EmbeddingMatrix::new(words.rows(), dim, out)
}

/// Aggregated word-region score `(1/γ2) · ln Σ_i exp(γ2 · cos(cᵢ, wᵢ))`.
pub fn word_region_score(
    contexts: &EmbeddingMatrix,
    words: &EmbeddingMatrix,
    gamma2: f64,
) -> Result<f64> {
    check_positive("gamma2", gamma2)?;
    if words.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if contexts.rows() != words.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} contexts for {} words",
            contexts.rows(),
            words.rows()
        )));
    }
    let relevances = contexts
        .iter_rows()
        .zip(words.iter_rows())
        .map(|(c, w)| cosine(c, w))
        .collect::<Result<Vec<f64>>>()?;
    Ok(log_sum_exp(relevances.iter().map(|r| gamma2 * r)) / gamma2)
}

fn word_level_score(
    words: &EmbeddingMatrix,
    attn_words: &EmbeddingMatrix,
    attn_regions: &EmbeddingMatrix,
    params: &WordRegionParams,
) -> Result<f64> {
    let contexts = attention_context(attn_words, attn_regions, params.gamma1)?;
    word_region_score(&contexts, words, params.gamma2)
}

/// Scores every (image, caption) pair of the bundle at the given level.
///
/// Rows are computed in parallel; each entry depends only on its own pair,
/// so the result does not depend on the thread count.
pub fn build_similarity_matrix(
    bundle: &CaptionBundle,
    level: MatchLevel,
    params: &WordRegionParams,
) -> Result<SimilarityMatrix> {
    let m = bundle.m();
    let rows: Vec<Vec<f64>> = match level {
        MatchLevel::Sentence => (0..m)
            .into_par_iter()
            .map(|i| {
                (0..m)
                    .map(|j| sentence_score(bundle.images.row(i), bundle.sentences.row(j)))
                    .collect()
            })
            .collect::<Result<_>>()?,
        MatchLevel::Word => {
            check_positive("gamma1", params.gamma1)?;
            check_positive("gamma2", params.gamma2)?;
            let (Some(regions), Some(words)) = (bundle.regions(), bundle.words()) else {
                return Err(Error::InvalidParameter(
                    "word-level scoring needs region and word features".into(),
                ));
            };
            let normalize = |group: &[EmbeddingMatrix]| -> Result<Vec<EmbeddingMatrix>> {
                group.iter().map(EmbeddingMatrix::l2_normalized).collect()
            };
            let normalized;
            let (attn_regions, attn_words) = if params.normalize_attention {
                normalized = (normalize(regions)?, normalize(words)?);
                (normalized.0.as_slice(), normalized.1.as_slice())
            } else {
                (regions, words)
            };
            (0..m)
                .into_par_iter()
                .map(|i| {
                    (0..m)
                        .map(|j| {
                            word_level_score(&words[j], &attn_words[j], &attn_regions[i], params)
                        })
                        .collect()
                })
                .collect::<Result<_>>()?
        }
    };
    SimilarityMatrix::new(m, m, rows.into_iter().flatten().collect())
}

fn directional_loss(m: usize, gamma: f64, score: impl Fn(usize, usize) -> f64) -> f64 {
    (0..m)
        .map(|i| log_sum_exp((0..m).map(|j| gamma * score(i, j))) - gamma * score(i, i))
        .sum()
}

/// Batch contrastive losses `(L1, L2)`.
///
/// `L1 = −Σᵢ ln softmaxⱼ(γ·R(Iᵢ, Sⱼ))[i]` normalizes each image over all
/// sentences; `L2` normalizes each sentence over all images.
pub fn contrastive_loss(scores: &SimilarityMatrix, gamma: f64) -> Result<(f64, f64)> {
    check_positive("gamma", gamma)?;
    let m = scores.m();
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    let l1 = directional_loss(m, gamma, |i, j| scores.get(i, j));
    let l2 = directional_loss(m, gamma, |i, j| scores.get(j, i));
    if !l1.is_finite() || !l2.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "contrastive loss overflowed (gamma {gamma})"
        )));
    }
    Ok((l1, l2))
}

/// `λ1·(L1ˢ + L2ˢ) + λ2·(L1ʷ + L2ʷ)`.
pub fn itm_total(
    l1_sentence: f64,
    l2_sentence: f64,
    l1_word: f64,
    l2_word: f64,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    ensure_finite(&[l1_sentence, l2_sentence, l1_word, l2_word, lambda1, lambda2])?;
    if lambda1 < 0.0 || lambda2 < 0.0 {
        return Err(Error::InvalidParameter(
            "loss weights must be non-negative".into(),
        ));
    }
    Ok(lambda1 * (l1_sentence + l2_sentence) + lambda2 * (l1_word + l2_word))
}
