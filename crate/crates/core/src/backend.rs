//! Contracts for the learned-model side of the pipeline.
//!
//! A [`ModelBackend`] provides contextual embeddings, mask filling, forced
//! infill scoring, static word vectors and subword segmentation. The pipeline
//! only talks to this trait; [`crate::stub::StubBackend`] is a deterministic
//! implementation driven by a fixture file.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Span;

/// Contextual embedding of a word occurrence, averaged over subword positions
/// and the backend's layer set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualEmbedding(pub Vec<f64>);

/// Pre-trained static word vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticEmbedding(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskFillResult {
    pub candidate: String,
    /// Log-probability in nats.
    pub score: f64,
    pub beam_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub tokens: Vec<String>,
}

impl Segmentation {
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_multi_token(&self) -> bool {
        self.tokens.len() > 1
    }
}

/// Model access used by every generation and ranking step.
///
/// Implementations must be pure functions of their loaded state and must
/// accept concurrent read-only calls once constructed.
pub trait ModelBackend: Send + Sync {
    /// Stable identifier recorded in persisted indexes and caches.
    fn id(&self) -> &str;

    /// Dimension of contextual embeddings.
    fn dim(&self) -> usize;

    /// Dimension of static embeddings.
    fn static_dim(&self) -> usize;

    /// The placeholder string that marks the slot to fill.
    fn mask_token(&self) -> &str;

    fn embed_in_context(&self, word: &str, sentence: &str, span: Span)
        -> Result<ContextualEmbedding>;

    /// Up to `beam_width` fills for the single mask slot, sorted by descending score.
    fn fill_mask(&self, masked_sentence: &str, beam_width: usize) -> Result<Vec<MaskFillResult>>;

    /// Total log-probability of `candidate`'s tokens forced into the mask slot.
    fn score_infill(&self, masked_sentence: &str, candidate: &str) -> Result<f64>;

    fn embed_static(&self, word: &str) -> Option<StaticEmbedding>;

    fn segment(&self, word: &str) -> Result<Segmentation>;
}

/// Count mask placeholders and fail unless there is exactly one.
pub fn require_single_mask(masked_sentence: &str, mask: &str) -> Result<()> {
    let found = masked_sentence.matches(mask).count();
    if found == 1 {
        Ok(())
    } else {
        Err(Error::MaskCount {
            mask: mask.to_string(),
            found,
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; 0.0 when either side is the zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}
