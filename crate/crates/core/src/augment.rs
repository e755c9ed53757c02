//! Candidate generation from augmented contexts.
//!
//! Sentences containing the target are sampled and clustered, each one is
//! mask-filled, and the per-cluster generation counts are combined with
//! cluster weights `w_k`, the overlap between a cluster's most generated words
//! and the target-context candidates.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::ModelBackend;
use crate::corpus::{CorpusStore, Sentence};
use crate::error::{Error, Result};
use crate::index::{cluster_word, DecontextIndex};
use crate::profile::GenerationConfig;
use crate::target::{signal, ScoredCandidate, Source};
use crate::text::{fold, normalize_candidate, replace_span, word_tokens, Span};

pub const CACHE_FORMAT: &str = "lexsimp-generation-cache";
pub const CACHE_VERSION: u32 = 1;

/// Sampled sentences for a word, partitioned into clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSample {
    pub word: String,
    pub clusters: Vec<Vec<(Sentence, Span)>>,
    pub seed: u64,
}

impl ClusterSample {
    /// Clusters from the index entry for `word` when it has one, otherwise
    /// sampled and clustered on the fly with the index's configuration.
    /// `None` when the corpus has no usable sentence for the word.
    pub fn for_word(
        word: &str,
        store: &CorpusStore,
        index: &DecontextIndex,
        backend: &dyn ModelBackend,
    ) -> Result<Option<Self>> {
        let word = fold(word);
        if let Some(entry) = index.entry(&word) {
            let mut ids = vec![Vec::new(); entry.k()];
            for (&id, &c) in &entry.sentence_assignments {
                ids[c].push(id);
            }
            let clusters = ids.iter().map(|ids| store.with_spans(&word, ids)).collect();
            return Ok(Some(ClusterSample {
                word,
                clusters,
                seed: index.seed,
            }));
        }
        let config = index.cluster_config();
        let Some(wc) = cluster_word(&word, store, backend, &config)? else {
            return Ok(None);
        };
        let mut clusters = vec![Vec::new(); wc.entry.k()];
        for sample in wc.samples {
            let c = wc.entry.sentence_assignments[&sample.0.id];
            clusters[c].push(sample);
        }
        Ok(Some(ClusterSample {
            word,
            clusters,
            seed: config.seed,
        }))
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }
}

/// Per-cluster generation counts: how many sentences of the cluster produced
/// each candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterGenerationTable {
    pub word: String,
    pub counts: Vec<BTreeMap<String, u64>>,
    pub sentences: Vec<usize>,
    pub m2: usize,
    /// No sentence could be sampled for the word.
    pub empty: bool,
}

impl ClusterGenerationTable {
    pub fn empty(word: &str, k: usize, m2: usize) -> Self {
        ClusterGenerationTable {
            word: fold(word),
            counts: vec![BTreeMap::new(); k],
            sentences: vec![0; k],
            m2,
            empty: true,
        }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// The `m2` most generated words of cluster `k`, by count then form.
    pub fn top_m2(&self, k: usize) -> Vec<(String, u64)> {
        let mut v: Vec<(String, u64)> = self.counts[k].iter().map(|(w, &c)| (w.clone(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v.truncate(self.m2);
        v
    }

    pub fn total_count(&self, word: &str) -> u64 {
        self.counts.iter().filter_map(|c| c.get(word)).sum()
    }
}

/// Swap "a" and "an" keeping the leading capital.
fn swap_article(article: &str) -> &'static str {
    let upper = article.starts_with(|c: char| c.is_uppercase());
    match (fold(article).as_str(), upper) {
        ("a", false) => "an",
        ("a", true) => "An",
        (_, false) => "a",
        (_, true) => "A",
    }
}

/// Masked sentences to fill for one occurrence: the plain masked sentence and,
/// when enabled and the mask directly follows "a" or "an", the variant with
/// the other article.
pub fn masked_variants(sentence: &str, span: Span, mask: &str, article_variant: bool) -> Vec<String> {
    let (masked, _) = replace_span(sentence, span, mask);
    let mut out = vec![masked.clone()];
    if !article_variant {
        return out;
    }
    let prefix: String = sentence.chars().take(span.start).collect();
    let trimmed_len = prefix.trim_end().chars().count();
    if trimmed_len == span.start {
        return out;
    }
    if let Some(prev) = word_tokens(&prefix).last() {
        if prev.span.end == trimmed_len && (prev.form == "a" || prev.form == "an") {
            let surface = crate::text::char_slice(&prefix, prev.span).unwrap_or("a");
            out.push(replace_span(&masked, prev.span, swap_article(surface)).0);
        }
    }
    out
}

/// Candidates generated for one sentence occurrence, each counted once.
pub fn generate_for_sentence(
    word: &str,
    sentence: &str,
    span: Span,
    backend: &dyn ModelBackend,
    config: &GenerationConfig,
) -> Result<BTreeSet<String>> {
    let target = fold(word);
    let mut found = BTreeSet::new();
    for masked in masked_variants(sentence, span, backend.mask_token(), config.article_variant) {
        for r in backend
            .fill_mask(&masked, config.beam)
            .map_err(|e| Error::backend_word(word, e))?
        {
            if let Some(c) = normalize_candidate(&r.candidate) {
                if c != target {
                    found.insert(c);
                }
            }
        }
    }
    Ok(found)
}

/// Mask-fill every sentence of every cluster and count per-sentence presence.
pub fn generate_for_sample(
    sample: &ClusterSample,
    backend: &dyn ModelBackend,
    config: &GenerationConfig,
) -> Result<ClusterGenerationTable> {
    let mut table = ClusterGenerationTable::empty(&sample.word, sample.k(), config.m2);
    table.empty = sample.clusters.iter().all(Vec::is_empty);
    for (k, members) in sample.clusters.iter().enumerate() {
        let generated: Vec<BTreeSet<String>> = members
            .par_iter()
            .map(|(s, span)| generate_for_sentence(&sample.word, &s.text, *span, backend, config))
            .collect::<Result<_>>()?;
        for set in generated {
            for c in set {
                *table.counts[k].entry(c).or_insert(0) += 1;
            }
        }
        table.sentences[k] = members.len();
    }
    Ok(table)
}

pub fn build_generation_table(
    word: &str,
    store: &CorpusStore,
    index: &DecontextIndex,
    backend: &dyn ModelBackend,
    config: &GenerationConfig,
) -> Result<ClusterGenerationTable> {
    match ClusterSample::for_word(word, store, index, backend)? {
        Some(sample) => generate_for_sample(&sample, backend, config),
        None => Ok(ClusterGenerationTable::empty(word, index.k, config.m2)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterWeights {
    /// Overlap counts before the all-zero fallback.
    pub raw: Vec<u64>,
    pub w: Vec<u64>,
    pub fallback_applied: bool,
}

impl ClusterWeights {
    pub fn new(raw: Vec<u64>) -> Self {
        let fallback_applied = raw.iter().all(|&w| w == 0);
        let w = if fallback_applied {
            vec![1; raw.len()]
        } else {
            raw.clone()
        };
        ClusterWeights {
            raw,
            w,
            fallback_applied,
        }
    }

    pub fn k(&self) -> usize {
        self.w.len()
    }
}

/// `w_k` = number of cluster `k`'s top-M₂ words among the M₁ candidates.
pub fn compute_weights(table: &ClusterGenerationTable, m1: &[ScoredCandidate]) -> ClusterWeights {
    let m1: BTreeSet<String> = m1.iter().map(|c| fold(&c.word)).collect();
    let raw = (0..table.k())
        .map(|k| {
            table
                .top_m2(k)
                .iter()
                .filter(|(w, _)| m1.contains(&fold(w)))
                .count() as u64
        })
        .collect();
    ClusterWeights::new(raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    Soft,
    Hard,
    None,
}

impl AblationMode {
    pub const ALL: [AblationMode; 3] = [AblationMode::Soft, AblationMode::Hard, AblationMode::None];

    pub fn as_str(self) -> &'static str {
        match self {
            AblationMode::Soft => "soft",
            AblationMode::Hard => "hard",
            AblationMode::None => "none",
        }
    }
}

impl std::fmt::Display for AblationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(AblationMode::Soft),
            "hard" => Ok(AblationMode::Hard),
            "none" => Ok(AblationMode::None),
            other => Err(Error::InvalidInput(format!(
                "unknown ablation mode {other:?} (expected soft, hard or none)"
            ))),
        }
    }
}

pub fn ablation_mode(weights: &ClusterWeights, mode: AblationMode) -> ClusterWeights {
    let k = weights.k();
    let w = match mode {
        AblationMode::Soft => return weights.clone(),
        AblationMode::None => vec![1; k],
        AblationMode::Hard => {
            let mut best = 0;
            for i in 1..k {
                if weights.w[i] > weights.w[best] {
                    best = i;
                }
            }
            (0..k).map(|i| u64::from(i == best)).collect()
        }
    };
    ClusterWeights {
        raw: weights.raw.clone(),
        w,
        fallback_applied: weights.fallback_applied,
    }
}

/// `S̃(y) = Σ_k w_k · count_k(y)` for every word in the union of the
/// per-cluster top-M₂ lists.
pub fn augmented_scores(
    table: &ClusterGenerationTable,
    weights: &ClusterWeights,
) -> Result<BTreeMap<String, u64>> {
    if weights.k() != table.k() {
        return Err(Error::InvalidInput(format!(
            "{} cluster weights for a table with {} clusters",
            weights.k(),
            table.k()
        )));
    }
    let union: BTreeSet<String> = (0..table.k())
        .flat_map(|k| table.top_m2(k).into_iter().map(|(w, _)| w))
        .collect();
    Ok(union
        .into_iter()
        .map(|y| {
            let s = table
                .counts
                .iter()
                .zip(&weights.w)
                .map(|(c, w)| w * c.get(&y).copied().unwrap_or(0))
                .sum();
            (y, s)
        })
        .collect())
}

/// Top-M₂ words by `S̃`, then total count, then form. Words scoring zero are
/// dropped.
pub fn score_augmented(
    table: &ClusterGenerationTable,
    weights: &ClusterWeights,
) -> Result<Vec<ScoredCandidate>> {
    if table.empty || table.counts.iter().all(BTreeMap::is_empty) {
        return Err(Error::InsufficientData(format!(
            "no generations for {:?}",
            table.word
        )));
    }
    let mut scored: Vec<(String, u64, u64)> = augmented_scores(table, weights)?
        .into_iter()
        .filter(|(_, s)| *s > 0)
        .map(|(y, s)| {
            let total = table.total_count(&y);
            (y, s, total)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| b.2.cmp(&a.2))
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(table.m2);
    Ok(scored
        .into_iter()
        .map(|(word, s, total)| ScoredCandidate {
            word,
            score: s as f64,
            source: Source::Augmented,
            signal_scores: BTreeMap::from([
                (signal::AUGMENTED.to_string(), s as f64),
                (signal::AUGMENTED_COUNT.to_string(), total as f64),
            ]),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub word: String,
    pub backend_id: String,
    pub seed: u64,
    pub beam: usize,
    pub table: ClusterGenerationTable,
}

/// Precomputed generation counts, keyed by (word, backend, seed, beam).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationCache {
    pub format: String,
    pub version: u32,
    pub entries: Vec<CacheEntry>,
}

impl Default for GenerationCache {
    fn default() -> Self {
        GenerationCache {
            format: CACHE_FORMAT.to_string(),
            version: CACHE_VERSION,
            entries: Vec::new(),
        }
    }
}

impl GenerationCache {
    pub fn get(&self, word: &str, backend_id: &str, seed: u64, beam: usize) -> Option<&ClusterGenerationTable> {
        let word = fold(word);
        self.entries
            .iter()
            .find(|e| e.word == word && e.backend_id == backend_id && e.seed == seed && e.beam == beam)
            .map(|e| &e.table)
    }

    pub fn insert(&mut self, backend_id: &str, seed: u64, beam: usize, table: ClusterGenerationTable) {
        let word = table.word.clone();
        self.entries
            .retain(|e| !(e.word == word && e.backend_id == backend_id && e.seed == seed && e.beam == beam));
        self.entries.push(CacheEntry {
            word,
            backend_id: backend_id.to_string(),
            seed,
            beam,
            table,
        });
        self.entries.sort_by(|a, b| {
            (&a.word, &a.backend_id, a.seed, a.beam).cmp(&(&b.word, &b.backend_id, b.seed, b.beam))
        });
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cache: GenerationCache = serde_json::from_str(&text)?;
        if cache.format != CACHE_FORMAT || cache.version != CACHE_VERSION {
            return Err(Error::Format {
                what: "generation cache",
                found: format!("{} v{}", cache.format, cache.version),
            });
        }
        Ok(cache)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }
}
