//! Decontextualised embeddings: per word, K centroids of its contextual
//! embeddings over sampled corpus sentences.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{cosine, ContextualEmbedding, ModelBackend};
use crate::corpus::{CorpusStore, Sentence};
use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::kmeans::{kmeans, KMeansConfig};
use crate::text::{fold, Span};

pub const INDEX_FORMAT: &str = "lexsimp-decontext-index";
pub const INDEX_VERSION: u32 = 1;

/// Candidate vocabulary with corpus frequencies, most frequent first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
}

impl Vocabulary {
    /// Top `size` word forms by corpus frequency.
    pub fn from_corpus(store: &CorpusStore, size: usize) -> Self {
        let (words, counts) = store.top_words(size).into_iter().unzip();
        Vocabulary { words, counts }
    }

    /// Explicit word list; duplicates (after folding) are dropped.
    pub fn from_words<I, S>(words: I, store: Option<&CorpusStore>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vocabulary {
            words: Vec::new(),
            counts: Vec::new(),
        };
        for w in words {
            let w = fold(w.as_ref());
            if seen.insert(w.clone()) {
                out.counts.push(store.map_or(0, |s| s.frequency(&w)));
                out.words.push(w);
            }
        }
        out
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words.iter().map(String::as_str).zip(self.counts.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecontextEntry {
    pub word: String,
    pub centroids: Vec<Vec<f64>>,
    pub cluster_sizes: Vec<usize>,
    /// Sentence id to cluster index.
    pub sentence_assignments: BTreeMap<u32, usize>,
}

impl DecontextEntry {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn nonempty(&self) -> impl Iterator<Item = (usize, &Vec<f64>)> {
        self.centroids
            .iter()
            .enumerate()
            .filter(|(i, _)| self.cluster_sizes[*i] > 0)
    }

    fn check_query(&self, query: &ContextualEmbedding) -> Result<()> {
        if self.nonempty().next().is_none() {
            return Err(Error::InsufficientData(self.word.clone()));
        }
        let dim = self.centroids[0].len();
        if query.0.len() != dim {
            return Err(Error::InvalidInput(format!(
                "query has {} dims, index entry for {:?} has {dim}",
                query.0.len(),
                self.word
            )));
        }
        Ok(())
    }

    /// Cosine similarity to every nonempty centroid, as `(cluster, similarity)`.
    pub fn centroid_similarities(&self, query: &ContextualEmbedding) -> Result<Vec<(usize, f64)>> {
        self.check_query(query)?;
        Ok(self
            .nonempty()
            .map(|(i, c)| (i, cosine(c, &query.0)))
            .collect())
    }

    /// Cosine between the query and the size-weighted mean of the centroids
    /// (the mean of all member embeddings). A zero mean gives 0.0.
    pub fn global_similarity(&self, query: &ContextualEmbedding) -> Result<f64> {
        self.check_query(query)?;
        Ok(cosine(&self.global_mean(), &query.0))
    }

    pub fn global_mean(&self) -> Vec<f64> {
        let dim = self.centroids.first().map_or(0, Vec::len);
        let total: usize = self.cluster_sizes.iter().sum();
        let mut mean = vec![0.0; dim];
        if total == 0 {
            return mean;
        }
        for (c, &n) in self.centroids.iter().zip(&self.cluster_sizes) {
            mean.iter_mut().zip(c).for_each(|(m, x)| *m += n as f64 * x);
        }
        mean.iter_mut().for_each(|m| *m /= total as f64);
        mean
    }

    /// Sentence ids grouped by cluster, in id order.
    pub fn cluster_members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.k()];
        for (&id, &c) in &self.sentence_assignments {
            out[c].push(id);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "entry", rename_all = "snake_case")]
pub enum IndexEntry {
    Ready(DecontextEntry),
    Insufficient,
}

impl IndexEntry {
    pub fn ready(&self) -> Option<&DecontextEntry> {
        match self {
            IndexEntry::Ready(e) => Some(e),
            IndexEntry::Insufficient => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterConfig {
    pub k: usize,
    pub sample_n: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub n_init: usize,
}

impl ClusterConfig {
    pub fn new(k: usize, sample_n: usize, seed: u64) -> Self {
        ClusterConfig {
            k,
            sample_n,
            seed,
            max_iter: 100,
            n_init: 10,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.sample_n < self.k {
            return Err(Error::InvalidInput(format!(
                "need k >= 1 and sample_n >= k (k={}, sample_n={})",
                self.k, self.sample_n
            )));
        }
        Ok(())
    }

    fn kmeans_for(&self, word: &str) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            max_iter: self.max_iter,
            n_init: self.n_init,
            seed: derive_seed(self.seed, word),
        }
    }
}

/// Sampled occurrences of one word with their embeddings and clustering.
#[derive(Debug, Clone)]
pub struct WordClusters {
    pub entry: DecontextEntry,
    pub samples: Vec<(Sentence, Span)>,
    pub embeddings: Vec<ContextualEmbedding>,
}

/// Sample, embed and cluster the occurrences of `word`. `None` when the
/// corpus has no usable sentence for it.
pub fn cluster_word(
    word: &str,
    store: &CorpusStore,
    backend: &dyn ModelBackend,
    config: &ClusterConfig,
) -> Result<Option<WordClusters>> {
    config.validate()?;
    let word = fold(word);
    let sample = store.sample(&word, config.sample_n, config.seed)?;
    if sample.is_empty() {
        return Ok(None);
    }
    let embeddings = sample
        .sentences
        .iter()
        .map(|(s, span)| {
            let surface = crate::text::char_slice(&s.text, *span).unwrap_or(&word);
            backend
                .embed_in_context(surface, &s.text, *span)
                .map_err(|e| Error::backend_word(&word, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<Vec<f64>> = embeddings.iter().map(|e| e.0.clone()).collect();
    let clustering = kmeans(&points, &config.kmeans_for(&word))?;
    let sentence_assignments = sample
        .sentences
        .iter()
        .zip(&clustering.assignments)
        .map(|((s, _), &c)| (s.id, c))
        .collect();
    Ok(Some(WordClusters {
        entry: DecontextEntry {
            word,
            centroids: clustering.centroids,
            cluster_sizes: clustering.sizes,
            sentence_assignments,
        },
        samples: sample.sentences,
        embeddings,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecontextIndex {
    pub format: String,
    pub version: u32,
    pub backend_id: String,
    pub k: usize,
    pub sample_n: usize,
    pub seed: u64,
    pub vocabulary: Vocabulary,
    /// Entries for the vocabulary plus any extra (target) words.
    pub entries: BTreeMap<String, IndexEntry>,
}

impl DecontextIndex {
    /// Build entries for every vocabulary word and for `extra_words`.
    pub fn build(
        vocab: Vocabulary,
        extra_words: &[String],
        store: &CorpusStore,
        backend: &dyn ModelBackend,
        config: &ClusterConfig,
    ) -> Result<Self> {
        config.validate()?;
        let mut words: Vec<String> = vocab.words().to_vec();
        words.extend(extra_words.iter().map(|w| fold(w)));
        words.sort();
        words.dedup();
        let built: Vec<(String, IndexEntry)> = words
            .par_iter()
            .map(|w| {
                let entry = match cluster_word(w, store, backend, config)? {
                    Some(c) => IndexEntry::Ready(c.entry),
                    None => IndexEntry::Insufficient,
                };
                Ok((w.clone(), entry))
            })
            .collect::<Result<_>>()?;
        Ok(DecontextIndex {
            format: INDEX_FORMAT.into(),
            version: INDEX_VERSION,
            backend_id: backend.id().to_string(),
            k: config.k,
            sample_n: config.sample_n,
            seed: config.seed,
            vocabulary: vocab,
            entries: built.into_iter().collect(),
        })
    }

    pub fn entry(&self, word: &str) -> Option<&DecontextEntry> {
        self.entries.get(&fold(word)).and_then(IndexEntry::ready)
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig::new(self.k, self.sample_n, self.seed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Load a persisted index; when `backend_id` is given it must match the
    /// backend the index was built with.
    pub fn load(path: impl AsRef<Path>, backend_id: Option<&str>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let index: DecontextIndex = serde_json::from_str(&text)?;
        if index.format != INDEX_FORMAT || index.version != INDEX_VERSION {
            return Err(Error::Format {
                what: "decontextualised index",
                found: format!("{} v{}", index.format, index.version),
            });
        }
        if let Some(id) = backend_id {
            if id != index.backend_id {
                return Err(Error::BackendMismatch {
                    built: index.backend_id,
                    current: id.to_string(),
                });
            }
        }
        Ok(index)
    }
}
