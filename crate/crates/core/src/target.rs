//! Candidate generation from the target context.
//!
//! Every vocabulary word `y` is scored against the target occurrence by its
//! best-matching decontextualised centroid, plus a global-similarity term, plus
//! `alpha * cos(E(x), E(y))` when the target splits into several subwords.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{cosine, ContextualEmbedding, ModelBackend, StaticEmbedding};
use crate::error::{Error, Result};
use crate::index::{DecontextEntry, DecontextIndex};
use crate::profile::GenerationConfig;
use crate::text::{check_span, find_word, fold, Span};

pub mod signal {
    pub const APTNESS: &str = "aptness";
    pub const APTNESS_MAX_CLUSTER: &str = "aptness_max_cluster";
    pub const APTNESS_GLOBAL: &str = "aptness_global";
    pub const APTNESS_STATIC: &str = "aptness_static";
    pub const STATIC_MISSING: &str = "static_missing";
    pub const AUGMENTED: &str = "augmented";
    pub const AUGMENTED_COUNT: &str = "augmented_count";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetInstance {
    pub sentence: String,
    pub word: String,
    pub span: Span,
}

impl TargetInstance {
    /// Locate the first occurrence of `word` in `sentence`.
    pub fn locate(sentence: &str, word: &str) -> Result<Self> {
        let span = find_word(sentence, word).ok_or_else(|| {
            Error::InvalidInput(format!("{word:?} does not occur in {sentence:?}"))
        })?;
        Ok(TargetInstance {
            sentence: sentence.to_string(),
            word: word.to_string(),
            span,
        })
    }

    pub fn with_span(sentence: &str, word: &str, span: Span) -> Result<Self> {
        check_span(sentence, word, span)?;
        Ok(TargetInstance {
            sentence: sentence.to_string(),
            word: word.to_string(),
            span,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    TargetContext,
    Augmented,
    /// Produced by both generators and merged.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub word: String,
    pub score: f64,
    pub source: Source,
    pub signal_scores: BTreeMap<String, f64>,
}

/// Target-side quantities shared by every candidate.
#[derive(Debug, Clone)]
pub struct TargetQuery {
    pub embedding: ContextualEmbedding,
    pub static_embedding: Option<StaticEmbedding>,
    pub multi_token: bool,
}

impl TargetQuery {
    pub fn new(target: &TargetInstance, backend: &dyn ModelBackend) -> Result<Self> {
        let embedding = backend
            .embed_in_context(&target.word, &target.sentence, target.span)
            .map_err(|e| Error::backend_word(&target.word, e))?;
        let multi_token = backend.segment(&target.word)?.is_multi_token();
        Ok(TargetQuery {
            embedding,
            static_embedding: backend.embed_static(&target.word),
            multi_token,
        })
    }

    /// `alpha * cos(E(x), E(y))` for multi-token targets.
    pub fn static_term(&self, candidate: &str, backend: &dyn ModelBackend, alpha: f64) -> StaticTerm {
        if !self.multi_token {
            return StaticTerm::NotApplicable;
        }
        match (&self.static_embedding, backend.embed_static(candidate)) {
            (Some(x), Some(y)) => StaticTerm::Value(alpha * cosine(&x.0, &y.0)),
            _ => StaticTerm::Missing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticTerm {
    /// Single-token target.
    NotApplicable,
    /// Needed, but a static vector is unavailable.
    Missing,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aptness {
    pub max_cluster: f64,
    pub global: f64,
    pub static_term: Option<f64>,
    pub static_missing: bool,
    pub total: f64,
}

impl Aptness {
    fn signals(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::from([
            (signal::APTNESS.to_string(), self.total),
            (signal::APTNESS_MAX_CLUSTER.to_string(), self.max_cluster),
            (signal::APTNESS_GLOBAL.to_string(), self.global),
        ]);
        if let Some(s) = self.static_term {
            m.insert(signal::APTNESS_STATIC.to_string(), s);
        }
        if self.static_missing {
            m.insert(signal::STATIC_MISSING.to_string(), 1.0);
        }
        m
    }
}

pub fn aptness(
    query: &TargetQuery,
    candidate: &str,
    entry: &DecontextEntry,
    backend: &dyn ModelBackend,
    alpha: f64,
) -> Result<Aptness> {
    let max_cluster = entry
        .centroid_similarities(&query.embedding)?
        .into_iter()
        .map(|(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let global = entry.global_similarity(&query.embedding)?;
    let (static_term, static_missing) = match query.static_term(candidate, backend, alpha) {
        StaticTerm::NotApplicable => (None, false),
        StaticTerm::Missing => (None, true),
        StaticTerm::Value(t) => (Some(t), false),
    };
    let total = max_cluster + global + static_term.unwrap_or(0.0);
    Ok(Aptness {
        max_cluster,
        global,
        static_term,
        static_missing,
        total,
    })
}

/// Aptness of one candidate word for the target occurrence.
pub fn aptness_score(
    target: &TargetInstance,
    candidate: &str,
    index: &DecontextIndex,
    backend: &dyn ModelBackend,
    alpha: f64,
) -> Result<f64> {
    let entry = index
        .entry(candidate)
        .ok_or_else(|| Error::InsufficientData(candidate.to_string()))?;
    let query = TargetQuery::new(target, backend)?;
    Ok(aptness(&query, candidate, entry, backend, alpha)?.total)
}

/// Score every usable vocabulary word except the target itself and keep the
/// best `config.m1`, ordered by score, then corpus frequency, then form.
pub fn generate_m1(
    target: &TargetInstance,
    index: &DecontextIndex,
    backend: &dyn ModelBackend,
    config: &GenerationConfig,
) -> Result<Vec<ScoredCandidate>> {
    if index.entries.values().all(|e| e.ready().is_none()) || index.vocabulary.is_empty() {
        return Err(Error::InvalidInput("decontextualised index is empty".into()));
    }
    let query = TargetQuery::new(target, backend)?;
    let target_form = fold(&target.word);
    let vocab: Vec<(&str, u64)> = index.vocabulary.iter().collect();
    let mut scored: Vec<(Aptness, u64, &str)> = vocab
        .par_iter()
        .filter(|(w, _)| fold(w) != target_form)
        .filter_map(|&(w, count)| index.entry(w).map(|e| (w, count, e)))
        .map(|(w, count, e)| Ok((aptness(&query, w, e, backend, config.alpha)?, count, w)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| {
        b.0.total
            .total_cmp(&a.0.total)
            .then_with(|| b.1.cmp(&a.1))
            .then_with(|| a.2.cmp(b.2))
    });
    scored.truncate(config.m1);
    Ok(scored
        .into_iter()
        .map(|(apt, _, w)| ScoredCandidate {
            word: w.to_string(),
            score: apt.total,
            source: Source::TargetContext,
            signal_scores: apt.signals(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{IndexEntry, Vocabulary};
    use crate::profile::Profile;
    use crate::stub::{StubBackend, StubFixture};

    fn backend(multi: bool) -> StubBackend {
        let mut f = StubFixture::new("target-test");
        f.static_dim = 2;
        if multi {
            f.segmentations
                .insert("bole".into(), vec!["bol".into(), "##e".into()]);
        }
        f.static_vectors.insert("bole".into(), vec![1.0, 0.0]);
        f.static_vectors.insert("trunk".into(), vec![0.5, 3.0f64.sqrt() / 2.0]);
        StubBackend::new(f).unwrap()
    }

    fn index_with(word: &str, centroids: Vec<Vec<f64>>, sizes: Vec<usize>) -> DecontextIndex {
        DecontextIndex {
            format: crate::index::INDEX_FORMAT.into(),
            version: crate::index::INDEX_VERSION,
            backend_id: "stub:target-test".into(),
            k: centroids.len(),
            sample_n: 10,
            seed: 0,
            vocabulary: Vocabulary::from_words([word], None),
            entries: BTreeMap::from([(
                word.to_string(),
                IndexEntry::Ready(DecontextEntry {
                    word: word.into(),
                    centroids,
                    cluster_sizes: sizes,
                    sentence_assignments: BTreeMap::new(),
                }),
            )]),
        }
    }

    #[test]
    fn identical_centroids_give_two() {
        let b = backend(false);
        let t = TargetInstance::locate("the bole was cut", "bole").unwrap();
        let q = TargetQuery::new(&t, &b).unwrap();
        let idx = index_with("trunk", vec![q.embedding.0.clone(); 2], vec![3, 5]);
        let s = aptness_score(&t, "trunk", &idx, &b, 0.2).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_token_target_ignores_alpha() {
        let b = backend(false);
        let t = TargetInstance::locate("the bole was cut", "bole").unwrap();
        let idx = index_with("trunk", vec![vec![0.3; 64], vec![-0.1; 64]], vec![2, 2]);
        let a0 = aptness_score(&t, "trunk", &idx, &b, 0.0).unwrap();
        let a1 = aptness_score(&t, "trunk", &idx, &b, 0.7).unwrap();
        assert_eq!(a0, a1);
    }

    #[test]
    fn documented_combination_arithmetic() {
        // max-cluster 0.5, global 0.4, static cosine 0.5, alpha 0.2 -> 1.0
        let b = backend(true);
        let t = TargetInstance::locate("the bole was cut", "bole").unwrap();
        let q = TargetQuery::new(&t, &b).unwrap();
        let x = crate::backend::norm(&q.embedding.0);
        let u: Vec<f64> = q.embedding.0.iter().map(|v| v / x).collect();
        // w orthogonal to u
        let mut w = vec![0.0; u.len()];
        w[0] = 1.0;
        let proj = u[0];
        w.iter_mut().zip(&u).for_each(|(wi, ui)| *wi -= proj * ui);
        let wn = crate::backend::norm(&w);
        w.iter_mut().for_each(|v| *v /= wn);
        let at = |c: f64| -> Vec<f64> {
            let s = (1.0 - c * c).sqrt();
            u.iter().zip(&w).map(|(a, b)| c * a + s * b).collect()
        };
        let c1 = at(0.5);
        let c2 = at(0.3);
        // choose sizes so the weighted mean has cosine 0.4 with the query:
        // solve numerically over the size ratio
        let mut best = (0, 0, f64::INFINITY);
        for n1 in 1..200 {
            for n2 in 1..200 {
                let e = DecontextEntry {
                    word: "trunk".into(),
                    centroids: vec![c1.clone(), c2.clone()],
                    cluster_sizes: vec![n1, n2],
                    sentence_assignments: BTreeMap::new(),
                };
                let g = e.global_similarity(&q.embedding).unwrap();
                if (g - 0.4).abs() < best.2 {
                    best = (n1, n2, (g - 0.4).abs());
                }
            }
        }
        let idx = index_with("trunk", vec![c1, c2], vec![best.0, best.1]);
        let entry = idx.entry("trunk").unwrap();
        let apt = aptness(&q, "trunk", entry, &b, 0.2).unwrap();
        assert!((apt.max_cluster - 0.5).abs() < 1e-12);
        assert!((apt.static_term.unwrap() - 0.1).abs() < 1e-12);
        assert!((apt.total - (0.5 + apt.global + 0.1)).abs() < 1e-12);
        assert!((apt.global - 0.4).abs() < 0.01);
    }

    #[test]
    fn missing_static_vector_is_flagged() {
        let b = backend(true);
        let t = TargetInstance::locate("the bole was cut", "bole").unwrap();
        let q = TargetQuery::new(&t, &b).unwrap();
        let idx = index_with("stem", vec![vec![1.0; 64]], vec![1]);
        let apt = aptness(&q, "stem", idx.entry("stem").unwrap(), &b, 0.2).unwrap();
        assert!(apt.static_missing);
        assert!(apt.signals().contains_key(signal::STATIC_MISSING));
    }

    #[test]
    fn generate_excludes_target_and_errors_on_empty_index() {
        let b = backend(false);
        let t = TargetInstance::locate("The Bole was cut", "Bole").unwrap();
        let mut idx = index_with("bole", vec![vec![1.0; 64]], vec![1]);
        let cfg = Profile::stub();
        assert!(generate_m1(&t, &idx, &b, &cfg).unwrap().is_empty());
        idx.entries.clear();
        assert!(generate_m1(&t, &idx, &b, &cfg).is_err());
    }

    #[test]
    fn locate_and_span_validation() {
        assert!(TargetInstance::locate("no match here", "cat").is_err());
        assert!(TargetInstance::with_span("a cat", "cat", Span::new(2, 5)).is_ok());
        assert!(TargetInstance::with_span("a cat", "cat", Span::new(1, 4)).is_err());
    }
}
