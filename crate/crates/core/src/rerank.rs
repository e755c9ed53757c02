//! Merging, filtering and four-signal rank fusion.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{cosine, ModelBackend};
use crate::error::{Error, Result};
use crate::freq::FrequencyTable;
use crate::target::{signal, ScoredCandidate, Source, StaticTerm, TargetInstance, TargetQuery};
use crate::text::{edit_similarity, fold, replace_span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    EmbeddingSimilarity,
    LmPerplexity,
    WordFrequency,
    AugmentedScore,
}

impl Signal {
    /// Fusion order: r1..r4.
    pub const ALL: [Signal; 4] = [
        Signal::EmbeddingSimilarity,
        Signal::LmPerplexity,
        Signal::WordFrequency,
        Signal::AugmentedScore,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Signal::EmbeddingSimilarity => "embedding_similarity",
            Signal::LmPerplexity => "lm_perplexity",
            Signal::WordFrequency => "word_frequency",
            Signal::AugmentedScore => "augmented_score",
        }
    }
}

impl FromStr for Signal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Signal::ALL
            .into_iter()
            .find(|sig| sig.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown signal {s:?}")))
    }
}

/// Ranks `1..=N` for one signal, plus the raw scores behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRanking {
    pub signal: Signal,
    pub ranks: BTreeMap<String, usize>,
    /// Raw signal values; candidates without a value are absent.
    pub scores: BTreeMap<String, f64>,
}

impl SignalRanking {
    /// Rank by descending score; candidates without a score come after all
    /// scored ones. Ties and unscored candidates are ordered by frequency
    /// (descending, missing last) and then by form.
    pub fn from_scores(
        signal: Signal,
        words: &[String],
        scores: &BTreeMap<String, f64>,
        freq: Option<&FrequencyTable>,
    ) -> Self {
        let f = |w: &str| freq.and_then(|t| t.get(w));
        let desc_missing_last = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        let unique: BTreeSet<&String> = words.iter().collect();
        let mut order: Vec<&String> = unique.into_iter().collect();
        order.sort_by(|a, b| {
            desc_missing_last(scores.get(*a).copied(), scores.get(*b).copied())
                .then_with(|| desc_missing_last(f(a), f(b)))
                .then_with(|| a.cmp(b))
        });
        SignalRanking {
            signal,
            ranks: order
                .iter()
                .enumerate()
                .map(|(i, w)| ((*w).clone(), i + 1))
                .collect(),
            scores: scores.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Candidates in rank order.
    pub fn ordered(&self) -> Vec<&str> {
        let mut v: Vec<(&str, usize)> = self.ranks.iter().map(|(w, &r)| (w.as_str(), r)).collect();
        v.sort_by_key(|&(_, r)| r);
        v.into_iter().map(|(w, _)| w).collect()
    }
}

fn words(candidates: &[ScoredCandidate]) -> Vec<String> {
    candidates.iter().map(|c| c.word.clone()).collect()
}

/// Union of the two pools (duplicates merged) minus candidates too similar to
/// the target: `1 - lev / max(len) >= threshold`.
pub fn merge_and_filter(
    m1: &[ScoredCandidate],
    m2: &[ScoredCandidate],
    target: &TargetInstance,
    threshold: f64,
) -> Result<Vec<ScoredCandidate>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "edit threshold must be in (0, 1], got {threshold}"
        )));
    }
    if m1.is_empty() && m2.is_empty() {
        return Err(Error::InvalidInput("no candidates to merge".into()));
    }
    let mut merged: Vec<ScoredCandidate> = Vec::new();
    let mut at: BTreeMap<String, usize> = BTreeMap::new();
    for c in m1.iter().chain(m2) {
        let key = fold(&c.word);
        match at.get(&key) {
            Some(&i) => {
                let m = &mut merged[i];
                if m.source != c.source {
                    m.source = Source::Both;
                }
                for (k, v) in &c.signal_scores {
                    m.signal_scores.entry(k.clone()).or_insert(*v);
                }
            }
            None => {
                at.insert(key.clone(), merged.len());
                merged.push(ScoredCandidate {
                    word: key,
                    ..c.clone()
                });
            }
        }
    }
    merged.retain(|c| edit_similarity(&c.word, &target.word) < threshold);
    Ok(merged)
}

/// Cosine between the target's embedding and each candidate's embedding in
/// the target sentence, plus the static term for multi-token targets.
pub fn signal_embedding(
    candidates: &[ScoredCandidate],
    target: &TargetInstance,
    backend: &dyn ModelBackend,
    alpha: f64,
    freq: Option<&FrequencyTable>,
) -> Result<SignalRanking> {
    let query = TargetQuery::new(target, backend)?;
    let scores = candidates
        .par_iter()
        .map(|c| {
            let (sentence, span) = replace_span(&target.sentence, target.span, &c.word);
            let e = backend
                .embed_in_context(&c.word, &sentence, span)
                .map_err(|e| Error::backend_word(&c.word, e))?;
            let mut s = cosine(&query.embedding.0, &e.0);
            if let StaticTerm::Value(t) = query.static_term(&c.word, backend, alpha) {
                s += t;
            }
            Ok((c.word.clone(), s))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(SignalRanking::from_scores(
        Signal::EmbeddingSimilarity,
        &words(candidates),
        &scores,
        freq,
    ))
}

/// Infill log-probability of each candidate in the masked target sentence.
pub fn signal_perplexity(
    candidates: &[ScoredCandidate],
    target: &TargetInstance,
    backend: &dyn ModelBackend,
    freq: Option<&FrequencyTable>,
) -> Result<SignalRanking> {
    let (masked, _) = replace_span(&target.sentence, target.span, backend.mask_token());
    let scores = candidates
        .par_iter()
        .map(|c| {
            let s = backend
                .score_infill(&masked, &c.word)
                .map_err(|e| Error::backend_word(&c.word, e))?;
            Ok((c.word.clone(), s))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(SignalRanking::from_scores(
        Signal::LmPerplexity,
        &words(candidates),
        &scores,
        freq,
    ))
}

pub fn signal_frequency(candidates: &[ScoredCandidate], freq: &FrequencyTable) -> SignalRanking {
    let scores = candidates
        .iter()
        .filter_map(|c| freq.get(&c.word).map(|z| (c.word.clone(), z)))
        .collect();
    SignalRanking::from_scores(Signal::WordFrequency, &words(candidates), &scores, Some(freq))
}

/// Rank by the augmented-context score; target-context-only candidates have
/// none and take the bottom ranks.
pub fn signal_augmented(candidates: &[ScoredCandidate], freq: Option<&FrequencyTable>) -> SignalRanking {
    let scores = candidates
        .iter()
        .filter_map(|c| {
            c.signal_scores
                .get(signal::AUGMENTED)
                .map(|&s| (c.word.clone(), s))
        })
        .collect();
    SignalRanking::from_scores(Signal::AugmentedScore, &words(candidates), &scores, freq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedCandidate {
    pub word: String,
    pub combined: f64,
    /// Ranks under r1..r4.
    pub ranks: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRanking {
    pub candidates: Vec<FusedCandidate>,
}

impl FinalRanking {
    pub fn words(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.word.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// `Σ r_i R_i`, ascending; ties go to the better first-signal rank, then form.
pub fn fuse(rankings: &[SignalRanking; 4], weights: [f64; 4]) -> Result<FinalRanking> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidInput("fusion weights must be non-negative".into()));
    }
    let keys: Vec<&String> = rankings[0].ranks.keys().collect();
    for r in &rankings[1..] {
        if !r.ranks.keys().eq(keys.iter().copied()) {
            return Err(Error::Misaligned(format!(
                "{} ranks a different candidate set than {}",
                r.signal.as_str(),
                rankings[0].signal.as_str()
            )));
        }
    }
    let mut candidates: Vec<FusedCandidate> = keys
        .into_iter()
        .map(|w| {
            let ranks = [0, 1, 2, 3].map(|i| rankings[i].ranks[w]);
            let combined = ranks
                .iter()
                .zip(weights)
                .fold(0.0, |acc, (&r, wt)| acc + wt * r as f64);
            FusedCandidate {
                word: w.clone(),
                combined,
                ranks,
            }
        })
        .collect();
    candidates.sort_by(|a, b| {
        a.combined
            .total_cmp(&b.combined)
            .then_with(|| a.ranks[0].cmp(&b.ranks[0]))
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(FinalRanking { candidates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(w: &str, src: Source) -> ScoredCandidate {
        ScoredCandidate {
            word: w.into(),
            score: 1.0,
            source: src,
            signal_scores: BTreeMap::new(),
        }
    }

    fn ranking(signal: Signal, order: &[&str]) -> SignalRanking {
        SignalRanking {
            signal,
            ranks: order.iter().enumerate().map(|(i, w)| (w.to_string(), i + 1)).collect(),
            scores: BTreeMap::new(),
        }
    }

    #[test]
    fn merge_collapses_and_filters() {
        let t = TargetInstance::locate("we extend it", "extend").unwrap();
        let m1 = [cand("class", Source::TargetContext), cand("extend", Source::TargetContext)];
        let mut aug = cand("Class", Source::Augmented);
        aug.signal_scores.insert(signal::AUGMENTED.into(), 3.0);
        let m2 = [aug, cand("extensions", Source::Augmented)];
        let out = merge_and_filter(&m1, &m2, &t, 0.8).unwrap();
        let ws: Vec<&str> = out.iter().map(|c| c.word.as_str()).collect();
        assert_eq!(ws, vec!["class", "extensions"]);
        assert_eq!(out[0].source, Source::Both);
        assert_eq!(out[0].signal_scores[signal::AUGMENTED], 3.0);
        assert!(merge_and_filter(&[], &[], &t, 0.8).is_err());
        assert!(merge_and_filter(&m1, &m2, &t, 0.0).is_err());
    }

    #[test]
    fn ties_and_missing_values() {
        let freq = FrequencyTable::from_pairs([("the", 7.0), ("cat", 5.0)]);
        let ws: Vec<String> = ["zeta", "cat", "the", "alpha"].map(String::from).to_vec();
        let r = SignalRanking::from_scores(
            Signal::LmPerplexity,
            &ws,
            &BTreeMap::from([("cat".to_string(), -1.0), ("the".to_string(), -1.0)]),
            Some(&freq),
        );
        assert_eq!(r.ordered(), vec!["the", "cat", "alpha", "zeta"]);
        let cands: Vec<ScoredCandidate> = ws.iter().map(|w| cand(w, Source::Augmented)).collect();
        let f = signal_frequency(&cands, &freq);
        assert_eq!(f.ordered(), vec!["the", "cat", "alpha", "zeta"]);
    }

    #[test]
    fn fusion_examples() {
        let r1 = ranking(Signal::EmbeddingSimilarity, &["a", "b"]);
        let r2 = ranking(Signal::LmPerplexity, &["b", "a"]);
        let r3 = ranking(Signal::WordFrequency, &["b", "a"]);
        let r4 = ranking(Signal::AugmentedScore, &["b", "a"]);
        let f = fuse(&[r1.clone(), r2.clone(), r3.clone(), r4.clone()], [1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.words(), vec!["a", "b"]);
        assert_eq!(f.candidates[0].combined, 3.0);
        let f = fuse(&[r1.clone(), r2.clone(), r3.clone(), r4.clone()], [1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.words(), r1.ordered());
        let bad = ranking(Signal::AugmentedScore, &["a", "c"]);
        assert!(fuse(&[r1, r2, r3, bad], [1.0; 4]).is_err());
    }
}
