//! Deterministic fixture-driven backend.
//!
//! Everything the stub returns is reproducible from its [`StubFixture`] and
//! the hash scheme below, so tests can recompute any value independently.
//!
//! # Hash scheme
//!
//! * `fnv1a64(bytes)`: 64-bit FNV-1a (offset `0xcbf29ce484222325`, prime
//!   `0x100000001b3`).
//! * `splitmix64(state)`: `state += 0x9e3779b97f4a7c15`, then the standard
//!   splitmix64 finaliser (`^ >> 30`, `* 0xbf58476d1ce4e5b9`, `^ >> 27`,
//!   `* 0x94d049bb133111eb`, `^ >> 31`).
//! * `unit01(x) = (x >> 11) / 2^53`.
//! * `hash_vector(key, dim)`: seed a splitmix64 state with `fnv1a64(key)`,
//!   draw `dim` values `2 * unit01(next) - 1` and scale to unit length.
//!
//! Keys are `"{seed}|{kind}|{name}|L{layer}"` where `kind` is `ctx` (a
//! concept), `sub` (a subword token) or `ngram` (a static char trigram).
//!
//! # Contextual embeddings
//!
//! A single-token word takes a sense from the fixture: the first sense whose
//! cue words occur in the sentence (outside the word's own span), else the
//! first listed sense, else the word itself as its own concept. The sense is a
//! weighted mix of concepts. For each layer the vector is
//! `sum(weight * hash_vector(ctx key))`; the position vector is the mean over
//! layers scaled to unit length.
//!
//! A multi-token word ignores senses: each subword position gets the unit
//! mean over layers of `hash_vector(sub key)`, and the embedding is the plain
//! mean over positions. This reproduces the failure mode where rare words are
//! represented by their (shared) subword pieces.
//!
//! # Mask filling and infill scores
//!
//! The fill list for a masked sentence is the exact `fills` entry, else the
//! first `fill_rules` entry with a cue present in the sentence, else empty.
//! A listed candidate's infill score is its fixture score. An unlisted
//! candidate is decoded token by token; step `i` with token `t` scores
//! `-(unlisted_penalty + unit01(splitmix64(fnv1a64("{seed}|step|{masked}|{i}|{t}"))))`
//! and the total is the sum over steps in order.
//!
//! # Static vectors
//!
//! Fixture vectors by folded word. Unknown words are absent unless
//! `static_fallback` is set, in which case the vector is the mean of
//! `hash_vector(ngram key)` (layer 0) over char trigrams of `"<word>"`.

pub mod worlds;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::{
    require_single_mask, ContextualEmbedding, MaskFillResult, ModelBackend, Segmentation,
    StaticEmbedding,
};
use crate::error::{Error, Result};
use crate::text::{check_span, fold, word_tokens, Span};

pub const FIXTURE_FORMAT: &str = "lexsimp-stub-fixture";
pub const FIXTURE_VERSION: u32 = 1;

pub use crate::hash::{fnv1a64, splitmix64, unit01};

pub fn hash_vector(key: &str, dim: usize) -> Vec<f64> {
    let mut state = fnv1a64(key.as_bytes());
    let mut v: Vec<f64> = (0..dim)
        .map(|_| 2.0 * unit01(splitmix64(&mut state)) - 1.0)
        .collect();
    let n = crate::backend::norm(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sense {
    #[serde(default)]
    pub cues: Vec<String>,
    pub mix: BTreeMap<String, f64>,
}

impl Sense {
    pub fn concept(name: &str) -> Self {
        Sense {
            cues: Vec::new(),
            mix: BTreeMap::from([(name.to_string(), 1.0)]),
        }
    }

    pub fn with_cues<I, S>(mut self, cues: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.cues = cues.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_mix(mut self, concept: &str, weight: f64) -> Self {
        self.mix.insert(concept.to_string(), weight);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillRule {
    pub cues: Vec<String>,
    pub candidates: Vec<(String, f64)>,
}

/// On-disk description of a stub world. Serialised as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StubFixture {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub dim: usize,
    pub static_dim: usize,
    pub seed: u64,
    pub layers: Vec<u32>,
    pub mask_token: String,
    pub unlisted_penalty: f64,
    pub max_single_token_chars: usize,
    pub static_fallback: bool,
    /// Words that are always a single token.
    pub vocab: BTreeSet<String>,
    pub segmentations: BTreeMap<String, Vec<String>>,
    pub senses: BTreeMap<String, Vec<Sense>>,
    pub static_vectors: BTreeMap<String, Vec<f64>>,
    pub fills: BTreeMap<String, Vec<(String, f64)>>,
    pub fill_rules: Vec<FillRule>,
}

impl Default for StubFixture {
    fn default() -> Self {
        StubFixture {
            format: FIXTURE_FORMAT.to_string(),
            version: FIXTURE_VERSION,
            name: "default".to_string(),
            dim: 64,
            static_dim: 16,
            seed: 0,
            layers: vec![9, 10, 11, 12],
            mask_token: "[MASK]".to_string(),
            unlisted_penalty: 20.0,
            max_single_token_chars: 8,
            static_fallback: false,
            vocab: BTreeSet::new(),
            segmentations: BTreeMap::new(),
            senses: BTreeMap::new(),
            static_vectors: BTreeMap::new(),
            fills: BTreeMap::new(),
            fill_rules: Vec::new(),
        }
    }
}

impl StubFixture {
    pub fn new(name: &str) -> Self {
        StubFixture {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fixture: StubFixture = serde_json::from_str(text)?;
        fixture.validate()?;
        Ok(fixture)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    fn validate(&self) -> Result<()> {
        if self.format != FIXTURE_FORMAT {
            return Err(Error::Format {
                what: "stub fixture",
                found: self.format.clone(),
            });
        }
        if self.version != FIXTURE_VERSION {
            return Err(Error::Format {
                what: "stub fixture version",
                found: self.version.to_string(),
            });
        }
        if self.dim == 0 || self.layers.is_empty() || self.mask_token.is_empty() {
            return Err(Error::InvalidInput(
                "stub fixture needs dim > 0, at least one layer and a mask token".into(),
            ));
        }
        if let Some((word, v)) = self
            .static_vectors
            .iter()
            .find(|(_, v)| v.len() != self.static_dim)
        {
            return Err(Error::InvalidInput(format!(
                "static vector for {word:?} has {} dims, expected {}",
                v.len(),
                self.static_dim
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StubBackend {
    fixture: StubFixture,
    id: String,
}

impl StubBackend {
    pub fn new(fixture: StubFixture) -> Result<Self> {
        fixture.validate()?;
        let id = format!("stub:{}", fixture.name);
        Ok(StubBackend { fixture, id })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(StubFixture::load(path)?)
    }

    pub fn fixture(&self) -> &StubFixture {
        &self.fixture
    }

    fn key(&self, kind: &str, name: &str, layer: u32) -> String {
        format!("{}|{}|{}|L{}", self.fixture.seed, kind, name, layer)
    }

    /// Unit mean over layers of `weight * hash_vector` for every mix entry.
    fn position_vector<'a>(&self, kind: &str, mix: impl Iterator<Item = (&'a str, f64)> + Clone) -> Vec<f64> {
        let dim = self.fixture.dim;
        let mut acc = vec![0.0; dim];
        for &layer in &self.fixture.layers {
            for (name, weight) in mix.clone() {
                let v = hash_vector(&self.key(kind, name, layer), dim);
                acc.iter_mut().zip(&v).for_each(|(a, x)| *a += weight * x);
            }
        }
        let n = self.fixture.layers.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        let len = crate::backend::norm(&acc);
        if len > 0.0 {
            acc.iter_mut().for_each(|a| *a /= len);
        }
        acc
    }

    /// The sense chosen for `word` in `sentence`, ignoring tokens inside `span`.
    pub fn sense_for(&self, word: &str, sentence: &str, span: Span) -> Sense {
        let folded = fold(word);
        let Some(senses) = self.fixture.senses.get(&folded).filter(|s| !s.is_empty()) else {
            return Sense::concept(&folded);
        };
        let context: BTreeSet<String> = word_tokens(sentence)
            .into_iter()
            .filter(|t| t.span.end <= span.start || t.span.start >= span.end)
            .map(|t| t.form)
            .collect();
        senses
            .iter()
            .find(|s| s.cues.iter().any(|c| context.contains(&fold(c))))
            .unwrap_or(&senses[0])
            .clone()
    }

    fn fill_list(&self, masked_sentence: &str) -> Vec<(String, f64)> {
        if let Some(list) = self.fixture.fills.get(masked_sentence) {
            return list.clone();
        }
        let context: BTreeSet<String> = word_tokens(masked_sentence)
            .into_iter()
            .map(|t| t.form)
            .collect();
        self.fixture
            .fill_rules
            .iter()
            .find(|r| r.cues.iter().any(|c| context.contains(&fold(c))))
            .map(|r| r.candidates.clone())
            .unwrap_or_default()
    }

    /// Per-step log-probabilities used by [`ModelBackend::score_infill`]. A
    /// fixture-listed candidate is a single step carrying its listed score.
    pub fn step_logprobs(&self, masked_sentence: &str, candidate: &str) -> Result<Vec<f64>> {
        require_single_mask(masked_sentence, &self.fixture.mask_token)?;
        if let Some((_, score)) = self
            .fill_list(masked_sentence)
            .into_iter()
            .find(|(c, _)| c == candidate)
        {
            return Ok(vec![score]);
        }
        let seg = self.segment(candidate)?;
        Ok(seg
            .tokens
            .iter()
            .enumerate()
            .map(|(i, tok)| {
                let key = format!("{}|step|{}|{}|{}", self.fixture.seed, masked_sentence, i, tok);
                let mut state = fnv1a64(key.as_bytes());
                -(self.fixture.unlisted_penalty + unit01(splitmix64(&mut state)))
            })
            .collect())
    }
}

impl ModelBackend for StubBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.fixture.dim
    }

    fn static_dim(&self) -> usize {
        self.fixture.static_dim
    }

    fn mask_token(&self) -> &str {
        &self.fixture.mask_token
    }

    fn embed_in_context(
        &self,
        word: &str,
        sentence: &str,
        span: Span,
    ) -> Result<ContextualEmbedding> {
        check_span(sentence, word, span)?;
        let seg = self.segment(word)?;
        if !seg.is_multi_token() {
            let sense = self.sense_for(word, sentence, span);
            let mix = sense.mix.iter().map(|(c, w)| (c.as_str(), *w));
            return Ok(ContextualEmbedding(self.position_vector("ctx", mix)));
        }
        let dim = self.fixture.dim;
        let mut acc = vec![0.0; dim];
        for tok in &seg.tokens {
            let v = self.position_vector("sub", std::iter::once((tok.as_str(), 1.0)));
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
        }
        let n = seg.token_count() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(ContextualEmbedding(acc))
    }

    fn fill_mask(&self, masked_sentence: &str, beam_width: usize) -> Result<Vec<MaskFillResult>> {
        require_single_mask(masked_sentence, &self.fixture.mask_token)?;
        if beam_width == 0 {
            return Err(Error::InvalidInput("beam width must be at least 1".into()));
        }
        let mut list = self.fill_list(masked_sentence);
        // stable: equal scores keep fixture order
        list.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut seen = BTreeSet::new();
        list.retain(|(c, _)| seen.insert(c.clone()));
        Ok(list
            .into_iter()
            .take(beam_width)
            .enumerate()
            .map(|(i, (candidate, score))| MaskFillResult {
                candidate,
                score,
                beam_rank: i + 1,
            })
            .collect())
    }

    fn score_infill(&self, masked_sentence: &str, candidate: &str) -> Result<f64> {
        Ok(self
            .step_logprobs(masked_sentence, candidate)?
            .into_iter()
            .fold(0.0, |acc, x| acc + x))
    }

    fn embed_static(&self, word: &str) -> Option<StaticEmbedding> {
        let folded = fold(word);
        if let Some(v) = self.fixture.static_vectors.get(&folded) {
            return Some(StaticEmbedding(v.clone()));
        }
        if !self.fixture.static_fallback || folded.is_empty() {
            return None;
        }
        let marked: Vec<char> = format!("<{folded}>").chars().collect();
        let grams: Vec<String> = if marked.len() < 3 {
            vec![marked.iter().collect()]
        } else {
            marked.windows(3).map(|w| w.iter().collect()).collect()
        };
        let dim = self.fixture.static_dim;
        let mut acc = vec![0.0; dim];
        for g in &grams {
            let v = hash_vector(&self.key("ngram", g, 0), dim);
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
        }
        acc.iter_mut().for_each(|a| *a /= grams.len() as f64);
        Some(StaticEmbedding(acc))
    }

    fn segment(&self, word: &str) -> Result<Segmentation> {
        if word.is_empty() {
            return Err(Error::InvalidInput("cannot segment an empty word".into()));
        }
        let folded = fold(word);
        if let Some(tokens) = self.fixture.segmentations.get(&folded) {
            return Ok(Segmentation {
                tokens: tokens.clone(),
            });
        }
        let chars: Vec<char> = folded.chars().collect();
        if self.fixture.vocab.contains(&folded) || chars.len() <= self.fixture.max_single_token_chars {
            return Ok(Segmentation {
                tokens: vec![folded],
            });
        }
        let tokens = chars
            .chunks(4)
            .enumerate()
            .map(|(i, c)| {
                let piece: String = c.iter().collect();
                if i == 0 {
                    piece
                } else {
                    format!("##{piece}")
                }
            })
            .collect();
        Ok(Segmentation { tokens })
    }
}
