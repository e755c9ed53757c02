//! Monolingual corpus ingestion, word-form index and per-word sentence sampling.
//!
//! Sentences are identified by their 1-based line number in the source
//! stream. Word forms are matched after case folding on word boundaries (see
//! [`crate::text::word_tokens`]); there is no lemmatisation.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::text::{find_word, fold, has_alphanumeric, whitespace_token_count, word_tokens, Span};

pub const STORE_FORMAT: &str = "lexsimp-corpus";
pub const STORE_VERSION: u32 = 1;
pub const DEFAULT_MAX_TOKENS: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: u32,
    pub text: String,
}

/// Folded word form to the ids of sentences containing it, ascending and unique.
pub type WordIndex = BTreeMap<String, Vec<u32>>;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub word: String,
    pub sentences: Vec<(Sentence, Span)>,
    pub requested: usize,
    pub seed: u64,
    /// The word has no indexed sentences at all.
    pub absent: bool,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStore {
    sentences: Vec<Sentence>,
    index: WordIndex,
    counts: BTreeMap<String, u64>,
    total_tokens: u64,
    max_tokens: usize,
}

#[derive(Serialize, Deserialize)]
struct StoreFile {
    format: String,
    version: u32,
    max_tokens: usize,
    sentences: Vec<Sentence>,
}

impl CorpusStore {
    /// Read one sentence per line. Blank lines are skipped but still consume an id.
    pub fn ingest<R: BufRead>(mut reader: R, max_tokens: usize) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut buf = Vec::new();
        let mut line_no = 0usize;
        loop {
            buf.clear();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            line_no += 1;
            let line = std::str::from_utf8(&buf).map_err(|_| Error::Encoding { line: line_no })?;
            let text = line.trim_end_matches(['\n', '\r']);
            if text.trim().is_empty() {
                continue;
            }
            let id = u32::try_from(line_no)
                .map_err(|_| Error::InvalidInput("corpus exceeds u32 line ids".into()))?;
            sentences.push(Sentence {
                id,
                text: text.to_string(),
            });
        }
        Ok(Self::from_sentences(sentences, max_tokens))
    }

    pub fn ingest_path(path: impl AsRef<Path>, max_tokens: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::ingest(std::io::BufReader::new(file), max_tokens)
    }

    pub fn from_lines<I, S>(lines: I, max_tokens: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let joined: Vec<String> = lines.into_iter().map(|s| s.as_ref().to_string()).collect();
        Self::ingest(joined.join("\n").as_bytes(), max_tokens).expect("in-memory lines are valid UTF-8")
    }

    fn from_sentences(mut sentences: Vec<Sentence>, max_tokens: usize) -> Self {
        sentences.sort_by_key(|s| s.id);
        let mut index: WordIndex = BTreeMap::new();
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut total_tokens = 0;
        for s in &sentences {
            for tok in word_tokens(&s.text) {
                total_tokens += 1;
                *counts.entry(tok.form.clone()).or_default() += 1;
                let ids = index.entry(tok.form).or_default();
                if ids.last() != Some(&s.id) {
                    ids.push(s.id);
                }
            }
        }
        CorpusStore {
            sentences,
            index,
            counts,
            total_tokens,
            max_tokens,
        }
    }

    pub fn index(&self) -> &WordIndex {
        &self.index
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn sentence(&self, id: u32) -> Option<&Sentence> {
        self.sentences
            .binary_search_by_key(&id, |s| s.id)
            .ok()
            .map(|i| &self.sentences[i])
    }

    /// Occurrence count of a word form (folded).
    pub fn frequency(&self, word: &str) -> u64 {
        self.counts.get(&fold(word)).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// The `n` most frequent word forms containing at least one alphanumeric
    /// char; ties by form.
    pub fn top_words(&self, n: usize) -> Vec<(String, u64)> {
        let mut all: Vec<(String, u64)> = self
            .counts
            .iter()
            .filter(|(w, _)| has_alphanumeric(w))
            .map(|(w, c)| (w.clone(), *c))
            .collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(n);
        all
    }

    fn eligible(&self, id: u32) -> bool {
        self.sentence(id)
            .is_some_and(|s| whitespace_token_count(&s.text) <= self.max_tokens)
    }

    /// Sentence ids containing `word` that are short enough to sample.
    pub fn eligible_ids(&self, word: &str) -> Vec<u32> {
        self.index
            .get(&fold(word))
            .map(|ids| ids.iter().copied().filter(|&id| self.eligible(id)).collect())
            .unwrap_or_default()
    }

    /// Uniform sample without replacement of up to `n` sentences containing
    /// `word`, returned in id order with the span of the first occurrence.
    pub fn sample(&self, word: &str, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be at least 1".into()));
        }
        let folded = fold(word);
        let absent = !self.index.contains_key(&folded);
        let ids = self.eligible_ids(&folded);
        let chosen: Vec<u32> = if ids.len() <= n {
            ids
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &folded));
            let mut picked: Vec<u32> = rand::seq::index::sample(&mut rng, ids.len(), n)
                .into_iter()
                .map(|i| ids[i])
                .collect();
            picked.sort_unstable();
            picked
        };
        Ok(SampleSet {
            word: folded.clone(),
            sentences: self.with_spans(&folded, &chosen),
            requested: n,
            seed,
            absent,
        })
    }

    /// Sentences by id with the span of the first occurrence of `word`.
    pub fn with_spans(&self, word: &str, ids: &[u32]) -> Vec<(Sentence, Span)> {
        ids.iter()
            .filter_map(|&id| {
                let s = self.sentence(id)?;
                let span = find_word(&s.text, word)?;
                Some((s.clone(), span))
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = StoreFile {
            format: STORE_FORMAT.into(),
            version: STORE_VERSION,
            max_tokens: self.max_tokens,
            sentences: self.sentences.clone(),
        };
        std::fs::write(path, serde_json::to_string(&file)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: StoreFile = serde_json::from_str(&text)?;
        if file.format != STORE_FORMAT || file.version != STORE_VERSION {
            return Err(Error::Format {
                what: "corpus store",
                found: format!("{} v{}", file.format, file.version),
            });
        }
        Ok(Self::from_sentences(file.sentences, file.max_tokens))
    }

    /// Load either a persisted store (JSON) or a plain one-sentence-per-line corpus.
    pub fn open(path: impl AsRef<Path>, max_tokens: usize) -> Result<Self> {
        let path = path.as_ref();
        let head = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if head.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{')
            && std::str::from_utf8(&head).is_ok_and(|t| t.contains(STORE_FORMAT))
        {
            Self::load(path)
        } else {
            Self::ingest(head.as_slice(), max_tokens)
        }
    }
}
