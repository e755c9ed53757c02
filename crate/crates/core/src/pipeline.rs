//! End-to-end simplification of target instances.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::augment::{
    ablation_mode, build_generation_table, compute_weights, score_augmented, AblationMode,
    ClusterGenerationTable, ClusterWeights, GenerationCache,
};
use crate::backend::ModelBackend;
use crate::corpus::CorpusStore;
use crate::error::{Error, Result};
use crate::freq::FrequencyTable;
use crate::index::DecontextIndex;
use crate::profile::Profile;
use crate::rerank::{
    fuse, merge_and_filter, signal_augmented, signal_embedding, signal_frequency,
    signal_perplexity, Signal, SignalRanking,
};
use crate::target::{generate_m1, ScoredCandidate, Source, TargetInstance};
use crate::text::Span;

/// One instance to simplify. Without a span the first occurrence is used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceInput {
    pub id: String,
    pub sentence: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
}

impl InstanceInput {
    pub fn new(id: impl Into<String>, sentence: &str, target: &str) -> Self {
        InstanceInput {
            id: id.into(),
            sentence: sentence.to_string(),
            target: target.to_string(),
            span: None,
        }
    }

    pub fn target_instance(&self) -> Result<TargetInstance> {
        match self.span {
            Some(span) => TargetInstance::with_span(&self.sentence, &self.target, span),
            None => TargetInstance::locate(&self.sentence, &self.target),
        }
    }
}

/// Read instances as JSON lines (`sentence`, `target` or `word`, optional
/// `id` and `span: [start, end]`) or as TSV (`sentence<TAB>target[<TAB>...]`,
/// so TSAR gold files work directly). Ids default to the 1-based line number.
pub fn parse_instances(text: &str, path: &Path) -> Result<Vec<InstanceInput>> {
    let json = text.trim_start().starts_with('{');
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let line_id = (i + 1).to_string();
        if json {
            let v: Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            let field = |k: &str| v.get(k).and_then(Value::as_str).map(String::from);
            let sentence = field("sentence").ok_or_else(|| err("missing sentence".into()))?;
            let target = field("target")
                .or_else(|| field("word"))
                .ok_or_else(|| err("missing target".into()))?;
            let id = match v.get("id") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                None => line_id,
                Some(_) => return Err(err("id must be a string or number".into())),
            };
            let span = match v.get("span") {
                None | Some(Value::Null) => None,
                Some(s) => {
                    let pair: (usize, usize) =
                        serde_json::from_value(s.clone()).map_err(|_| err("span must be [start, end]".into()))?;
                    Some(Span::new(pair.0, pair.1))
                }
            };
            out.push(InstanceInput {
                id,
                sentence,
                target,
                span,
            });
        } else {
            let cols: Vec<&str> = line.trim_end().split('\t').collect();
            if cols.len() < 2 {
                return Err(err("expected sentence<TAB>target".into()));
            }
            out.push(InstanceInput::new(line_id, cols[0], cols[1].trim()));
        }
    }
    Ok(out)
}

pub fn load_instances(path: impl AsRef<Path>) -> Result<Vec<InstanceInput>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_instances(&text, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub word: String,
    pub combined: f64,
    pub source: Source,
    /// Rank under each signal that took part in fusion.
    pub ranks: BTreeMap<String, usize>,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub raw: Vec<u64>,
    pub effective: Vec<u64>,
    pub fallback_applied: bool,
    pub sentences: Vec<usize>,
    /// The most generated words of each cluster.
    pub top: Vec<Vec<String>>,
}

/// Output for one instance, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplifyRecord {
    pub id: String,
    pub sentence: String,
    pub target: String,
    pub span: Span,
    pub mode: AblationMode,
    pub weights: [f64; 4],
    pub candidates: Vec<RankedCandidate>,
    pub m1: Vec<String>,
    pub m2: Vec<String>,
    pub clusters: Option<ClusterReport>,
    /// Why the candidate list is empty, when it is.
    pub reason: Option<String>,
}

impl SimplifyRecord {
    pub fn words(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.word.as_str()).collect()
    }
}

/// Target-context candidates, augmented candidates, and the generation table
/// with raw and effective cluster weights when the target has clusters.
pub type Generated = (
    Vec<ScoredCandidate>,
    Vec<ScoredCandidate>,
    Option<(ClusterGenerationTable, ClusterWeights, ClusterWeights)>,
);

/// Everything one simplification run needs.
#[derive(Clone)]
pub struct Simplifier<'a> {
    pub backend: &'a dyn ModelBackend,
    pub store: &'a CorpusStore,
    pub index: &'a DecontextIndex,
    /// Table behind the word-frequency signal.
    pub freq: &'a FrequencyTable,
    pub profile: Profile,
    pub mode: AblationMode,
    pub cache: Option<&'a GenerationCache>,
    /// Corpus frequencies used to break ties inside every signal.
    tie_freq: FrequencyTable,
}

impl<'a> Simplifier<'a> {
    pub fn new(
        backend: &'a dyn ModelBackend,
        store: &'a CorpusStore,
        index: &'a DecontextIndex,
        freq: &'a FrequencyTable,
        profile: Profile,
    ) -> Result<Self> {
        profile.validate()?;
        if index.backend_id != backend.id() {
            return Err(Error::BackendMismatch {
                built: index.backend_id.clone(),
                current: backend.id().to_string(),
            });
        }
        Ok(Simplifier {
            backend,
            store,
            index,
            freq,
            profile,
            mode: AblationMode::Soft,
            cache: None,
            tie_freq: FrequencyTable::from_corpus(store),
        })
    }

    pub fn with_mode(mut self, mode: AblationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_cache(mut self, cache: &'a GenerationCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn generation_table(&self, word: &str) -> Result<ClusterGenerationTable> {
        let p = &self.profile;
        if let Some(t) = self
            .cache
            .and_then(|c| c.get(word, self.backend.id(), self.index.seed, p.beam))
        {
            return Ok(ClusterGenerationTable { m2: p.m2, ..t.clone() });
        }
        build_generation_table(word, self.store, self.index, self.backend, p)
    }

    /// Target-context candidates, augmented candidates and the cluster weights
    /// that produced them.
    pub fn generate(
        &self,
        target: &TargetInstance,
    ) -> Result<Generated> {
        let m1 = generate_m1(target, self.index, self.backend, &self.profile)?;
        let table = self.generation_table(&target.word)?;
        if table.empty {
            return Ok((m1, Vec::new(), None));
        }
        let raw = compute_weights(&table, &m1);
        let effective = ablation_mode(&raw, self.mode);
        let m2 = match score_augmented(&table, &effective) {
            Ok(m2) => m2,
            Err(Error::InsufficientData(_)) => Vec::new(),
            Err(e) => return Err(e),
        };
        Ok((m1, m2, Some((table, raw, effective))))
    }

    fn rank_signal(
        &self,
        signal: Signal,
        pool: &[ScoredCandidate],
        target: &TargetInstance,
    ) -> Result<SignalRanking> {
        let tie = Some(&self.tie_freq);
        match signal {
            Signal::EmbeddingSimilarity => {
                signal_embedding(pool, target, self.backend, self.profile.alpha, tie)
            }
            Signal::LmPerplexity => signal_perplexity(pool, target, self.backend, tie),
            Signal::WordFrequency => Ok(signal_frequency(pool, self.freq)),
            Signal::AugmentedScore => Ok(signal_augmented(pool, tie)),
        }
    }

    pub fn simplify(&self, input: &InstanceInput) -> Result<SimplifyRecord> {
        let target = input.target_instance()?;
        let (m1, m2, clusters) = self.generate(&target)?;
        let mut record = SimplifyRecord {
            id: input.id.clone(),
            sentence: target.sentence.clone(),
            target: target.word.clone(),
            span: target.span,
            mode: self.mode,
            weights: self.profile.weights,
            candidates: Vec::new(),
            m1: m1.iter().map(|c| c.word.clone()).collect(),
            m2: m2.iter().map(|c| c.word.clone()).collect(),
            clusters: clusters.as_ref().map(|(t, raw, eff)| ClusterReport {
                raw: raw.raw.clone(),
                effective: eff.w.clone(),
                fallback_applied: raw.fallback_applied,
                sentences: t.sentences.clone(),
                top: (0..t.k())
                    .map(|k| t.top_m2(k).into_iter().map(|(w, _)| w).collect())
                    .collect(),
            }),
            reason: None,
        };
        if m1.is_empty() && m2.is_empty() {
            record.reason = Some("no candidates were generated".into());
            return Ok(record);
        }
        let pool = merge_and_filter(&m1, &m2, &target, self.profile.edit_threshold)?;
        if pool.is_empty() {
            record.reason = Some("every candidate was removed by the edit-distance filter".into());
            return Ok(record);
        }

        // zero-weight signals cannot affect the order and are not computed
        let words: Vec<String> = pool.iter().map(|c| c.word.clone()).collect();
        let rankings: Vec<SignalRanking> = Signal::ALL
            .par_iter()
            .enumerate()
            .map(|(i, &sig)| {
                if self.profile.weights[i] == 0.0 {
                    Ok(SignalRanking::from_scores(sig, &words, &BTreeMap::new(), None))
                } else {
                    self.rank_signal(sig, &pool, &target)
                }
            })
            .collect::<Result<_>>()?;
        let rankings: [SignalRanking; 4] = rankings.try_into().expect("four signals");
        let fused = fuse(&rankings, self.profile.weights)?;
        let by_word: BTreeMap<&str, &ScoredCandidate> = pool.iter().map(|c| (c.word.as_str(), c)).collect();
        record.candidates = fused
            .candidates
            .into_iter()
            .map(|f| {
                let c = by_word[f.word.as_str()];
                let mut ranks = BTreeMap::new();
                let mut scores = c.signal_scores.clone();
                for (i, r) in rankings.iter().enumerate() {
                    if self.profile.weights[i] != 0.0 {
                        ranks.insert(r.signal.as_str().to_string(), f.ranks[i]);
                        if let Some(&s) = r.scores.get(&f.word) {
                            scores.insert(r.signal.as_str().to_string(), s);
                        }
                    }
                }
                RankedCandidate {
                    word: f.word,
                    combined: f.combined,
                    source: c.source,
                    ranks,
                    scores,
                }
            })
            .collect();
        Ok(record)
    }

    /// Simplify many instances concurrently; output order follows input order.
    pub fn simplify_all(&self, inputs: &[InstanceInput]) -> Result<Vec<SimplifyRecord>> {
        inputs.par_iter().map(|i| self.simplify(i)).collect()
    }
}

/// JSON lines, one record per instance.
pub fn records_to_jsonl(records: &[SimplifyRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Best-first candidate words keyed by instance id.
pub fn records_to_predictions(records: &[SimplifyRecord]) -> BTreeMap<String, Vec<String>> {
    records
        .iter()
        .map(|r| (r.id.clone(), r.candidates.iter().map(|c| c.word.clone()).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_from_tsv_and_jsonl() {
        let tsv = "The cat sat.\tcat\tfeline\n\nA dog.\tdog\n";
        let v = parse_instances(tsv, Path::new("i")).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!((v[0].id.as_str(), v[1].id.as_str()), ("1", "3"));
        let jsonl = "{\"id\": \"x\", \"sentence\": \"a cat\", \"word\": \"cat\", \"span\": [2, 5]}\n{\"sentence\": \"b\", \"target\": \"b\"}\n";
        let v = parse_instances(jsonl, Path::new("i")).unwrap();
        assert_eq!(v[0].span, Some(Span::new(2, 5)));
        assert_eq!(v[1].id, "2");
        assert!(v[0].target_instance().is_ok());
        assert!(parse_instances("only one column\n", Path::new("i")).is_err());
        assert!(parse_instances("{\"sentence\": \"a\"}\n", Path::new("i")).is_err());
    }
}
