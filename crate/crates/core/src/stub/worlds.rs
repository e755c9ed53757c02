//! Ready-made fixture worlds: a stub fixture plus the corpus, vocabulary,
//! frequency table and gold instances that go with it.
//!
//! * `elite`: four usage clusters of "elite" whose generation counts give
//!   cluster weights (0, 5, 1, 0) against the target-context candidates.
//! * `bole`: a rare multi-subword target that shares a subword with "toe".
//! * `polysemy-0` .. `polysemy-9`: one target sense matches exactly one
//!   cluster while another sense dominates the corpus.
//! * `pool`: enough candidates to fill large M₁/M₂ pools.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::freq::FrequencyTable;
use crate::index::{ClusterConfig, DecontextIndex, Vocabulary};
use crate::profile::Profile;
use crate::text::{find_word, replace_span};
use crate::{CorpusStore, StubBackend};

use super::{FillRule, Sense, StubFixture};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldRow {
    pub sentence: String,
    pub target: String,
    pub gold: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub name: String,
    pub fixture: StubFixture,
    pub corpus: Vec<String>,
    pub vocabulary: Vec<String>,
    /// Target words whose clusters are precomputed in the index.
    pub targets: Vec<String>,
    pub freq: Vec<(String, f64)>,
    pub gold: Vec<GoldRow>,
    pub profile: Profile,
}

impl World {
    pub fn backend(&self) -> StubBackend {
        StubBackend::new(self.fixture.clone()).expect("world fixtures are valid")
    }

    pub fn store(&self) -> CorpusStore {
        CorpusStore::from_lines(&self.corpus, self.profile.max_sentence_tokens)
    }

    pub fn freq_table(&self) -> FrequencyTable {
        FrequencyTable::from_pairs(self.freq.iter().map(|(w, z)| (w.as_str(), *z)))
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig::new(self.profile.k, self.profile.sample_n, self.profile.seed)
    }

    pub fn build_index(&self, backend: &StubBackend, store: &CorpusStore) -> Result<DecontextIndex> {
        let vocab = Vocabulary::from_words(&self.vocabulary, Some(store));
        DecontextIndex::build(vocab, &self.targets, store, backend, &self.cluster_config())
    }

    /// TSAR-style gold file; instance ids are line numbers.
    pub fn gold_tsv(&self) -> String {
        self.gold
            .iter()
            .map(|g| {
                let mut cols = vec![g.sentence.clone(), g.target.clone()];
                cols.extend(g.gold.iter().cloned());
                cols.join("\t") + "\n"
            })
            .collect()
    }

    /// Write `fixture.json`, `corpus.txt`, `vocab.txt`, `freq.tsv`,
    /// `gold.tsv` and `profiles.toml` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        self.fixture.save(dir.join("fixture.json"))?;
        write("corpus.txt", self.corpus.iter().map(|s| format!("{s}\n")).collect())?;
        write("vocab.txt", self.vocabulary.iter().map(|s| format!("{s}\n")).collect())?;
        self.freq_table().save(dir.join("freq.tsv"))?;
        write("gold.tsv", self.gold_tsv())?;
        let set = crate::ProfileSet {
            profiles: BTreeMap::from([(self.name.clone(), self.profile.clone())]),
        };
        set.save(dir.join("profiles.toml"))
    }
}

pub fn names() -> Vec<String> {
    let mut v = vec!["elite".to_string(), "bole".to_string(), "pool".to_string()];
    v.extend((0..POLYSEMY.len()).map(|i| format!("polysemy-{i}")));
    v
}

pub fn by_name(name: &str) -> Option<World> {
    match name {
        "elite" => Some(elite()),
        "bole" => Some(bole()),
        "pool" => Some(pool()),
        _ => name
            .strip_prefix("polysemy-")
            .and_then(|i| i.parse::<usize>().ok())
            .filter(|&i| i < POLYSEMY.len())
            .map(polysemy),
    }
}

fn masked(sentence: &str, word: &str, mask: &str) -> String {
    let span = find_word(sentence, word).expect("template contains the word");
    replace_span(sentence, span, mask).0
}

/// Fill lists for a cluster of sentences so that a word listed with count
/// `c` is generated by exactly the first `c` sentences.
fn counted_fills(fixture: &mut StubFixture, sentences: &[String], word: &str, counts: &[(&str, u64)]) {
    let mut order: Vec<&(&str, u64)> = counts.iter().collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    for (i, s) in sentences.iter().enumerate() {
        let list: Vec<(String, f64)> = order
            .iter()
            .filter(|(_, c)| *c > i as u64)
            .enumerate()
            .map(|(r, (w, _))| (w.to_string(), -0.1 * (r + 1) as f64))
            .collect();
        fixture.fills.insert(masked(s, word, &fixture.mask_token), list);
    }
}

fn mixed(concept: &str, own: &str, t: f64) -> Vec<Sense> {
    vec![Sense::concept(concept).with_mix(own, t)]
}

/// Sentences that mention `word` `n` times, for its index entry.
fn vocab_sentences(word: &str, n: usize) -> Vec<String> {
    (0..n)
        .map(|j| format!("They talked about the {word} on day {j}."))
        .collect()
}

/// Elite world: the target "elite" in a ruling-group context. Cluster counts
/// are chosen so that the target-context candidates overlap cluster 2 five
/// times and cluster 3 once.
pub fn elite() -> World {
    let mut f = StubFixture::new("elite");
    f.dim = 256;
    f.seed = 7;

    let m1 = [
        "establishment", "hierarchy", "wealthy", "bureaucracy", "apparatus", "leadership",
        "ruling", "affluent", "clergy", "mafia", "aristocracy", "nobility", "oligarchy",
        "regime", "dynasty",
    ];
    let distractors = ["president", "sect", "minister", "army", "people", "press"];

    let c1: &[(&str, u64)] = &[
        ("special", 32), ("military", 20), ("small", 7), ("specialized", 6), ("american", 5),
        ("professional", 4), ("secret", 3), ("infamous", 2), ("heroic", 1), ("undercover", 1),
    ];
    let c2: &[(&str, u64)] = &[
        ("class", 20), ("political", 19), ("privileged", 18), ("rich", 17), ("majority", 16),
        ("minority", 15), ("party", 13), ("group", 12), ("wealthy", 11), ("liberal", 10),
        ("aristocracy", 6), ("nobility", 5), ("oligarchy", 4), ("regime", 3),
    ];
    let c3: &[(&str, u64)] = &[
        ("exclusive", 70), ("international", 59), ("prestigious", 50), ("new", 45), ("small", 40),
        ("professional", 36), ("top", 32), ("large", 30), ("select", 28), ("special", 24),
        ("wealthy", 17), ("privileged", 8), ("class", 4),
    ];
    let c4: &[(&str, u64)] = &[
        ("top", 80), ("professional", 60), ("great", 52), ("competitive", 22), ("good", 20),
        ("high", 18), ("olympic", 16), ("pro", 14), ("collegiate", 12), ("excellent", 10),
        ("select", 6),
    ];
    let templates = [
        ("commando", "The elite commando squad finished drill {i}."),
        ("ruling", "The ruling elite gathered for council {i}."),
        ("club", "The elite club admitted member {i}."),
        ("athletes", "The elite athletes ran in race {i}."),
    ];
    let cluster_counts = [c1, c2, c3, c4];

    f.senses.insert(
        "elite".into(),
        templates
            .iter()
            .zip(["elite_military", "elite_group", "elite_exclusive", "elite_sport"])
            .map(|((cue, _), concept)| Sense::concept(concept).with_cues([*cue]))
            .collect(),
    );
    for (i, w) in m1.iter().enumerate() {
        f.senses.insert(w.to_string(), mixed("elite_group", w, 0.1 + 0.08 * i as f64));
    }
    for w in distractors {
        f.senses.insert(w.into(), mixed("elite_group", w, 3.0));
    }
    // in-context readings of augmented candidates for the embedding signal
    for (w, t) in [("class", 0.12), ("rich", 0.9), ("privileged", 1.1), ("political", 1.3), ("group", 1.0)] {
        f.senses.insert(w.into(), mixed("elite_group", w, t));
    }

    let per_cluster: Vec<Vec<String>> = templates
        .iter()
        .zip(&cluster_counts)
        .map(|((_, tpl), counts)| {
            let n = counts.iter().map(|c| c.1).max().unwrap_or(0);
            (0..n).map(|i| tpl.replace("{i}", &i.to_string())).collect()
        })
        .collect();
    for (sentences, counts) in per_cluster.iter().zip(&cluster_counts) {
        counted_fills(&mut f, sentences, "elite", counts);
    }
    // first sentence of each cluster leads, so cluster ids follow template order
    let mut corpus: Vec<String> = per_cluster.iter().map(|s| s[0].clone()).collect();
    for s in &per_cluster {
        corpus.extend(s[1..].iter().cloned());
    }
    for w in m1.iter().chain(&distractors) {
        corpus.extend(vocab_sentences(w, 3));
    }

    let sentence = "Critics say the ruling elite controls the national press.";
    f.fills.insert(
        masked(sentence, "elite", &f.mask_token),
        vec![
            ("class".into(), -0.5),
            ("establishment".into(), -0.7),
            ("leadership".into(), -0.9),
            ("rich".into(), -1.2),
            ("hierarchy".into(), -1.4),
            ("privileged".into(), -1.6),
            ("group".into(), -1.8),
        ],
    );

    let mut vocab_set: Vec<String> = m1.iter().chain(&distractors).map(|w| w.to_string()).collect();
    for counts in &cluster_counts {
        vocab_set.extend(counts.iter().map(|c| c.0.to_string()));
    }
    f.vocab.extend(vocab_set.iter().cloned());
    f.vocab.insert("elite".into());

    let freq = [
        ("class", 5.6), ("group", 5.8), ("rich", 5.2), ("leadership", 5.0), ("establishment", 4.8),
        ("political", 5.4), ("privileged", 4.2), ("wealthy", 4.5), ("hierarchy", 4.1),
        ("regime", 4.6), ("top", 5.9), ("professional", 5.3), ("elite", 4.3),
    ]
    .map(|(w, z)| (w.to_string(), z))
    .to_vec();

    let gold = vec![GoldRow {
        sentence: sentence.into(),
        target: "elite".into(),
        gold: ["class", "class", "class", "establishment", "establishment", "group", "privileged", "rich", "aristocracy", "nobility", "select"]
            .map(String::from)
            .to_vec(),
    }];

    let profile = Profile {
        vocab_size: m1.len() + distractors.len(),
        ..Profile::stub()
    };
    World {
        name: "elite".into(),
        fixture: f,
        corpus,
        vocabulary: m1.iter().chain(&distractors).map(|w| w.to_string()).collect(),
        targets: vec!["elite".into()],
        freq,
        gold,
        profile,
    }
}

/// Bole world: "bole" splits into subwords, one of which it shares with
/// "toe"; static vectors place "bole" near "bough" and "trunk" and far from
/// "toe".
pub fn bole() -> World {
    let mut f = StubFixture::new("bole");
    f.dim = 256;
    f.seed = 11;
    f.static_dim = 4;
    let seg = |s: &[&str]| s.iter().map(|t| t.to_string()).collect::<Vec<_>>();
    f.segmentations.insert("bole".into(), seg(&["bo", "##l", "##e"]));
    f.segmentations.insert("toe".into(), seg(&["to", "##e"]));
    f.segmentations.insert("bough".into(), seg(&["bo", "##ug", "##h"]));
    let vocab = ["toe", "bough", "trunk", "stem", "branch", "finger", "heel", "bark", "log", "shoe"];
    for w in ["trunk", "stem", "branch", "bark", "log"] {
        f.senses.insert(w.into(), mixed("tree_part", w, 2.5));
    }
    for w in ["finger", "heel", "shoe"] {
        f.senses.insert(w.into(), mixed("body_part", w, 2.5));
    }
    let statics: [(&str, [f64; 4]); 11] = [
        ("bole", [1.0, 0.0, 0.0, 0.0]),
        ("bough", [0.9, 0.3, 0.1, 0.0]),
        ("trunk", [0.95, 0.1, 0.2, 0.0]),
        ("stem", [0.8, 0.4, 0.0, 0.1]),
        ("branch", [0.7, 0.5, 0.1, 0.0]),
        ("bark", [0.6, 0.2, 0.5, 0.0]),
        ("log", [0.7, 0.0, 0.3, 0.3]),
        ("toe", [-0.6, 0.0, 0.2, 0.8]),
        ("finger", [-0.5, 0.1, 0.1, 0.9]),
        ("heel", [-0.4, 0.0, 0.3, 0.9]),
        ("shoe", [-0.2, 0.3, 0.0, 0.9]),
    ];
    for (w, v) in statics {
        f.static_vectors.insert(w.into(), v.to_vec());
    }
    f.fill_rules.push(FillRule {
        cues: vec!["sawed".into(), "tree".into()],
        candidates: vec![("trunk".into(), -0.5), ("log".into(), -0.9), ("stem".into(), -1.3)],
    });
    f.vocab.extend(vocab.iter().map(|w| w.to_string()));

    let mut corpus: Vec<String> = (0..12)
        .map(|i| format!("The tree had a thick bole near marker {i}."))
        .collect();
    for w in vocab {
        corpus.extend(vocab_sentences(w, 3));
    }
    let sentence = "They sawed the bole into logs.";
    World {
        name: "bole".into(),
        fixture: f,
        corpus,
        vocabulary: vocab.map(String::from).to_vec(),
        targets: Vec::new(),
        freq: [("trunk", 4.8), ("toe", 4.5), ("stem", 4.3), ("log", 4.9), ("bough", 3.0), ("bole", 2.0)]
            .map(|(w, z)| (w.to_string(), z))
            .to_vec(),
        gold: vec![GoldRow {
            sentence: sentence.into(),
            target: "bole".into(),
            gold: ["trunk", "trunk", "stem"].map(String::from).to_vec(),
        }],
        profile: Profile {
            vocab_size: vocab.len(),
            ..Profile::stub()
        },
    }
}

/// Target word and one context cue per sense.
pub const POLYSEMY: [(&str, [&str; 4]); 10] = [
    ("bank", ["river", "loan", "pilot", "blood"]),
    ("bat", ["cave", "cricket", "eyelid", "brick"]),
    ("crane", ["marsh", "harbour", "neck", "origami"]),
    ("spring", ["season", "mattress", "water", "ambush"]),
    ("pitch", ["stadium", "singer", "tar", "sales"]),
    ("seal", ["ocean", "envelope", "pipe", "treaty"]),
    ("mole", ["garden", "spy", "skin", "chemistry"]),
    ("bass", ["lake", "guitar", "speaker", "choir"]),
    ("match", ["tennis", "fire", "dating", "colour"]),
    ("palm", ["beach", "hand", "reader", "oil"]),
];

/// The candidate the target sense should produce first, for world `i`.
pub fn polysemy_expected(i: usize) -> String {
    let (word, cues) = POLYSEMY[i];
    format!("{word}{}0", cues[i % 4])
}

/// Polysemy world `i`: the target is used in sense `i % 4`, while sense
/// `(i + 1) % 4` dominates the sampled sentences.
pub fn polysemy(i: usize) -> World {
    let (word, cues) = POLYSEMY[i];
    let sense = i % 4;
    let dominant = (i + 1) % 4;
    let mut f = StubFixture::new(&format!("polysemy-{i}"));
    f.dim = 256;
    f.seed = 100 + i as u64;
    let concept = |j: usize| format!("{word}:{}", cues[j]);
    f.senses.insert(
        word.into(),
        (0..4).map(|j| Sense::concept(&concept(j)).with_cues([cues[j]])).collect(),
    );
    let cand = |j: usize, m: usize| format!("{word}{}{m}", cues[j]);
    let mut vocab = Vec::new();
    for j in 0..4 {
        for m in 0..6 {
            let c = cand(j, m);
            f.senses.insert(c.clone(), mixed(&concept(j), &c, 0.2 + 0.02 * m as f64));
            vocab.push(c);
        }
    }
    for m in 0..10 {
        let d = format!("{word}near{m}");
        f.senses.insert(d.clone(), mixed(&concept(sense), &d, 1.2));
        vocab.push(d);
    }
    f.vocab.extend(vocab.iter().cloned());
    f.vocab.insert(word.into());

    let sizes: Vec<u64> = (0..4)
        .map(|j| if j == dominant { 60 } else if j == sense { 24 } else { 16 })
        .collect();
    let per_sense: Vec<Vec<String>> = (0..4)
        .map(|j| {
            (0..sizes[j])
                .map(|n| format!("Near the {} the {word} was seen in case {n}.", cues[j]))
                .collect()
        })
        .collect();
    for j in 0..4 {
        let names: Vec<String> = (0..6).map(|m| cand(j, m)).collect();
        let counts: Vec<(&str, u64)> = names
            .iter()
            .enumerate()
            .map(|(m, c)| (c.as_str(), sizes[j] - 2 * m as u64))
            .collect();
        counted_fills(&mut f, &per_sense[j], word, &counts);
    }
    let mut corpus: Vec<String> = per_sense.iter().map(|s| s[0].clone()).collect();
    for s in &per_sense {
        corpus.extend(s[1..].iter().cloned());
    }
    for w in &vocab {
        corpus.extend(vocab_sentences(w, 2));
    }
    let sentence = format!("We stood by the {} and watched the {word} closely.", cues[sense]);
    World {
        name: format!("polysemy-{i}"),
        fixture: f,
        corpus,
        vocabulary: vocab.clone(),
        targets: vec![word.into()],
        freq: Vec::new(),
        gold: vec![GoldRow {
            sentence,
            target: word.into(),
            gold: vec![polysemy_expected(i)],
        }],
        profile: Profile {
            vocab_size: vocab.len(),
            ..Profile::stub()
        },
    }
}

/// Pool world: a single-sense target with 60 vocabulary words and 80
/// distinct generated candidates.
pub fn pool() -> World {
    let word = "verbose";
    let mut f = StubFixture::new("pool");
    f.dim = 128;
    f.seed = 5;
    let vocab: Vec<String> = (0..60).map(|i| format!("wordy{i}")).collect();
    for (i, w) in vocab.iter().enumerate() {
        f.senses.insert(w.clone(), mixed("talkative", w, 0.1 + 0.05 * i as f64));
    }
    f.senses.insert(word.into(), vec![Sense::concept("talkative")]);
    let gens: Vec<String> = (0..80)
        .map(|i| if i % 4 == 0 { format!("wordy{}", i / 4) } else { format!("chatty{i}") })
        .collect();
    let sentences: Vec<String> = (0..100)
        .map(|n| format!("The verbose speaker talked for hour {n}."))
        .collect();
    for (n, s) in sentences.iter().enumerate() {
        let list = (0..20)
            .map(|r| (gens[(n * 7 + r * r) % gens.len()].clone(), -0.1 * (r + 1) as f64))
            .collect();
        f.fills.insert(masked(s, word, &f.mask_token), list);
    }
    f.vocab.extend(vocab.iter().cloned());
    f.vocab.extend(gens.iter().cloned());
    let mut corpus = sentences;
    for w in &vocab {
        corpus.extend(vocab_sentences(w, 2));
    }
    let freq = vocab
        .iter()
        .chain(&gens)
        .enumerate()
        .map(|(i, w)| (w.clone(), 6.0 - 0.03 * i as f64))
        .collect();
    World {
        name: "pool".into(),
        fixture: f,
        corpus,
        vocabulary: vocab.clone(),
        targets: vec![word.into()],
        freq,
        gold: vec![GoldRow {
            sentence: "Her verbose letter ran to ten pages.".into(),
            target: word.into(),
            gold: ["wordy0", "chatty1"].map(String::from).to_vec(),
        }],
        profile: Profile {
            vocab_size: vocab.len(),
            ..Profile::stub()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_world_builds_and_round_trips() {
        for name in names() {
            let w = by_name(&name).unwrap();
            let json = w.fixture.to_json().unwrap();
            assert_eq!(StubFixture::from_json(&json).unwrap(), w.fixture, "{name}");
            assert!(!w.gold.is_empty());
        }
        assert!(by_name("polysemy-10").is_none());
    }

    #[test]
    fn counted_fills_reproduce_counts() {
        let mut f = StubFixture::new("t");
        let s: Vec<String> = (0..3).map(|i| format!("the cat {i}")).collect();
        counted_fills(&mut f, &s, "cat", &[("a", 3), ("b", 1)]);
        assert_eq!(f.fills["the [MASK] 0"].len(), 2);
        assert_eq!(f.fills["the [MASK] 2"].len(), 1);
    }
}
