#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use lexsimp::index::{ClusterConfig, DecontextIndex, Vocabulary};
use lexsimp::stub::{Sense, StubBackend, StubFixture};
use lexsimp::{CorpusStore, TargetInstance};

const CUES: [&str; 6] = ["north", "south", "river", "market", "winter", "music"];

/// A small random stub world with its index and some target occurrences.
pub struct RandomWorld {
    pub backend: StubBackend,
    pub store: CorpusStore,
    pub index: DecontextIndex,
    pub targets: Vec<TargetInstance>,
}

/// Vocabulary words `w0..`, a few of them without corpus sentences, and
/// targets `t0..t2`. Multi-token targets are segmented as `t ##N`.
pub fn random_world(rng: &mut ChaCha8Rng, n_vocab: usize, multi_token: bool, seed: u64) -> RandomWorld {
    let mut f = StubFixture::new(&format!("random-{seed}"));
    f.dim = 32;
    f.static_dim = 8;
    f.seed = seed;
    let concepts = ["c0", "c1", "c2", "c3", "c4"];
    let mut corpus = Vec::new();
    let vocab: Vec<String> = (0..n_vocab).map(|i| format!("w{i}")).collect();
    for w in &vocab {
        let n_senses = rng.random_range(1..=2);
        let senses: Vec<Sense> = (0..n_senses)
            .map(|s| {
                let c = concepts[rng.random_range(0..concepts.len())];
                let sense = Sense::concept(c).with_mix(w, rng.random_range(0.1..2.0));
                if s > 0 {
                    sense.with_cues([CUES[rng.random_range(0..CUES.len())]])
                } else {
                    sense
                }
            })
            .collect();
        f.senses.insert(w.clone(), senses);
        if rng.random_bool(0.8) {
            f.static_vectors
                .insert(w.clone(), (0..8).map(|_| rng.random_range(-1.0..1.0)).collect());
        }
        for n in 0..rng.random_range(0..=5) {
            let cue = CUES[rng.random_range(0..CUES.len())];
            corpus.push(format!("the {w} met the {cue} crowd {n}"));
        }
    }
    let mut targets = Vec::new();
    for t in 0..3 {
        let word = format!("t{t}");
        f.senses.insert(
            word.clone(),
            CUES.iter()
                .take(3)
                .map(|cue| Sense::concept(concepts[rng.random_range(0..concepts.len())]).with_cues([*cue]))
                .collect(),
        );
        if multi_token {
            f.segmentations.insert(word.clone(), vec!["t".into(), format!("##{t}")]);
        }
        f.static_vectors
            .insert(word.clone(), (0..8).map(|_| rng.random_range(-1.0..1.0)).collect());
        let cue = CUES[rng.random_range(0..CUES.len())];
        let sentence = format!("we saw the {word} near the {cue} today");
        targets.push(TargetInstance::locate(&sentence, &word).unwrap());
    }
    corpus.shuffle(rng);
    let store = CorpusStore::from_lines(&corpus, 64);
    let backend = StubBackend::new(f).unwrap();
    let index = DecontextIndex::build(
        Vocabulary::from_words(&vocab, Some(&store)),
        &[],
        &store,
        &backend,
        &ClusterConfig::new(3, 8, seed),
    )
    .unwrap();
    RandomWorld {
        backend,
        store,
        index,
        targets,
    }
}

pub fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}
