use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use lexsimp::augment::{ablation_mode, score_augmented, AblationMode, ClusterGenerationTable, ClusterWeights};
use lexsimp::backend::ContextualEmbedding;
use lexsimp::eval::ensemble::{combine, ensemble, MissingRank};
use lexsimp::eval::{evaluate, potential_at_k, ExternalRanking, GoldInstance, GoldSet, MetricConfig, Predictions};
use lexsimp::kmeans::{kmeans, objective, KMeansConfig};
use lexsimp::rerank::{fuse, merge_and_filter, Signal, SignalRanking};
use lexsimp::text::{edit_similarity, levenshtein};
use lexsimp::{DecontextEntry, ScoredCandidate, Source, TargetInstance};

/// Plain recursive edit distance.
fn lev_oracle(a: &[char], b: &[char]) -> usize {
    match (a, b) {
        ([], _) => b.len(),
        (_, []) => a.len(),
        ([x, ra @ ..], [y, rb @ ..]) => {
            let sub = lev_oracle(ra, rb) + usize::from(x != y);
            sub.min(lev_oracle(ra, b) + 1).min(lev_oracle(a, rb) + 1)
        }
    }
}

fn word() -> impl Strategy<Value = String> {
    "[a-e]{1,6}"
}

fn candidates(source: Source) -> impl Strategy<Value = Vec<ScoredCandidate>> {
    prop::collection::vec((word(), -5.0..5.0f64), 0..8).prop_map(move |v| {
        v.into_iter()
            .map(|(word, score)| ScoredCandidate {
                word,
                score,
                source,
                signal_scores: BTreeMap::new(),
            })
            .collect()
    })
}

fn table() -> impl Strategy<Value = ClusterGenerationTable> {
    (1usize..5, 1usize..12).prop_flat_map(|(k, m2)| {
        prop::collection::vec(prop::collection::btree_map(word(), 1u64..50, 0..8), k).prop_map(move |counts| {
            ClusterGenerationTable {
                word: "x".into(),
                sentences: vec![1; counts.len()],
                counts,
                m2,
                empty: false,
            }
        })
    })
}

fn gold_and_pred() -> impl Strategy<Value = (Vec<String>, Vec<String>)> {
    (prop::collection::vec(word(), 1..6), prop::collection::vec(word(), 0..12))
}

proptest! {
    #[test]
    fn levenshtein_matches_recursion(a in "[a-c]{0,6}", b in "[a-c]{0,6}") {
        let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        prop_assert_eq!(levenshtein(&a, &b), lev_oracle(&ca, &cb));
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        let s = edit_similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn merge_keeps_union_minus_near_copies(
        m1 in candidates(Source::TargetContext),
        m2 in candidates(Source::Augmented),
        threshold in 0.05..=1.0f64,
    ) {
        prop_assume!(!m1.is_empty() || !m2.is_empty());
        let target = TargetInstance::locate("the abc sat", "abc").unwrap();
        let out = merge_and_filter(&m1, &m2, &target, threshold).unwrap();
        let words: Vec<&str> = out.iter().map(|c| c.word.as_str()).collect();
        let unique: BTreeSet<&str> = words.iter().copied().collect();
        prop_assert_eq!(unique.len(), words.len());
        let expected: BTreeSet<String> = m1
            .iter()
            .chain(&m2)
            .map(|c| c.word.clone())
            .filter(|w| edit_similarity(w, "abc") < threshold)
            .collect();
        prop_assert_eq!(unique, expected.iter().map(String::as_str).collect());
        for c in &out {
            let in1 = m1.iter().any(|x| x.word == c.word);
            let in2 = m2.iter().any(|x| x.word == c.word);
            let want = match (in1, in2) {
                (true, true) => Source::Both,
                (true, false) => Source::TargetContext,
                _ => Source::Augmented,
            };
            prop_assert_eq!(c.source, want);
        }
    }

    #[test]
    fn fusion_ignores_input_order_and_integer_scaling(
        scores in prop::collection::vec(prop::collection::vec(-10i32..10, 4), 1..10),
        weights in prop::array::uniform4(0u8..6),
        scale in 1u8..9,
    ) {
        let words: Vec<String> = (0..scores.len()).map(|i| format!("w{i}")).collect();
        let rankings = |order: &[String]| -> [SignalRanking; 4] {
            Signal::ALL.map(|sig| {
                let i = Signal::ALL.iter().position(|s| *s == sig).unwrap();
                let s = words.iter().zip(&scores).map(|(w, v)| (w.clone(), f64::from(v[i]))).collect();
                SignalRanking::from_scores(sig, order, &s, None)
            })
        };
        let mut reversed = words.clone();
        reversed.reverse();
        let w = weights.map(f64::from);
        let a = fuse(&rankings(&words), w).unwrap();
        let b = fuse(&rankings(&reversed), w).unwrap();
        prop_assert_eq!(a.words(), b.words());
        let c = fuse(&rankings(&words), w.map(|x| x * f64::from(scale))).unwrap();
        prop_assert_eq!(a.words(), c.words());
        for pair in a.candidates.windows(2) {
            prop_assert!(pair[0].combined <= pair[1].combined);
        }
    }

    #[test]
    fn ablation_modes(raw in prop::collection::vec(0u64..6, 1..6)) {
        let w = ClusterWeights::new(raw.clone());
        prop_assert_eq!(&ablation_mode(&w, AblationMode::Soft), &w);
        prop_assert!(ablation_mode(&w, AblationMode::None).w.iter().all(|&x| x == 1));
        let hard = ablation_mode(&w, AblationMode::Hard).w;
        prop_assert_eq!(hard.iter().sum::<u64>(), 1);
        let best = hard.iter().position(|&x| x == 1).unwrap();
        let max = *w.w.iter().max().unwrap();
        prop_assert_eq!(best, w.w.iter().position(|&x| x == max).unwrap());
        prop_assert_eq!(w.fallback_applied, raw.iter().all(|&x| x == 0));
    }

    #[test]
    fn augmented_ranking_is_sorted_and_positive(t in table(), raw in prop::collection::vec(0u64..6, 5)) {
        prop_assume!(t.counts.iter().any(|c| !c.is_empty()));
        let w = ClusterWeights::new(raw[..t.k()].to_vec());
        let ranked = score_augmented(&t, &w).unwrap();
        for c in &ranked {
            prop_assert!(c.score > 0.0);
        }
        for pair in ranked.windows(2) {
            let key = |c: &ScoredCandidate| (c.score, t.total_count(&c.word));
            let (a, b) = (key(&pair[0]), key(&pair[1]));
            prop_assert!(a.0 > b.0 || (a.0 == b.0 && (a.1 > b.1 || (a.1 == b.1 && pair[0].word < pair[1].word))));
        }
    }

    #[test]
    fn metrics_are_monotone_in_k((gold, pred) in gold_and_pred()) {
        let g = GoldInstance::new("s", "t", &gold).unwrap();
        let pred = lexsimp::eval::normalize_prediction(&pred);
        let mut last = 0.0;
        for k in 1..=12 {
            let p = potential_at_k(&pred, &g, k);
            prop_assert!(p >= last);
            last = p;
            let ap = lexsimp::eval::average_precision_at_k(&pred, &g, k);
            prop_assert!((0.0..=1.0).contains(&ap));
            prop_assert!(ap <= p);
        }
    }

    #[test]
    fn evaluation_ignores_instance_order(items in prop::collection::vec(gold_and_pred(), 1..20)) {
        let build = |rev: bool| {
            let mut list: Vec<(String, GoldInstance)> = items
                .iter()
                .enumerate()
                .map(|(i, (g, _))| (i.to_string(), GoldInstance::new("s", "t", g).unwrap()))
                .collect();
            if rev {
                list.reverse();
            }
            GoldSet::from_instances(list)
        };
        let preds: Predictions = items.iter().enumerate().map(|(i, (_, p))| (i.to_string(), p.clone())).collect();
        let cfg = MetricConfig::default();
        prop_assert_eq!(evaluate(&preds, &build(false), &cfg).unwrap(), evaluate(&preds, &build(true), &cfg).unwrap());
    }

    #[test]
    fn ensemble_ignores_system_order(
        lists in prop::collection::vec(prop::collection::vec(word(), 0..6), 1..5),
        after_pool in any::<bool>(),
    ) {
        let missing = if after_pool { MissingRank::AfterPool } else { MissingRank::AfterRanking };
        let dedup: Vec<Vec<String>> = lists
            .iter()
            .map(|l| {
                let mut seen = BTreeSet::new();
                l.iter().filter(|w| seen.insert((*w).clone())).cloned().collect()
            })
            .collect();
        let mut rev = dedup.clone();
        rev.reverse();
        prop_assert_eq!(combine(&dedup, missing), combine(&rev, missing));
        let systems: Vec<ExternalRanking> = dedup
            .iter()
            .enumerate()
            .map(|(i, l)| ExternalRanking {
                system_id: format!("s{i}"),
                rankings: Predictions::from([("1".to_string(), l.clone())]),
            })
            .collect();
        let mut swapped = systems.clone();
        swapped.reverse();
        prop_assert_eq!(ensemble(&systems, missing).unwrap(), ensemble(&swapped, missing).unwrap());
    }

    #[test]
    fn aptness_terms_ignore_positive_scaling(
        centroids in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 1..4),
        query in prop::collection::vec(-1.0..1.0f64, 4),
        scale in 0.5..4.0f64,
    ) {
        let entry = |s: f64| DecontextEntry {
            word: "y".into(),
            cluster_sizes: vec![2; centroids.len()],
            centroids: centroids.iter().map(|c| c.iter().map(|x| x * s).collect()).collect(),
            sentence_assignments: BTreeMap::new(),
        };
        let q = ContextualEmbedding(query.clone());
        let (a, b) = (entry(1.0), entry(scale));
        let (sa, sb) = (a.centroid_similarities(&q).unwrap(), b.centroid_similarities(&q).unwrap());
        for ((_, x), (_, y)) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert!((a.global_similarity(&q).unwrap() - b.global_similarity(&q).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn kmeans_objective_never_increases(
        points in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 2), 1..30),
        k in 1usize..5,
        seed in any::<u64>(),
    ) {
        let c = kmeans(&points, &KMeansConfig::new(k, seed)).unwrap();
        for pair in c.history.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-9);
        }
        prop_assert!((c.objective - objective(&points, &c.centroids, &c.assignments)).abs() < 1e-9);
        prop_assert_eq!(c.sizes.iter().sum::<usize>(), points.len());
        prop_assert_eq!(&c, &kmeans(&points, &KMeansConfig::new(k, seed)).unwrap());
    }
}
