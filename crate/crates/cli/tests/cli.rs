use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lexsimp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexsimp"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lexsimp(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    lexsimp(dir, args).status.code().unwrap()
}

const MODEL: [&str; 6] = ["--config", "profiles.toml", "--profile", "elite", "--stub-fixture", "fixture.json"];

fn with_model<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend(MODEL);
    v
}

fn elite_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["world", "elite", "--out", "."]);
    ok(
        dir.path(),
        &with_model(&["build-index", "--corpus", "corpus.txt", "--vocab-file", "vocab.txt", "--targets", "gold.tsv", "--out", "index.json"]),
    );
    dir
}

const SIMPLIFY: [&str; 9] = [
    "simplify", "--corpus", "corpus.txt", "--index", "index.json", "--freq-table", "freq.tsv", "--input", "gold.tsv",
];

#[test]
fn index_rebuild_is_byte_identical() {
    let dir = elite_dir();
    let first = std::fs::read(dir.path().join("index.json")).unwrap();
    ok(
        dir.path(),
        &with_model(&["build-index", "--corpus", "corpus.txt", "--vocab-file", "vocab.txt", "--targets", "gold.tsv", "--out", "again.json"]),
    );
    assert_eq!(first, std::fs::read(dir.path().join("again.json")).unwrap());
}

#[test]
fn elite_end_to_end() {
    let dir = elite_dir();
    let a = ok(dir.path(), &with_model(&SIMPLIFY));
    let b = ok(dir.path(), &with_model(&SIMPLIFY));
    assert_eq!(a, b);
    let record: Value = serde_json::from_str(a.lines().next().unwrap()).unwrap();
    let top: Vec<&str> = record["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .take(3)
        .map(|c| c["word"].as_str().unwrap())
        .collect();
    assert!(top.contains(&"class") && top.contains(&"establishment"), "{top:?}");
    assert_eq!(record["mode"], "soft");
    assert_eq!(record["clusters"]["raw"], serde_json::json!([0, 5, 1, 0]));
    assert!(record["candidates"][0]["ranks"]["embedding_similarity"].is_u64());

    let mut args = with_model(&SIMPLIFY);
    args.extend(["--task", "substitution"]);
    let sub: Value = serde_json::from_str(ok(dir.path(), &args).lines().next().unwrap()).unwrap();
    assert_eq!(sub["weights"][2], 0.0);
    assert!(sub["candidates"][0]["ranks"].get("word_frequency").is_none());
}

#[test]
fn precomputed_cache_gives_identical_output() {
    let dir = elite_dir();
    let plain = ok(dir.path(), &with_model(&SIMPLIFY));
    ok(
        dir.path(),
        &with_model(&["precompute", "--corpus", "corpus.txt", "--index", "index.json", "--input", "gold.tsv", "--out", "cache.json"]),
    );
    let mut args = with_model(&SIMPLIFY);
    args.extend(["--cache", "cache.json"]);
    assert_eq!(ok(dir.path(), &args), plain);
}

#[test]
fn empty_pool_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("fixture.json"), r#"{"name": "tiny"}"#).unwrap();
    std::fs::write(p.join("corpus.txt"), "the cats sat\nthe catt ran\nthe cat slept\n").unwrap();
    std::fs::write(p.join("vocab.txt"), "cats\ncatt\n").unwrap();
    let profiles = ok(p, &["profiles"]).replace("[profiles.stub]", "[profiles.tiny]").replace("edit_threshold = 0.8", "edit_threshold = 0.5");
    std::fs::write(p.join("profiles.toml"), profiles).unwrap();
    let model = ["--config", "profiles.toml", "--profile", "tiny", "--stub-fixture", "fixture.json"];
    let mut args = vec!["build-index", "--corpus", "corpus.txt", "--vocab-file", "vocab.txt", "--out", "index.json"];
    args.extend(model);
    ok(p, &args);
    let mut args = vec!["simplify", "--corpus", "corpus.txt", "--index", "index.json", "--sentence", "a cat ran", "--target", "cat"];
    args.extend(model);
    let record: Value = serde_json::from_str(ok(p, &args).trim()).unwrap();
    assert_eq!(record["candidates"], serde_json::json!([]));
    assert!(record["reason"].as_str().unwrap().contains("edit-distance"));
}

#[test]
fn evaluate_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // 1: gold {a:2, b:1}, pred b x a -> ACC@1 1, top1 a at rank 3, AP@3 = (1/1 + 2/3)/3 = 5/9
    // 2: gold {c:1},      pred x c   -> ACC@1 0, top1 c at rank 2, AP@3 = (1/2)/3 = 1/6
    // means: ACC@1 1/2, ACC@1@Top1 0, ACC@2@Top1 1/2, ACC@3@Top1 1, MAP@3 13/36, Potential@3 1
    std::fs::write(p.join("gold.tsv"), "s one\tt\ta\ta\tb\ns two\tt\tc\n").unwrap();
    std::fs::write(p.join("pred.tsv"), "1\tb\tx\ta\n2\tx\tc\n").unwrap();
    let json: Value = serde_json::from_str(&ok(p, &["evaluate", "--pred", "pred.tsv", "--gold", "gold.tsv", "--ks", "3", "--format", "json"])).unwrap();
    assert_eq!(json["acc_at_1"], 0.5);
    assert_eq!(json["acc_at_k_top1"], serde_json::json!([[1, 0.0], [2, 0.5], [3, 1.0]]));
    assert_eq!(json["map_at_k"][0][1].as_f64().unwrap(), 13.0 / 36.0);
    assert_eq!(json["potential_at_k"][0][1], 1.0);

    // shuffled file order, same report
    std::fs::write(p.join("pred2.tsv"), "2\tx\tc\n1\tb\tx\ta\n").unwrap();
    let again = ok(p, &["evaluate", "--pred", "pred2.tsv", "--gold", "gold.tsv", "--ks", "3", "--format", "json"]);
    assert_eq!(serde_json::from_str::<Value>(&again).unwrap(), json);

    std::fs::write(p.join("perfect.tsv"), "1\ta\tb\n2\tc\n").unwrap();
    let perfect: Value = serde_json::from_str(&ok(p, &["evaluate", "--pred", "perfect.tsv", "--gold", "gold.tsv", "--ks", "1", "--top1-ks", "1", "--format", "json"])).unwrap();
    assert_eq!(perfect["acc_at_1"], 1.0);
    assert_eq!(perfect["map_at_k"][0][1], 1.0);
    assert_eq!(perfect["potential_at_k"][0][1], 1.0);
}

#[test]
fn grid_ablate_ensemble_and_export() {
    let dir = elite_dir();
    let p = dir.path();
    let grid = ok(
        p,
        &with_model(&["grid", "--corpus", "corpus.txt", "--index", "index.json", "--gold", "gold.tsv", "--grid", "5,1,1,1;3,1,0,3"]),
    );
    assert_eq!(grid.lines().count(), 3);
    let table = ok(p, &with_model(&["ablate", "--corpus", "corpus.txt", "--index", "index.json", "--gold", "gold.tsv"]));
    assert!(table.contains("Soft Retrieval") && table.contains("No Clustering"));
    assert_eq!(
        code(p, &with_model(&["ablate", "--corpus", "corpus.txt", "--index", "index.json", "--gold", "gold.tsv", "--modes", "soft,sideways"])),
        2
    );

    let mut args = with_model(&SIMPLIFY);
    args.extend(["--tsv", "--out", "pred.tsv"]);
    ok(p, &args);
    let single = ok(p, &["ensemble", "--system", "pred.tsv"]);
    assert_eq!(single, std::fs::read_to_string(p.join("pred.tsv")).unwrap());
    let with_freq = ok(p, &["ensemble", "--system", "pred.tsv", "--frequency", "--freq-table", "freq.tsv"]);
    assert!(with_freq.starts_with("1\t"));

    ok(p, &["export-swords", "--pred", "pred.tsv", "--out", "swords.json"]);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(p.join("swords.json")).unwrap()).unwrap();
    assert_eq!(s["substitutes_lemmatized"], false);
    assert_eq!(s["substitutes"]["1"][0][1], -1.0);
}

#[test]
fn exit_codes() {
    let dir = elite_dir();
    let p = dir.path();
    let mut args = with_model(&SIMPLIFY);
    args.extend(["--backend", "some-real-model"]);
    assert_eq!(code(p, &args), 4);
    let missing = with_model(&["simplify", "--corpus", "missing.txt", "--index", "index.json", "--input", "gold.tsv"]);
    assert_eq!(code(p, &missing), 2);
    assert_eq!(code(p, &["simplify", "--no-such-flag"]), 2);
    let mut args = with_model(&SIMPLIFY);
    args.extend(["--weights", "1,2,3"]);
    assert_eq!(code(p, &args), 2);
    std::fs::write(p.join("bad.tsv"), "only one column\n").unwrap();
    assert_eq!(code(p, &["evaluate", "--pred", "gold.tsv", "--gold", "bad.tsv"]), 3);
    assert_eq!(code(p, &["world", "atlantis", "--out", "x"]), 2);
}

#[test]
fn profiles_round_trip_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let text = ok(p, &["profiles"]);
    std::fs::write(p.join("p.toml"), &text).unwrap();
    assert_eq!(ok(p, &["profiles", "--config", "p.toml"]), text);
    assert!(ok(p, &["world", "--list"]).lines().any(|l| l == "polysemy-9"));
}
