//! Python bindings: stub worlds, index building, simplification, metrics and
//! ensembling.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use lexsimp::augment::AblationMode;
use lexsimp::eval::data::{ExternalRanking, Predictions};
use lexsimp::eval::ensemble::{ensemble as rank_sum, MissingRank};
use lexsimp::eval::{evaluate as score, GoldInstance, GoldSet, MetricConfig, MetricReport};
use lexsimp::freq::FrequencyTable;
use lexsimp::pipeline::{records_to_jsonl, InstanceInput, Simplifier};
use lexsimp::stub::worlds;
use lexsimp::{ClusterConfig, CorpusStore, DecontextIndex, Error, Profile, ProfileSet, StubBackend, Vocabulary};

fn py_err(e: Error) -> PyErr {
    if e.is_backend() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn profile(name: &str, config: Option<PathBuf>) -> PyResult<Profile> {
    let mut set = ProfileSet::builtin();
    if let Some(c) = config {
        set.profiles.extend(ProfileSet::load(c).map_err(py_err)?.profiles);
    }
    set.get(name).map_err(py_err)
}

fn report_dict(r: &MetricReport) -> BTreeMap<String, f64> {
    r.columns().into_iter().collect()
}

/// Names of the bundled stub worlds.
#[pyfunction]
fn world_names() -> Vec<String> {
    worlds::names()
}

/// Write a stub world's fixture, corpus, vocabulary, frequency table, gold
/// file and profile into `out_dir`.
#[pyfunction]
fn write_world(name: &str, out_dir: PathBuf) -> PyResult<()> {
    let w = worlds::by_name(name).ok_or_else(|| PyValueError::new_err(format!("unknown world {name:?}")))?;
    w.write_to(out_dir).map_err(py_err)
}

/// Build and save a decontextualised index; returns the number of entries.
#[pyfunction]
#[pyo3(signature = (fixture, corpus, out, profile_name = "stub", config = None, vocab = None, targets = Vec::new()))]
fn build_index(
    fixture: PathBuf,
    corpus: PathBuf,
    out: PathBuf,
    profile_name: &str,
    config: Option<PathBuf>,
    vocab: Option<Vec<String>>,
    targets: Vec<String>,
) -> PyResult<usize> {
    let p = profile(profile_name, config)?;
    let backend = StubBackend::load(fixture).map_err(py_err)?;
    let store = CorpusStore::open(corpus, p.max_sentence_tokens).map_err(py_err)?;
    let vocab = match vocab {
        Some(v) => Vocabulary::from_words(v, Some(&store)),
        None => Vocabulary::from_corpus(&store, p.vocab_size),
    };
    let index = DecontextIndex::build(vocab, &targets, &store, &backend, &ClusterConfig::new(p.k, p.sample_n, p.seed))
        .map_err(py_err)?;
    index.save(out).map_err(py_err)?;
    Ok(index.entries.len())
}

/// A loaded stub backend, corpus, index and frequency table.
#[pyclass]
struct Pipeline {
    backend: StubBackend,
    store: CorpusStore,
    index: DecontextIndex,
    freq: FrequencyTable,
    profile: Profile,
}

impl Pipeline {
    fn simplifier(&self, mode: &str) -> PyResult<Simplifier<'_>> {
        let mode: AblationMode = mode.parse().map_err(py_err)?;
        Ok(Simplifier::new(&self.backend, &self.store, &self.index, &self.freq, self.profile.clone())
            .map_err(py_err)?
            .with_mode(mode))
    }
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (fixture, corpus, index, profile_name = "stub", config = None, freq_table = None))]
    fn new(
        fixture: PathBuf,
        corpus: PathBuf,
        index: PathBuf,
        profile_name: &str,
        config: Option<PathBuf>,
        freq_table: Option<PathBuf>,
    ) -> PyResult<Self> {
        let profile = profile(profile_name, config)?;
        let backend = StubBackend::load(fixture).map_err(py_err)?;
        let store = CorpusStore::open(corpus, profile.max_sentence_tokens).map_err(py_err)?;
        let index = DecontextIndex::load(index, Some(lexsimp::ModelBackend::id(&backend))).map_err(py_err)?;
        let freq = match freq_table {
            Some(p) => FrequencyTable::load(p).map_err(py_err)?,
            None => FrequencyTable::from_corpus(&store),
        };
        Ok(Pipeline {
            backend,
            store,
            index,
            freq,
            profile,
        })
    }

    /// Ranked substitutes for `target` in `sentence`.
    #[pyo3(signature = (sentence, target, mode = "soft"))]
    fn simplify(&self, sentence: &str, target: &str, mode: &str) -> PyResult<Vec<String>> {
        let r = self
            .simplifier(mode)?
            .simplify(&InstanceInput::new("1", sentence, target))
            .map_err(py_err)?;
        Ok(r.candidates.into_iter().map(|c| c.word).collect())
    }

    /// The full output record as a JSON string.
    #[pyo3(signature = (sentence, target, mode = "soft"))]
    fn simplify_json(&self, sentence: &str, target: &str, mode: &str) -> PyResult<String> {
        let r = self
            .simplifier(mode)?
            .simplify(&InstanceInput::new("1", sentence, target))
            .map_err(py_err)?;
        Ok(records_to_jsonl(&[r]).map_err(py_err)?.trim_end().to_string())
    }
}

/// Metrics for `predictions` (id -> ranked list) against gold instances
/// given as `(sentence, target, substitutes)` with ids `"1"`, `"2"`, ...
#[pyfunction]
fn evaluate(
    predictions: BTreeMap<String, Vec<String>>,
    gold: Vec<(String, String, Vec<String>)>,
) -> PyResult<BTreeMap<String, f64>> {
    let instances = gold
        .iter()
        .enumerate()
        .map(|(i, (s, t, g))| Ok(((i + 1).to_string(), GoldInstance::new(s, t, g)?)))
        .collect::<lexsimp::Result<Vec<_>>>()
        .map_err(py_err)?;
    let r = score(&predictions, &GoldSet::from_instances(instances), &MetricConfig::default()).map_err(py_err)?;
    Ok(report_dict(&r))
}

/// Metrics for a predictions file against a TSAR-format gold file.
#[pyfunction]
fn evaluate_files(pred: PathBuf, gold: PathBuf) -> PyResult<BTreeMap<String, f64>> {
    let preds = lexsimp::eval::data::load_predictions(pred).map_err(py_err)?;
    let gold = GoldSet::load(gold).map_err(py_err)?;
    let r = score(&preds, &gold, &MetricConfig::default()).map_err(py_err)?;
    Ok(report_dict(&r))
}

/// Rank-sum ensemble of several systems' predictions.
#[pyfunction]
#[pyo3(signature = (systems, missing = "after_ranking"))]
fn ensemble(systems: Vec<BTreeMap<String, Vec<String>>>, missing: &str) -> PyResult<Predictions> {
    let missing: MissingRank = missing.parse().map_err(py_err)?;
    let systems: Vec<ExternalRanking> = systems
        .into_iter()
        .enumerate()
        .map(|(i, rankings)| ExternalRanking {
            system_id: i.to_string(),
            rankings,
        })
        .collect();
    rank_sum(&systems, missing).map_err(py_err)
}

#[pyfunction]
fn edit_similarity(a: &str, b: &str) -> f64 {
    lexsimp::text::edit_similarity(a, b)
}

/// Built-in profiles as TOML.
#[pyfunction]
fn profiles_toml() -> PyResult<String> {
    ProfileSet::builtin().to_toml().map_err(py_err)
}

#[pymodule]
fn lexsimp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(world_names, m)?)?;
    m.add_function(wrap_pyfunction!(write_world, m)?)?;
    m.add_function(wrap_pyfunction!(build_index, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_files, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(edit_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(profiles_toml, m)?)?;
    Ok(())
}
