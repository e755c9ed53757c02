//! `lexsimp` command-line tool.
//!
//! Exit codes: 0 success, 2 usage, 3 data error, 4 backend error.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lexsimp::augment::{AblationMode, GenerationCache};
use lexsimp::eval::ablation::{ablation_table, run_ablation};
use lexsimp::eval::data::{load_predictions, predictions_to_tsv, ExternalRanking};
use lexsimp::eval::ensemble::{ensemble, frequency_ranking, MissingRank};
use lexsimp::eval::swords::export_swords;
use lexsimp::eval::{evaluate, GoldSet, MetricConfig};
use lexsimp::freq::FrequencyTable;
use lexsimp::pipeline::{load_instances, records_to_jsonl, records_to_predictions, InstanceInput, Simplifier};
use lexsimp::stub::worlds;
use lexsimp::{CorpusStore, DecontextIndex, Error, ModelBackend, Profile, ProfileSet, StubBackend, Task, Vocabulary};

#[derive(Parser)]
#[command(name = "lexsimp", version, about = "Unsupervised lexical simplification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster sampled occurrences of every vocabulary word and save the index.
    BuildIndex {
        #[command(flatten)]
        model: ModelOpts,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// One word per line; defaults to the corpus's most frequent words.
        #[arg(long)]
        vocab_file: Option<PathBuf>,
        /// Instances whose target words should also be clustered.
        #[arg(long)]
        targets: Option<PathBuf>,
    },
    /// Generate and rank substitutes; writes one JSON object per instance.
    Simplify {
        #[command(flatten)]
        model: ModelOpts,
        #[command(flatten)]
        data: DataOpts,
        /// Instances as JSON lines or TSV (sentence, target, ...).
        #[arg(long, conflicts_with_all = ["sentence", "target"])]
        input: Option<PathBuf>,
        #[arg(long, requires = "target")]
        sentence: Option<String>,
        #[arg(long, requires = "sentence")]
        target: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Soft)]
        ablation: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write `id<TAB>candidates...` instead of JSON lines.
        #[arg(long)]
        tsv: bool,
    },
    /// Run mask filling over the clustered sentences of each target once and
    /// store the counts.
    Precompute {
        #[command(flatten)]
        model: ModelOpts,
        #[command(flatten)]
        data: DataOpts,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against a gold file.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[command(flatten)]
        metrics: MetricOpts,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
        #[arg(long, default_value = "system")]
        system: String,
    },
    /// Compare soft, hard and no-clustering retrieval on a gold set.
    Ablate {
        #[command(flatten)]
        model: ModelOpts,
        #[command(flatten)]
        data: DataOpts,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_delimiter = ',', default_values = ["soft", "hard", "none"])]
        modes: Vec<String>,
        #[command(flatten)]
        metrics: MetricOpts,
    },
    /// Evaluate each fusion weight vector in a grid.
    Grid {
        #[command(flatten)]
        model: ModelOpts,
        #[command(flatten)]
        data: DataOpts,
        #[arg(long)]
        gold: PathBuf,
        /// Weight vectors separated by ';', e.g. "5,1,1,1;3,1,0,3".
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        metrics: MetricOpts,
    },
    /// Rank-sum ensemble of several systems' predictions.
    Ensemble {
        #[arg(long = "system", required = true)]
        systems: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = MissingArg::AfterRanking)]
        missing: MissingArg,
        /// Add a frequency-ordered ranking of the pooled candidates.
        #[arg(long, requires = "freq_table")]
        frequency: bool,
        #[arg(long)]
        freq_table: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write predictions in the SWORDS JSON format.
    ExportSwords {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive a Zipf frequency table from a corpus.
    FreqTable {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the built-in profiles (plus any from --config) as TOML.
    Profiles {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write a ready-made stub world (fixture, corpus, vocabulary, gold).
    World {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        #[arg(long, required_unless_present = "list")]
        out: Option<PathBuf>,
        #[arg(long)]
        list: bool,
    },
}

#[derive(Args, Clone)]
struct ModelOpts {
    #[arg(long, default_value = "en")]
    profile: String,
    /// TOML file of extra or overriding profiles.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    sample_n: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    /// r1,r2,r3,r4
    #[arg(long, value_parser = parse_weights)]
    weights: Option<[f64; 4]>,
    #[arg(long, default_value = "stub")]
    backend: String,
    #[arg(long)]
    stub_fixture: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct DataOpts {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// Defaults to frequencies derived from the corpus.
    #[arg(long)]
    freq_table: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct MetricOpts {
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 5, 10])]
    ks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
    top1_ks: Vec<usize>,
}

impl MetricOpts {
    fn config(&self) -> MetricConfig {
        MetricConfig {
            top1_ks: self.top1_ks.clone(),
            ks: self.ks.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Simplification,
    Substitution,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Soft,
    Hard,
    None,
}

impl From<ModeArg> for AblationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Soft => AblationMode::Soft,
            ModeArg::Hard => AblationMode::Hard,
            ModeArg::None => AblationMode::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MissingArg {
    AfterRanking,
    AfterPool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Tsv,
    Json,
}

fn parse_weights(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad weight {x:?}")))
        .collect::<Result<_, _>>()?;
    let w: [f64; 4] = v
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 weights, got {}", v.len()))?;
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err("weights must be non-negative".into());
    }
    Ok(w)
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Stream(e))
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn existing(path: &Path, what: &str) -> Outcome<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{what} {} does not exist", path.display())))
    }
}

fn resolve_profile(o: &ModelOpts) -> Outcome<Profile> {
    let mut set = ProfileSet::builtin();
    if let Some(cfg) = &o.config {
        existing(cfg, "config file")?;
        set.profiles.extend(ProfileSet::load(cfg)?.profiles);
    }
    let mut p = set.get(&o.profile).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(t) = o.task {
        p = p.with_task(match t {
            TaskArg::Simplification => Task::Simplification,
            TaskArg::Substitution => Task::Substitution,
        });
    }
    p.seed = o.seed.unwrap_or(p.seed);
    p.k = o.k.unwrap_or(p.k);
    p.m1 = o.m1.unwrap_or(p.m1);
    p.m2 = o.m2.unwrap_or(p.m2);
    p.alpha = o.alpha.unwrap_or(p.alpha);
    p.beam = o.beam.unwrap_or(p.beam);
    p.sample_n = o.sample_n.unwrap_or(p.sample_n);
    p.vocab_size = o.vocab_size.unwrap_or(p.vocab_size);
    p.weights = o.weights.unwrap_or(p.weights);
    p.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(p)
}

fn load_backend(o: &ModelOpts) -> Outcome<Box<dyn ModelBackend>> {
    match o.backend.as_str() {
        "stub" => {
            let path = o
                .stub_fixture
                .as_ref()
                .ok_or_else(|| Failure::Usage("--backend stub needs --stub-fixture".into()))?;
            existing(path, "stub fixture")?;
            Ok(Box::new(StubBackend::load(path)?))
        }
        other => Err(Failure::Lib(Error::Backend(format!(
            "model backend {other:?} is not available in this build; use --backend stub"
        )))),
    }
}

fn open_corpus(path: &Path, profile: &Profile) -> Outcome<CorpusStore> {
    existing(path, "corpus")?;
    Ok(CorpusStore::open(path, profile.max_sentence_tokens)?)
}

fn write_output(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Everything a ranking command needs, loaded once.
struct Loaded {
    backend: Box<dyn ModelBackend>,
    store: CorpusStore,
    index: DecontextIndex,
    freq: FrequencyTable,
    cache: Option<GenerationCache>,
    profile: Profile,
}

impl Loaded {
    fn new(model: &ModelOpts, data: &DataOpts) -> Outcome<Self> {
        let profile = resolve_profile(model)?;
        let backend = load_backend(model)?;
        let store = open_corpus(&data.corpus, &profile)?;
        existing(&data.index, "index")?;
        let index = DecontextIndex::load(&data.index, Some(backend.id()))?;
        let freq = match &data.freq_table {
            Some(p) => {
                existing(p, "frequency table")?;
                FrequencyTable::load(p)?
            }
            None => FrequencyTable::from_corpus(&store),
        };
        let cache = match &data.cache {
            Some(p) if p.exists() => Some(GenerationCache::load(p)?),
            _ => None,
        };
        Ok(Loaded {
            backend,
            store,
            index,
            freq,
            cache,
            profile,
        })
    }

    fn simplifier(&self, profile: Profile) -> Outcome<Simplifier<'_>> {
        let s = Simplifier::new(self.backend.as_ref(), &self.store, &self.index, &self.freq, profile)?;
        Ok(match &self.cache {
            Some(c) => s.with_cache(c),
            None => s,
        })
    }
}

fn load_gold(path: &Path) -> Outcome<(GoldSet, Vec<InstanceInput>)> {
    existing(path, "gold file")?;
    Ok((GoldSet::load(path)?, load_instances(path)?))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::BuildIndex {
            model,
            corpus,
            out,
            vocab_file,
            targets,
        } => {
            let profile = resolve_profile(&model)?;
            let backend = load_backend(&model)?;
            let store = open_corpus(&corpus, &profile)?;
            let vocab = match vocab_file {
                Some(p) => {
                    existing(&p, "vocabulary file")?;
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    let words: Vec<&str> = text.lines().map(str::trim).filter(|w| !w.is_empty()).collect();
                    Vocabulary::from_words(words, Some(&store))
                }
                None => Vocabulary::from_corpus(&store, profile.vocab_size),
            };
            let extra: Vec<String> = match targets {
                Some(p) => {
                    existing(&p, "targets file")?;
                    let set: BTreeSet<String> = load_instances(&p)?.into_iter().map(|i| i.target).collect();
                    set.into_iter().collect()
                }
                None => Vec::new(),
            };
            let config = lexsimp::ClusterConfig::new(profile.k, profile.sample_n, profile.seed);
            let index = DecontextIndex::build(vocab, &extra, &store, backend.as_ref(), &config)?;
            index.save(&out)?;
            eprintln!("indexed {} words into {}", index.entries.len(), out.display());
        }
        Command::Simplify {
            model,
            data,
            input,
            sentence,
            target,
            ablation,
            out,
            tsv,
        } => {
            let loaded = Loaded::new(&model, &data)?;
            let inputs = match (input, sentence, target) {
                (Some(p), _, _) => {
                    existing(&p, "input file")?;
                    load_instances(&p)?
                }
                (None, Some(s), Some(t)) => vec![InstanceInput::new("1", &s, &t)],
                _ => return Err(Failure::Usage("give --input or --sentence with --target".into())),
            };
            let s = loaded.simplifier(loaded.profile.clone())?.with_mode(ablation.into());
            let records = s.simplify_all(&inputs)?;
            let text = if tsv {
                predictions_to_tsv(&records_to_predictions(&records))
            } else {
                records_to_jsonl(&records)?
            };
            write_output(out.as_deref(), &text)?;
        }
        Command::Precompute {
            model,
            data,
            input,
            out,
        } => {
            let loaded = Loaded::new(&model, &data)?;
            existing(&input, "input file")?;
            let words: BTreeSet<String> = load_instances(&input)?
                .into_iter()
                .map(|i| lexsimp::text::fold(&i.target))
                .collect();
            let s = loaded.simplifier(loaded.profile.clone())?;
            let mut cache = loaded.cache.clone().unwrap_or_default();
            for w in words {
                let table = s.generation_table(&w)?;
                cache.insert(loaded.backend.id(), loaded.index.seed, loaded.profile.beam, table);
            }
            cache.save(&out)?;
        }
        Command::Evaluate {
            pred,
            gold,
            metrics,
            format,
            system,
        } => {
            existing(&pred, "predictions")?;
            existing(&gold, "gold file")?;
            let report = evaluate(&load_predictions(&pred)?, &GoldSet::load(&gold)?, &metrics.config())?;
            let text = match format {
                ReportFormat::Text => report.to_text(),
                ReportFormat::Tsv => format!("{}\n{}\n", report.tsv_header(), report.tsv_row(&system)),
                ReportFormat::Json => serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n",
            };
            write_output(None, &text)?;
        }
        Command::Ablate {
            model,
            data,
            gold,
            modes,
            metrics,
        } => {
            let modes: Vec<AblationMode> = modes
                .iter()
                .map(|m| m.parse().map_err(|e: Error| Failure::Usage(e.to_string())))
                .collect::<Result<_, _>>()?;
            let loaded = Loaded::new(&model, &data)?;
            let (gold, inputs) = load_gold(&gold)?;
            let s = loaded.simplifier(loaded.profile.clone())?;
            let rows = run_ablation(&s, &inputs, &gold, &modes, &metrics.config())?;
            write_output(None, &ablation_table(&rows))?;
        }
        Command::Grid {
            model,
            data,
            gold,
            grid,
            metrics,
        } => {
            let vectors: Vec<[f64; 4]> = grid
                .split(';')
                .filter(|g| !g.trim().is_empty())
                .map(|g| parse_weights(g).map_err(Failure::Usage))
                .collect::<Result<_, _>>()?;
            if vectors.is_empty() {
                return Err(Failure::Usage("empty weight grid".into()));
            }
            let loaded = Loaded::new(&model, &data)?;
            let (gold, inputs) = load_gold(&gold)?;
            let mut out = String::new();
            for (i, w) in vectors.iter().enumerate() {
                let profile = Profile {
                    weights: *w,
                    ..loaded.profile.clone()
                };
                let s = loaded.simplifier(profile)?;
                let report = evaluate(&records_to_predictions(&s.simplify_all(&inputs)?), &gold, &metrics.config())?;
                if i == 0 {
                    out.push_str(&report.tsv_header().replacen("system", "weights", 1));
                    out.push('\n');
                }
                let label: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                out.push_str(&report.tsv_row(&label.join(",")));
                out.push('\n');
            }
            write_output(None, &out)?;
        }
        Command::Ensemble {
            systems,
            missing,
            frequency,
            freq_table,
            out,
        } => {
            let mut loaded = Vec::new();
            for p in &systems {
                existing(p, "system predictions")?;
                loaded.push(ExternalRanking {
                    system_id: p.display().to_string(),
                    rankings: load_predictions(p)?,
                });
            }
            if frequency {
                let path = freq_table.expect("clap enforces --freq-table");
                existing(&path, "frequency table")?;
                let extra = frequency_ranking(&loaded, &FrequencyTable::load(&path)?);
                loaded.push(extra);
            }
            let missing = match missing {
                MissingArg::AfterRanking => MissingRank::AfterRanking,
                MissingArg::AfterPool => MissingRank::AfterPool,
            };
            write_output(out.as_deref(), &predictions_to_tsv(&ensemble(&loaded, missing)?))?;
        }
        Command::ExportSwords { pred, out } => {
            existing(&pred, "predictions")?;
            export_swords(&load_predictions(&pred)?, &out)?;
        }
        Command::FreqTable { corpus, out } => {
            existing(&corpus, "corpus")?;
            let store = CorpusStore::open(&corpus, lexsimp::corpus::DEFAULT_MAX_TOKENS)?;
            FrequencyTable::from_corpus(&store).save(&out)?;
        }
        Command::Profiles { config } => {
            let mut set = ProfileSet::builtin();
            if let Some(cfg) = config {
                existing(&cfg, "config file")?;
                set.profiles.extend(ProfileSet::load(&cfg)?.profiles);
            }
            write_output(None, &set.to_toml()?)?;
        }
        Command::World { name, out, list } => {
            if list {
                write_output(None, &(worlds::names().join("\n") + "\n"))?;
                return Ok(());
            }
            let name = name.expect("clap enforces a name");
            let world = worlds::by_name(&name).ok_or_else(|| {
                Failure::Usage(format!("unknown world {name:?}; try --list"))
            })?;
            world.write_to(out.expect("clap enforces --out"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_backend() { 4 } else { 3 })
        }
    }
}
