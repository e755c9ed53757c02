//! Gold annotations and prediction files.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::text::fold;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldInstance {
    pub sentence: String,
    pub target: String,
    /// Case-folded substitute to annotator count.
    pub gold: BTreeMap<String, u32>,
}

impl GoldInstance {
    pub fn new<I, S>(sentence: &str, target: &str, substitutes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut gold = BTreeMap::new();
        for s in substitutes {
            let s = fold(s.as_ref().trim());
            if !s.is_empty() {
                *gold.entry(s).or_insert(0) += 1;
            }
        }
        if gold.is_empty() {
            return Err(Error::InvalidInput(format!("no gold substitutes for {target:?}")));
        }
        Ok(GoldInstance {
            sentence: sentence.to_string(),
            target: target.to_string(),
            gold,
        })
    }

    /// Highest annotator count; ties go to the lexicographically first form.
    pub fn top1(&self) -> &str {
        let mut best: Option<(&String, u32)> = None;
        for (w, &c) in &self.gold {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((w, c));
            }
        }
        best.map(|(w, _)| w.as_str()).unwrap_or("")
    }

    pub fn contains(&self, word: &str) -> bool {
        self.gold.contains_key(word)
    }
}

/// Gold instances keyed by instance id (the 1-based line number).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldSet {
    pub instances: BTreeMap<String, GoldInstance>,
    /// Ids in file order.
    pub order: Vec<String>,
}

impl GoldSet {
    /// TSAR format: `sentence<TAB>target<TAB>gold1<TAB>gold2...`, repeated
    /// substitutes encoding annotator counts. Blank lines are skipped but
    /// still consume a line number.
    pub fn parse<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut set = GoldSet::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|_| Error::Encoding { line: i + 1 })?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 3 {
                return Err(err(format!("expected at least 3 tab-separated columns, got {}", cols.len())));
            }
            let inst = GoldInstance::new(cols[0], cols[1].trim(), &cols[2..]).map_err(|e| err(e.to_string()))?;
            let id = (i + 1).to_string();
            set.order.push(id.clone());
            set.instances.insert(id, inst);
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), path)
    }

    pub fn from_instances<I>(instances: I) -> Self
    where
        I: IntoIterator<Item = (String, GoldInstance)>,
    {
        let mut set = GoldSet::default();
        for (id, inst) in instances {
            set.order.push(id.clone());
            set.instances.insert(id, inst);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Ranked candidate lists keyed by instance id.
pub type Predictions = BTreeMap<String, Vec<String>>;

/// One system's rankings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalRanking {
    pub system_id: String,
    pub rankings: Predictions,
}

fn id_of(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Read predictions as JSON lines (objects with `id` and a `candidates` list
/// of strings or `{"word": ...}` objects) or as TSV (`id<TAB>cand1<TAB>...`).
/// The format is chosen by the first non-blank character.
pub fn parse_predictions(text: &str, path: &Path) -> Result<Predictions> {
    let json = text.trim_start().starts_with('{');
    let mut out = Predictions::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let (id, cands) = if json {
            let v: Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            let id = v.get("id").and_then(id_of).ok_or_else(|| err("missing id".into()))?;
            let list = v
                .get("candidates")
                .and_then(Value::as_array)
                .ok_or_else(|| err("missing candidates list".into()))?;
            let cands = list
                .iter()
                .map(|c| match c {
                    Value::String(s) => Some(s.clone()),
                    Value::Object(o) => o.get("word").and_then(Value::as_str).map(String::from),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| err("candidates must be strings or objects with a word".into()))?;
            (id, cands)
        } else {
            let mut cols = line.trim_end().split('\t');
            let id = cols.next().unwrap_or_default().trim().to_string();
            (id, cols.map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect())
        };
        if out.insert(id.clone(), cands).is_some() {
            return Err(err(format!("duplicate instance id {id:?}")));
        }
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Predictions> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text, path)
}

pub fn predictions_to_tsv(preds: &Predictions) -> String {
    preds
        .iter()
        .map(|(id, c)| {
            let mut line = id.clone();
            for w in c {
                line.push('\t');
                line.push_str(w);
            }
            line.push('\n');
            line
        })
        .collect()
}
