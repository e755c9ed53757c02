//! Export for the external SWORDS lexical-substitution scorer.
//!
//! The file is JSON: `{"substitutes_lemmatized": false, "substitutes":
//! {"<instance id>": [["word", score], ...]}}` with at most 50 substitutes per
//! instance, best first and scores descending.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SWORDS_TOP_N: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwordsExport {
    pub substitutes_lemmatized: bool,
    pub substitutes: BTreeMap<String, Vec<(String, f64)>>,
}

impl SwordsExport {
    /// From best-first rankings; the score is `-(position)` so that higher
    /// is better.
    pub fn from_rankings(rankings: &BTreeMap<String, Vec<String>>) -> Self {
        SwordsExport {
            substitutes_lemmatized: false,
            substitutes: rankings
                .iter()
                .map(|(id, list)| {
                    let subs = list
                        .iter()
                        .take(SWORDS_TOP_N)
                        .enumerate()
                        .map(|(i, w)| (w.clone(), -((i + 1) as f64)))
                        .collect();
                    (id.clone(), subs)
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn export_swords(rankings: &BTreeMap<String, Vec<String>>, path: impl AsRef<Path>) -> Result<SwordsExport> {
    let path = path.as_ref();
    let export = SwordsExport::from_rankings(rankings);
    std::fs::write(path, export.to_json()?).map_err(|e| Error::io(path, e))?;
    Ok(export)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps_at_fifty_and_orders_scores() {
        let list: Vec<String> = (0..80).map(|i| format!("w{i}")).collect();
        let r = BTreeMap::from([("a".to_string(), list)]);
        let dir = tempfile::tempdir().unwrap();
        let e = export_swords(&r, dir.path().join("s.json")).unwrap();
        let subs = &e.substitutes["a"];
        assert_eq!(subs.len(), 50);
        assert!(subs.windows(2).all(|w| w[0].1 > w[1].1));
        let text = std::fs::read_to_string(dir.path().join("s.json")).unwrap();
        let back: SwordsExport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, e);
    }
}
