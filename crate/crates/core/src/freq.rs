//! Word frequency lookup on the Zipf scale.
//!
//! File format: UTF-8, one `word<TAB>zipf` pair per line. Blank lines and
//! lines starting with `#` are skipped. A table can be derived from any corpus
//! with `zipf = log10(count / total_tokens * 1e9)`.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use crate::corpus::CorpusStore;
use crate::error::{Error, Result};
use crate::text::fold;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyTable {
    zipf: BTreeMap<String, f64>,
}

pub fn zipf(count: u64, total: u64) -> f64 {
    (count as f64 / total as f64 * 1e9).log10()
}

impl FrequencyTable {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        FrequencyTable {
            zipf: pairs.into_iter().map(|(w, z)| (fold(w.as_ref()), z)).collect(),
        }
    }

    pub fn from_corpus(store: &CorpusStore) -> Self {
        let total = store.total_tokens();
        FrequencyTable {
            zipf: store
                .counts()
                .iter()
                .map(|(w, &c)| (w.clone(), zipf(c, total)))
                .collect(),
        }
    }

    pub fn parse<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut zipf = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|_| Error::Encoding { line: i + 1 })?;
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message,
            };
            let mut cols = line.split('\t');
            let (Some(word), Some(value), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(err("expected word<TAB>zipf".into()));
            };
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("bad frequency {value:?}")))?;
            if !value.is_finite() {
                return Err(err(format!("bad frequency {value}")));
            }
            zipf.insert(fold(word.trim()), value);
        }
        Ok(FrequencyTable { zipf })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), path)
    }

    pub fn to_tsv(&self) -> String {
        self.zipf.iter().map(|(w, z)| format!("{w}\t{z}\n")).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.zipf.get(&fold(word)).copied()
    }

    pub fn len(&self) -> usize {
        self.zipf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zipf.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.zipf.iter().map(|(w, &z)| (w.as_str(), z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_lookup() {
        let text = "# comment\nthe\t7.73\nBole\t1.5  \n\n";
        let t = FrequencyTable::parse(text.as_bytes(), Path::new("f.tsv")).unwrap();
        assert_eq!(t.get("THE"), Some(7.73));
        assert_eq!(t.get("bole"), Some(1.5));
        assert_eq!(t.get("toe"), None);
        let back = FrequencyTable::parse(t.to_tsv().as_bytes(), Path::new("f")).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn parse_errors_carry_line() {
        let e = FrequencyTable::parse("a\t1\nb 2\n".as_bytes(), Path::new("f")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(FrequencyTable::parse("a\tx\n".as_bytes(), Path::new("f")).is_err());
        assert!(FrequencyTable::parse("a\t1\t2\n".as_bytes(), Path::new("f")).is_err());
    }

    #[test]
    fn derived_from_corpus() {
        let store = CorpusStore::from_lines(["a a b", "a c"], 128);
        let t = FrequencyTable::from_corpus(&store);
        // 3 of 5 tokens
        assert!((t.get("a").unwrap() - (0.6e9f64).log10()).abs() < 1e-12);
        assert!(t.get("a").unwrap() > t.get("b").unwrap());
    }
}
