//! Unweighted rank-sum ensembling of several systems' rankings.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::FrequencyTable;
use crate::text::fold;

use super::data::{ExternalRanking, Predictions};
use super::normalize_prediction;

/// Rank given to a candidate a system did not return.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingRank {
    /// `|that system's ranking| + 1`.
    #[default]
    AfterRanking,
    /// `|union of all candidates| + 1`.
    AfterPool,
}

impl FromStr for MissingRank {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "after_ranking" => Ok(MissingRank::AfterRanking),
            "after_pool" => Ok(MissingRank::AfterPool),
            other => Err(Error::InvalidInput(format!("unknown missing-rank rule {other:?}"))),
        }
    }
}

/// Rank-sum combination of one instance's rankings, ascending, ties by form.
pub fn combine(rankings: &[Vec<String>], missing: MissingRank) -> Vec<(String, usize)> {
    let lists: Vec<Vec<String>> = rankings.iter().map(|r| normalize_prediction(r)).collect();
    let pool: BTreeSet<&String> = lists.iter().flatten().collect();
    let mut scored: Vec<(String, usize)> = pool
        .iter()
        .map(|&c| {
            let total = lists
                .iter()
                .map(|l| match l.iter().position(|x| x == c) {
                    Some(i) => i + 1,
                    None => match missing {
                        MissingRank::AfterRanking => l.len() + 1,
                        MissingRank::AfterPool => pool.len() + 1,
                    },
                })
                .sum();
            (c.clone(), total)
        })
        .collect();
    scored.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

/// Combine several systems instance by instance. All systems must cover the
/// same instance ids.
pub fn ensemble(systems: &[ExternalRanking], missing: MissingRank) -> Result<Predictions> {
    let Some(first) = systems.first() else {
        return Err(Error::InvalidInput("nothing to ensemble".into()));
    };
    for s in &systems[1..] {
        if !s.rankings.keys().eq(first.rankings.keys()) {
            return Err(Error::Misaligned(format!(
                "system {:?} covers different instances than {:?}",
                s.system_id, first.system_id
            )));
        }
    }
    Ok(first
        .rankings
        .keys()
        .map(|id| {
            let lists: Vec<Vec<String>> = systems.iter().map(|s| s.rankings[id].clone()).collect();
            let combined = combine(&lists, missing).into_iter().map(|(w, _)| w).collect();
            (id.clone(), combined)
        })
        .collect())
}

/// Rank each instance's pooled candidates by frequency, most frequent first;
/// words missing from the table go last in form order.
pub fn frequency_ranking(systems: &[ExternalRanking], freq: &FrequencyTable) -> ExternalRanking {
    let mut pooled: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for s in systems {
        for (id, list) in &s.rankings {
            pooled.entry(id.clone()).or_default().extend(list.iter().map(|w| fold(w.trim())));
        }
    }
    let rankings = pooled
        .into_iter()
        .map(|(id, words)| {
            let mut v: Vec<String> = words.into_iter().filter(|w| !w.is_empty()).collect();
            v.sort_by(|a, b| match (freq.get(a), freq.get(b)) {
                (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.cmp(b)),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => a.cmp(b),
            });
            (id, v)
        })
        .collect();
    ExternalRanking {
        system_id: "frequency".into(),
        rankings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|w| w.to_string()).collect()
    }

    fn sys(id: &str, list: &[&str]) -> ExternalRanking {
        ExternalRanking {
            system_id: id.into(),
            rankings: Predictions::from([("1".to_string(), v(list))]),
        }
    }

    #[test]
    fn examples() {
        let a = sys("a", &["x", "y", "z"]);
        assert_eq!(ensemble(&[a.clone(), a.clone()], MissingRank::default()).unwrap()["1"], v(&["x", "y", "z"]));
        assert_eq!(ensemble(std::slice::from_ref(&a), MissingRank::default()).unwrap()["1"], v(&["x", "y", "z"]));
        let b = sys("b", &["b", "a"]);
        let c = sys("c", &["a", "b"]);
        assert_eq!(ensemble(&[b, c], MissingRank::default()).unwrap()["1"], v(&["a", "b"]));
    }

    #[test]
    fn missing_candidates_are_imputed() {
        // p: 1 + (2+1) = 4, q: 2 + 1 = 3, r: (2+1) + 2 = 5
        let out = combine(&[v(&["p", "q"]), v(&["q", "r"])], MissingRank::AfterRanking);
        assert_eq!(out, vec![("q".into(), 3), ("p".into(), 4), ("r".into(), 5)]);
        let out = combine(&[v(&["p"]), v(&["q", "r"])], MissingRank::AfterPool);
        // pool 3: p 1+4, q 4+1, r 4+2
        assert_eq!(out, vec![("p".into(), 5), ("q".into(), 5), ("r".into(), 6)]);
    }

    #[test]
    fn misaligned_systems_rejected() {
        let mut b = sys("b", &["x"]);
        b.rankings.insert("2".into(), vec![]);
        assert!(ensemble(&[sys("a", &["x"]), b], MissingRank::default()).is_err());
        assert!(ensemble(&[], MissingRank::default()).is_err());
    }

    #[test]
    fn frequency_system() {
        let f = FrequencyTable::from_pairs([("the", 7.0), ("cat", 4.0)]);
        let r = frequency_ranking(&[sys("a", &["zz", "cat"]), sys("b", &["the", "aa"])], &f);
        assert_eq!(r.rankings["1"], v(&["the", "cat", "aa", "zz"]));
    }
}
