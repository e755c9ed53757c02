//! TSAR-style evaluation: ACC@1, ACC@k@Top1, Potential@k and MAP@k, plus
//! ensembling and SWORDS export.

pub mod ablation;
pub mod data;
pub mod ensemble;
pub mod swords;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::fold;

pub use data::{ExternalRanking, GoldInstance, GoldSet, Predictions};

/// Case-fold and drop repeats, keeping first positions.
pub fn normalize_prediction(pred: &[String]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    pred.iter()
        .map(|p| fold(p.trim()))
        .filter(|p| !p.is_empty() && seen.insert(p.clone()))
        .collect()
}

pub fn accuracy_at_1(pred: &[String], gold: &GoldInstance) -> f64 {
    f64::from(u8::from(pred.first().is_some_and(|p| gold.contains(p))))
}

pub fn accuracy_at_k_top1(pred: &[String], gold: &GoldInstance, k: usize) -> f64 {
    let top = gold.top1();
    f64::from(u8::from(pred.iter().take(k).any(|p| p == top)))
}

pub fn potential_at_k(pred: &[String], gold: &GoldInstance, k: usize) -> f64 {
    f64::from(u8::from(pred.iter().take(k).any(|p| gold.contains(p))))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `lcm(1..=k)`, or `None` once it no longer fits comfortably.
fn lcm_upto(k: usize) -> Option<u128> {
    let mut l: u128 = 1;
    for i in 1..=k as u128 {
        l = (l / gcd(l, i)).checked_mul(i)?;
        if l > u64::MAX as u128 {
            return None;
        }
    }
    Some(l)
}

/// `num / den` rounded once; exact whenever both fit in 53 bits after
/// reduction.
pub fn ratio_to_f64(num: u128, den: u128) -> f64 {
    let g = gcd(num, den).max(1);
    (num / g) as f64 / (den / g) as f64
}

/// AP@k as an exact fraction `(Σ_{rel i} hits_i · L/i, k·L)` with
/// `L = lcm(1..=k)`. `None` when `k` is too large for exact arithmetic.
pub fn average_precision_ratio(pred: &[String], gold: &GoldInstance, k: usize) -> Option<(u128, u128)> {
    if k == 0 {
        return Some((0, 1));
    }
    let l = lcm_upto(k)?;
    let mut hits = 0u128;
    let mut num = 0u128;
    for (i, p) in pred.iter().take(k).enumerate() {
        if gold.contains(p) {
            hits += 1;
            num += hits * (l / (i as u128 + 1));
        }
    }
    Some((num, k as u128 * l))
}

/// `(1/k) Σ_{i<=k} rel(i) · precision@i`.
pub fn average_precision_at_k(pred: &[String], gold: &GoldInstance, k: usize) -> f64 {
    if let Some((num, den)) = average_precision_ratio(pred, gold, k) {
        return ratio_to_f64(num, den);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, p) in pred.iter().take(k).enumerate() {
        if gold.contains(p) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / k as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub top1_ks: Vec<usize>,
    pub ks: Vec<usize>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            top1_ks: vec![1, 2, 3],
            ks: vec![3, 5, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScores {
    pub acc_at_1: f64,
    pub acc_at_k_top1: Vec<(usize, f64)>,
    pub map_at_k: Vec<(usize, f64)>,
    pub potential_at_k: Vec<(usize, f64)>,
}

pub fn score_instance(pred: &[String], gold: &GoldInstance, config: &MetricConfig) -> InstanceScores {
    let pred = normalize_prediction(pred);
    InstanceScores {
        acc_at_1: accuracy_at_1(&pred, gold),
        acc_at_k_top1: config
            .top1_ks
            .iter()
            .map(|&k| (k, accuracy_at_k_top1(&pred, gold, k)))
            .collect(),
        map_at_k: config
            .ks
            .iter()
            .map(|&k| (k, average_precision_at_k(&pred, gold, k)))
            .collect(),
        potential_at_k: config
            .ks
            .iter()
            .map(|&k| (k, potential_at_k(&pred, gold, k)))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_instances: usize,
    /// Gold instances with no prediction; they score zero.
    pub n_missing: usize,
    pub acc_at_1: f64,
    pub acc_at_k_top1: Vec<(usize, f64)>,
    pub map_at_k: Vec<(usize, f64)>,
    pub potential_at_k: Vec<(usize, f64)>,
}

impl MetricReport {
    /// Named columns in table order.
    pub fn columns(&self) -> Vec<(String, f64)> {
        let mut cols = vec![("ACC@1".to_string(), self.acc_at_1)];
        cols.extend(self.acc_at_k_top1.iter().map(|(k, v)| (format!("ACC@{k}@Top1"), *v)));
        cols.extend(self.map_at_k.iter().map(|(k, v)| (format!("MAP@{k}"), *v)));
        cols.extend(self.potential_at_k.iter().map(|(k, v)| (format!("Potential@{k}"), *v)));
        cols
    }

    pub fn tsv_header(&self) -> String {
        let names: Vec<String> = self.columns().into_iter().map(|(n, _)| n).collect();
        format!("system\tn\t{}", names.join("\t"))
    }

    pub fn tsv_row(&self, system: &str) -> String {
        let vals: Vec<String> = self.columns().into_iter().map(|(_, v)| format!("{v:.6}")).collect();
        format!("{system}\t{}\t{}", self.n_instances, vals.join("\t"))
    }

    /// Aligned text table, values as percentages.
    pub fn to_text(&self) -> String {
        let cols = self.columns();
        let width = cols.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
        let mut out = format!("{:width$}  {}\n", "instances", self.n_instances);
        for (n, v) in cols {
            out.push_str(&format!("{n:width$}  {:.2}\n", v * 100.0));
        }
        out
    }
}

fn hit_rate(flags: impl Iterator<Item = bool>, n: usize) -> f64 {
    ratio_to_f64(flags.filter(|&f| f).count() as u128, n as u128)
}

/// Mean AP@k over instances as one exact fraction; falls back to a sorted
/// floating-point sum when the fraction would overflow.
fn mean_average_precision(pairs: &[(&[String], &GoldInstance)], k: usize) -> f64 {
    let n = pairs.len() as u128;
    let exact = pairs.iter().try_fold((0u128, 1u128), |(acc, _), (p, g)| {
        let (num, den) = average_precision_ratio(p, g, k)?;
        Some((acc.checked_add(num)?, den))
    });
    if let Some((num, den)) = exact {
        if let Some(den) = den.checked_mul(n) {
            return ratio_to_f64(num, den);
        }
    }
    let mut v: Vec<f64> = pairs
        .iter()
        .map(|(p, g)| average_precision_at_k(p, g, k))
        .collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().fold(0.0, |a, b| a + b) / pairs.len() as f64
}

/// Mean of per-instance scores over the gold set. Every mean is computed
/// exactly and rounded once, so instance order never matters. Predictions
/// for ids absent from the gold set are an error.
pub fn evaluate(preds: &Predictions, gold: &GoldSet, config: &MetricConfig) -> Result<MetricReport> {
    if gold.is_empty() {
        return Err(Error::InvalidInput("empty gold set".into()));
    }
    if let Some(id) = preds.keys().find(|id| !gold.instances.contains_key(*id)) {
        return Err(Error::Misaligned(format!("prediction for unknown instance {id:?}")));
    }
    let normalized: Vec<(Vec<String>, &GoldInstance)> = gold
        .instances
        .iter()
        .map(|(id, g)| (normalize_prediction(preds.get(id).map_or(&[][..], Vec::as_slice)), g))
        .collect();
    let pairs: Vec<(&[String], &GoldInstance)> =
        normalized.iter().map(|(p, g)| (p.as_slice(), *g)).collect();
    let n = pairs.len();
    Ok(MetricReport {
        n_instances: n,
        n_missing: gold.instances.keys().filter(|id| !preds.contains_key(*id)).count(),
        acc_at_1: hit_rate(pairs.iter().map(|(p, g)| accuracy_at_1(p, g) == 1.0), n),
        acc_at_k_top1: config
            .top1_ks
            .iter()
            .map(|&k| (k, hit_rate(pairs.iter().map(|(p, g)| accuracy_at_k_top1(p, g, k) == 1.0), n)))
            .collect(),
        map_at_k: config
            .ks
            .iter()
            .map(|&k| (k, mean_average_precision(&pairs, k)))
            .collect(),
        potential_at_k: config
            .ks
            .iter()
            .map(|&k| (k, hit_rate(pairs.iter().map(|(p, g)| potential_at_k(p, g, k) == 1.0), n)))
            .collect(),
    })
}
