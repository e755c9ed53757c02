//! Same pipeline, different cluster-retrieval modes.

use crate::augment::AblationMode;
use crate::error::{Error, Result};
use crate::pipeline::{records_to_predictions, InstanceInput, Simplifier, SimplifyRecord};

use super::{evaluate, GoldSet, MetricConfig, MetricReport};

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub mode: AblationMode,
    pub report: MetricReport,
    pub records: Vec<SimplifyRecord>,
}

pub fn run_ablation(
    simplifier: &Simplifier<'_>,
    instances: &[InstanceInput],
    gold: &GoldSet,
    modes: &[AblationMode],
    metrics: &MetricConfig,
) -> Result<Vec<AblationRow>> {
    if modes.is_empty() {
        return Err(Error::InvalidInput("no ablation modes given".into()));
    }
    modes
        .iter()
        .map(|&mode| {
            let records = simplifier.clone().with_mode(mode).simplify_all(instances)?;
            let report = evaluate(&records_to_predictions(&records), gold, metrics)?;
            Ok(AblationRow {
                mode,
                report,
                records,
            })
        })
        .collect()
}

fn label(mode: AblationMode) -> &'static str {
    match mode {
        AblationMode::Soft => "Soft Retrieval",
        AblationMode::Hard => "Hard Retrieval",
        AblationMode::None => "No Clustering",
    }
}

/// Tab-separated comparison, one row per mode.
pub fn ablation_table(rows: &[AblationRow]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let mut out = first.report.tsv_header().replacen("system", "method", 1);
    out.push('\n');
    for r in rows {
        out.push_str(&r.report.tsv_row(label(r.mode)));
        out.push('\n');
    }
    out
}
