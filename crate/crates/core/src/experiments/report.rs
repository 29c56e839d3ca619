use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::protocols::{CurveEntry, HalfEntry};
use crate::datasets::RemovalMode;
use crate::profiler::Measure;
use crate::stats::{aggregate, SeedAggregate};
use crate::{Error, Result};

/// Machine-readable result of a removal-curve experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub config_digest: String,
    pub ranking_measure: Measure,
    pub ranking_ensemble_size: usize,
    pub entries: Vec<CurveEntry>,
    pub summary: Vec<ConditionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSplitReport {
    pub config_digest: String,
    pub entries: Vec<HalfEntry>,
}

/// Seed aggregates of one `(fraction, mode)` cell. Standard deviations use
/// the `n - 1` denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub fraction: f64,
    pub mode: Option<RemovalMode>,
    pub best_robust: SeedAggregate,
    pub last_robust: SeedAggregate,
    pub robust_overfitting_gap: SeedAggregate,
    pub overestimation_gap: Option<SeedAggregate>,
    pub cross_generalization_gap: SeedAggregate,
}

/// Groups entries by `(fraction, mode)` in first-seen order.
pub fn summarize_curve(entries: &[CurveEntry]) -> Result<Vec<ConditionSummary>> {
    let mut keys: Vec<(f64, Option<RemovalMode>)> = Vec::new();
    for e in entries {
        let k = (e.condition.fraction, e.condition.mode);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(fraction, mode)| {
            let cell: Vec<&CurveEntry> = entries
                .iter()
                .filter(|e| e.condition.fraction == fraction && e.condition.mode == mode)
                .collect();
            let agg = |f: &dyn Fn(&CurveEntry) -> f64| aggregate(&cell.iter().map(|e| f(e)).collect::<Vec<_>>());
            let over: Option<Vec<f64>> = cell.iter().map(|e| e.gaps.overestimation_gap).collect();
            Ok(ConditionSummary {
                fraction,
                mode,
                best_robust: agg(&|e| e.gaps.best_robust)?,
                last_robust: agg(&|e| e.gaps.last_robust)?,
                robust_overfitting_gap: agg(&|e| e.gaps.robust_overfitting_gap)?,
                overestimation_gap: over.map(|v| aggregate(&v)).transpose()?,
                cross_generalization_gap: agg(&|e| e.gaps.cross_generalization_gap)?,
            })
        })
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Flat per-condition table for plotting.
pub fn curve_table(entries: &[CurveEntry]) -> String {
    let mut out = String::from(
        "fraction,mode,objective,seed,train_size,best_robust,last_robust,robust_overfitting_gap,\
         pgd,strong,overestimation_gap,adversarial_clean_last,standard_clean_last,cross_generalization_gap\n",
    );
    for e in entries {
        let g = &e.gaps;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            e.condition.fraction,
            e.condition.mode.map_or("none", |m| m.name()),
            e.condition.objective.name(),
            e.condition.seed,
            e.train_size,
            g.best_robust,
            g.last_robust,
            g.robust_overfitting_gap,
            e.eval.pgd,
            e.eval.strong,
            opt(g.overestimation_gap),
            g.adversarial_clean_last,
            g.standard_clean_last,
            g.cross_generalization_gap,
        );
    }
    out
}

pub fn half_split_table(entries: &[HalfEntry]) -> String {
    let mut out = String::from(
        "half,seed,train_size,best_robust,last_robust,robust_overfitting_gap,\
         adversarial_clean_last,standard_clean_last,cross_generalization_gap\n",
    );
    for e in entries {
        let g = &e.gaps;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            e.half.name(),
            e.seed,
            e.train_size,
            g.best_robust,
            g.last_robust,
            g.robust_overfitting_gap,
            g.adversarial_clean_last,
            g.standard_clean_last,
            g.cross_generalization_gap,
        );
    }
    out
}
