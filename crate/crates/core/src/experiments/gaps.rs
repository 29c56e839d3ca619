use serde::{Deserialize, Serialize};

use super::eval::EvalTable;
use super::run::RunSummary;
use crate::datasets::RemovalMode;
use crate::objectives::ObjectiveKind;
use crate::{Error, Result};

/// What distinguishes one experimental condition from another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub fraction: f64,
    /// `None` for unpruned data.
    pub mode: Option<RemovalMode>,
    pub objective: ObjectiveKind,
    pub seed: u64,
    /// Named subset such as a quality half; `None` for the whole set.
    pub subset: Option<String>,
}

/// The three gap metrics of one condition, as accuracy fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub condition: Condition,
    pub best_robust: f64,
    pub last_robust: f64,
    /// Best minus last robust test accuracy.
    pub robust_overfitting_gap: f64,
    /// Reference PGD minus strong-evaluator accuracy on the best model.
    pub overestimation_gap: Option<f64>,
    pub adversarial_clean_last: f64,
    pub standard_clean_last: f64,
    /// Standard-training minus adversarial-training clean test accuracy,
    /// both at the last epoch.
    pub cross_generalization_gap: f64,
}

pub fn overestimation_gap(pgd: f64, strong: f64) -> f64 {
    pgd - strong
}

/// Combines an adversarial run, its standard-training twin and (optionally)
/// the evaluator table of the adversarial model's best checkpoint.
pub fn compute_gaps(
    adv: &RunSummary,
    std: &RunSummary,
    eval: Option<&EvalTable>,
    condition: Condition,
) -> Result<GapReport> {
    if adv.test_digest != std.test_digest {
        return Err(Error::IdMismatch("adversarial and standard runs used different test sets".into()));
    }
    if let Some(t) = eval {
        if t.test_digest != adv.test_digest {
            return Err(Error::IdMismatch("evaluator table used a different test set".into()));
        }
    }
    let missing = |which: &str| Error::Empty(format!("{which} run has no completed epochs"));
    let best_robust = adv.best_robust().ok_or_else(|| missing("adversarial"))?;
    let last_robust = adv.last_robust().ok_or_else(|| missing("adversarial"))?;
    let adversarial_clean_last = adv.last_clean().ok_or_else(|| missing("adversarial"))?;
    let standard_clean_last = std.last_clean().ok_or_else(|| missing("standard"))?;
    Ok(GapReport {
        condition,
        best_robust,
        last_robust,
        robust_overfitting_gap: best_robust - last_robust,
        overestimation_gap: eval.map(|t| overestimation_gap(t.pgd, t.strong)),
        adversarial_clean_last,
        standard_clean_last,
        cross_generalization_gap: standard_clean_last - adversarial_clean_last,
    })
}
