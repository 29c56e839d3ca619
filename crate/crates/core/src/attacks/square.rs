use rand::Rng as _;

use super::{AttackOutcome, Classifier};
use crate::nn::argmax;
use crate::rng::Rng;

/// `logit_y - max_{c != y} logit_c`; negative means misclassified.
pub fn margin(logits: &[f64], label: usize) -> f64 {
    let other = logits
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != label)
        .map(|(_, &z)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    logits[label] - other
}

/// Window length as a fraction of the input, halved as the budget drains.
fn window_fraction(used: usize, budget: usize) -> f64 {
    const MILESTONES: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
    let progress = used as f64 / budget as f64;
    let halvings = MILESTONES.iter().filter(|&&m| progress >= m).count();
    0.5 / f64::powi(2.0, halvings as i32)
}

/// Gradient-free random search over contiguous coordinate windows.
///
/// Each proposal overwrites one window of the current perturbation with
/// per-coordinate random `±epsilon` and is kept only if it lowers the
/// margin. Uses at most `query_budget` forward evaluations (the clean query
/// included) and stops at the first misclassification. `kappa` reports the
/// query index of that success, or the budget.
pub fn square_patch_attack<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    label: usize,
    epsilon: f64,
    query_budget: usize,
    rng: &mut Rng,
) -> AttackOutcome {
    assert!(query_budget >= 1, "query budget must be at least 1");
    let d = x.len();
    let clean = model.logits(x);
    let mut best_margin = margin(&clean, label);
    let mut best = x.to_vec();
    if argmax(&clean) != label {
        return AttackOutcome {
            adversarial: best,
            success: true,
            kappa: 0,
            loss: -best_margin,
        };
    }
    let mut delta = vec![0.0; d];
    let mut proposal = vec![0.0; d];
    let mut candidate = vec![0.0; d];
    for q in 1..query_budget {
        let len = ((window_fraction(q, query_budget) * d as f64).round() as usize).clamp(1, d);
        let start = rng.gen_range(0..=d - len);
        proposal.copy_from_slice(&delta);
        for p in &mut proposal[start..start + len] {
            *p = if rng.gen_bool(0.5) { epsilon } else { -epsilon };
        }
        for ((c, &x0), &p) in candidate.iter_mut().zip(x).zip(&proposal) {
            *c = (x0 + p).clamp(0.0, 1.0);
        }
        let logits = model.logits(&candidate);
        let m = margin(&logits, label);
        if m < best_margin {
            best_margin = m;
            std::mem::swap(&mut delta, &mut proposal);
            best.copy_from_slice(&candidate);
            if argmax(&logits) != label {
                return AttackOutcome {
                    adversarial: best,
                    success: true,
                    kappa: q,
                    loss: -best_margin,
                };
            }
        }
    }
    AttackOutcome {
        adversarial: best,
        success: false,
        kappa: query_budget,
        loss: -best_margin,
    }
}
