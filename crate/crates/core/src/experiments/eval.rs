use serde::{Deserialize, Serialize};

use super::run::dataset_digest;
use crate::attacks::{self, AttackConfig};
use crate::config::EvaluatorConfig;
use crate::datasets::Dataset;
use crate::nn::Network;
use crate::rng;
use crate::{Error, Result};

/// Attacks applied to a finished model. `attack` is the reference PGD
/// evaluator; the others are derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSuite {
    pub attack: AttackConfig,
    pub evaluators: EvaluatorConfig,
}

/// Robust accuracy per evaluator on one test set. `strong` is the minimum
/// of `multi_restart` and `square`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTable {
    pub seed: u64,
    pub size: usize,
    pub test_digest: String,
    pub clean: f64,
    pub pgd: f64,
    pub pgd_long: Option<f64>,
    pub multi_restart: f64,
    pub square: f64,
    pub transfer: Option<f64>,
    pub strong: f64,
}

impl EvalTable {
    /// `(name, accuracy)` for every evaluator that ran.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![("pgd", self.pgd)];
        if let Some(a) = self.pgd_long {
            v.push(("pgd_long", a));
        }
        v.push(("multi_restart", self.multi_restart));
        v.push(("square", self.square));
        if let Some(a) = self.transfer {
            v.push(("transfer", a));
        }
        v
    }

    /// Largest minus smallest accuracy over the white- and black-box
    /// evaluators.
    pub fn spread(&self) -> f64 {
        let acc: Vec<f64> = self.entries().into_iter().map(|(_, a)| a).collect();
        acc.iter().copied().fold(f64::NEG_INFINITY, f64::max) - acc.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Scores `model` on `test` under every configured evaluator. Example `id`
/// uses the stream `(seed, id)` for both single and multi-restart PGD, so
/// the first restart replays the single run and multi-restart accuracy
/// can never exceed PGD accuracy.
pub fn overestimation_eval(
    model: &Network,
    test: &Dataset,
    suite: &EvalSuite,
    surrogate: Option<&Network>,
    seed: u64,
) -> Result<EvalTable> {
    suite.attack.validate("eval_attack")?;
    if test.is_empty() {
        return Err(Error::Empty("evaluation set".into()));
    }
    if let Some(s) = surrogate {
        if s.input_dim() != model.input_dim() || s.class_count() != model.class_count() {
            return Err(Error::Shape("surrogate and target models differ in shape".into()));
        }
    }
    let ev = &suite.evaluators;
    let single = AttackConfig {
        restarts: 1,
        ..suite.attack.clone()
    };
    let multi = AttackConfig {
        restarts: ev.restarts,
        ..suite.attack.clone()
    };
    let long = AttackConfig {
        iterations: ev.long_iterations,
        restarts: 1,
        ..suite.attack.clone()
    };
    let mut hits = [0usize; 6];
    for ex in test.examples() {
        let (x, y) = (&ex.features[..], ex.label);
        if model.predict(x) != y {
            continue;
        }
        hits[0] += 1;
        let s = |k: u64| rng::stream(seed, &[rng::EVAL, k, ex.id]);
        hits[1] += usize::from(!attacks::pgd(model, x, y, &single, &mut s(0)).success);
        if ev.long_iterations > 0 {
            hits[2] += usize::from(!attacks::pgd(model, x, y, &long, &mut s(1)).success);
        }
        hits[3] += usize::from(!attacks::pgd_multi_restart(model, x, y, &multi, &mut s(0)).success);
        hits[4] += usize::from(
            !attacks::square_patch_attack(model, x, y, suite.attack.epsilon, ev.square_queries, &mut s(2)).success,
        );
        if let Some(sur) = surrogate {
            hits[5] += usize::from(!attacks::transfer_attack(sur, model, x, y, &multi, &mut s(3))?.success);
        }
    }
    let n = test.len() as f64;
    let acc = |h: usize| h as f64 / n;
    let multi_restart = acc(hits[3]);
    let square = acc(hits[4]);
    Ok(EvalTable {
        seed,
        size: test.len(),
        test_digest: dataset_digest(test),
        clean: acc(hits[0]),
        pgd: acc(hits[1]),
        pgd_long: (ev.long_iterations > 0).then(|| acc(hits[2])),
        multi_restart,
        square,
        transfer: surrogate.map(|_| acc(hits[5])),
        strong: multi_restart.min(square),
    })
}
