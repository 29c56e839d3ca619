//! Training objectives: standard, PGD-AT, TRADES, MART and GAIRAT.
//!
//! Each adversarial objective is split into an inner maximisation that
//! crafts one perturbed input per example ([`craft`]) and an outer loss
//! evaluated on those frozen inputs (`*_outer`). The `*_loss` functions
//! compose the two. All losses are means over the batch, and the returned
//! gradients are exact for the outer loss with the perturbations held fixed.

use serde::{Deserialize, Serialize};

use crate::attacks::{self, AttackConfig, DivergenceLoss, UntargetedLoss};
use crate::nn::{
    cross_entropy, cross_entropy_logit_grad, soft_cross_entropy, softmax, Gradients, Matrix,
    Network, Trace, LOG_FLOOR,
};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Standard,
    PgdAt,
    Trades,
    Mart,
    Gairat,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Standard => "standard",
            ObjectiveKind::PgdAt => "pgd_at",
            ObjectiveKind::Trades => "trades",
            ObjectiveKind::Mart => "mart",
            ObjectiveKind::Gairat => "gairat",
        }
    }

    pub fn is_adversarial(self) -> bool {
        self != ObjectiveKind::Standard
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ObjectiveKind::Standard,
            ObjectiveKind::PgdAt,
            ObjectiveKind::Trades,
            ObjectiveKind::Mart,
            ObjectiveKind::Gairat,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown objective `{s}`")))
    }
}

impl std::fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    /// Weight on the TRADES/MART divergence term (the conventional 6.0).
    pub lambda: f64,
    /// Shift inside GAIRAT's tanh weighting.
    pub gairat_lambda: f64,
    /// Inner-maximisation adversary.
    pub attack: AttackConfig,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            kind: ObjectiveKind::PgdAt,
            lambda: 6.0,
            gairat_lambda: 0.0,
            attack: AttackConfig::desk(7),
        }
    }
}

impl ObjectiveConfig {
    pub fn with_kind(mut self, kind: ObjectiveKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("{prefix}.lambda"), "must be nonnegative"));
        }
        if !self.gairat_lambda.is_finite() {
            return Err(Error::config(format!("{prefix}.gairat_lambda"), "must be finite"));
        }
        if self.kind.is_adversarial() {
            self.attack.validate(&format!("{prefix}.attack"))?;
        }
        Ok(())
    }
}

/// Rows of inputs with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: Matrix,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn new(inputs: Matrix, labels: Vec<usize>) -> Result<Self> {
        if inputs.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} inputs but {} labels",
                inputs.rows(),
                labels.len()
            )));
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub loss: f64,
    pub grads: Gradients,
    /// Per-example κ from the inner attack (empty for objectives that do
    /// not run a cross-entropy attack).
    pub kappas: Vec<usize>,
    /// Whether each example was still classified correctly at its
    /// training perturbation (empty for standard training).
    pub robust_correct: Vec<bool>,
}

/// Output of the inner maximisation.
#[derive(Debug, Clone)]
pub struct Perturbed {
    pub adversarial: Matrix,
    pub kappas: Vec<usize>,
    pub robust_correct: Vec<bool>,
}

/// Inner maximisation for `kind`. TRADES maximises the divergence from the
/// clean prediction; every other adversarial objective runs cross-entropy
/// PGD. Example `i` draws from stream `(seed, i)`.
pub fn craft(net: &Network, batch: &Batch, kind: ObjectiveKind, attack: &AttackConfig, seed: u64) -> Perturbed {
    let n = batch.len();
    let mut adversarial = Matrix::zeros(n, batch.inputs.cols());
    let mut kappas = Vec::with_capacity(n);
    let mut robust_correct = Vec::with_capacity(n);
    for (i, (x, &y)) in batch.inputs.iter_rows().zip(&batch.labels).enumerate() {
        let mut r = rng::stream(seed, &[i as u64]);
        let out = match kind {
            ObjectiveKind::Trades => {
                let loss = DivergenceLoss {
                    clean_probs: softmax(&net.logits(x)),
                };
                let out = attacks::pgd_with_loss(net, x, &loss, attack, &mut r);
                let fooled = attacks::misclassified(net, &out.adversarial, y);
                robust_correct.push(!fooled);
                out
            }
            _ => {
                let out = attacks::pgd_with_loss(net, x, &UntargetedLoss { label: y }, attack, &mut r);
                kappas.push(out.kappa);
                robust_correct.push(!out.success);
                out
            }
        };
        adversarial.row_mut(i).copy_from_slice(&out.adversarial);
    }
    Perturbed {
        adversarial,
        kappas,
        robust_correct,
    }
}

/// Weighted mean cross-entropy on `inputs`; `weights = None` means all 1.
fn weighted_ce(net: &Network, inputs: &Matrix, labels: &[usize], weights: Option<&[f64]>) -> (f64, Gradients) {
    let n = labels.len();
    let mut grads = Gradients::zeros_like(net);
    let mut trace = Trace::default();
    let mut total = 0.0;
    for (i, (x, &y)) in inputs.iter_rows().zip(labels).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        net.forward_trace(x, &mut trace);
        let p = softmax(trace.logits());
        total += w * cross_entropy(&p, y);
        let mut g = cross_entropy_logit_grad(&p, y);
        g.iter_mut().for_each(|v| *v *= w / n as f64);
        net.backward_trace(&trace, &g, Some(&mut grads), false);
    }
    (total / n as f64, grads)
}

fn ensure_nonempty(batch: &Batch) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch".into()));
    }
    Ok(())
}

/// Mean clean cross-entropy.
pub fn standard_loss(net: &Network, batch: &Batch) -> Result<BatchLoss> {
    ensure_nonempty(batch)?;
    let (loss, grads) = weighted_ce(net, &batch.inputs, &batch.labels, None);
    Ok(BatchLoss {
        loss,
        grads,
        kappas: Vec::new(),
        robust_correct: Vec::new(),
    })
}

/// Mean cross-entropy on fixed adversarial inputs.
pub fn pgd_at_outer(net: &Network, batch: &Batch, adversarial: &Matrix) -> (f64, Gradients) {
    weighted_ce(net, adversarial, &batch.labels, None)
}

/// `CE(f(x), y) + λ · softCE(f(x), f(x + δ))`, differentiated through both
/// the clean and the perturbed branch.
pub fn trades_outer(net: &Network, batch: &Batch, adversarial: &Matrix, lambda: f64) -> (f64, Gradients) {
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros_like(net);
    let mut clean = Trace::default();
    let mut adv = Trace::default();
    let mut total = 0.0;
    for ((x, xa), &y) in batch.inputs.iter_rows().zip(adversarial.iter_rows()).zip(&batch.labels) {
        net.forward_trace(x, &mut clean);
        net.forward_trace(xa, &mut adv);
        let p = softmax(clean.logits());
        let q = softmax(adv.logits());
        let div = soft_cross_entropy(&p, &q);
        total += cross_entropy(&p, y) + lambda * div;

        let mut g_clean = cross_entropy_logit_grad(&p, y);
        let jt = divergence_target_grad(&p, &q);
        for (g, j) in g_clean.iter_mut().zip(&jt) {
            *g = (*g + lambda * j) / n;
        }
        let g_adv: Vec<f64> = q.iter().zip(&p).map(|(q, p)| lambda * (q - p) / n).collect();
        net.backward_trace(&clean, &g_clean, Some(&mut grads), false);
        net.backward_trace(&adv, &g_adv, Some(&mut grads), false);
    }
    (total / n, grads)
}

/// Gradient of `softCE(softmax(z), q)` with respect to the clean logits `z`:
/// `p_k (g_k - Σ_c p_c g_c)` with `g_c = -ln q_c`.
fn divergence_target_grad(p: &[f64], q: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = q.iter().map(|&v| -v.max(LOG_FLOOR).ln()).collect();
    let mean: f64 = p.iter().zip(&g).map(|(p, g)| p * g).sum();
    p.iter().zip(&g).map(|(p, g)| p * (g - mean)).collect()
}

/// `CE(f(x + δ), y) + λ · softCE(f(x), f(x + δ)) · (1 - f_y(x))`.
pub fn mart_outer(net: &Network, batch: &Batch, adversarial: &Matrix, lambda: f64) -> (f64, Gradients) {
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros_like(net);
    let mut clean = Trace::default();
    let mut adv = Trace::default();
    let mut total = 0.0;
    for ((x, xa), &y) in batch.inputs.iter_rows().zip(adversarial.iter_rows()).zip(&batch.labels) {
        net.forward_trace(x, &mut clean);
        net.forward_trace(xa, &mut adv);
        let p = softmax(clean.logits());
        let q = softmax(adv.logits());
        let div = soft_cross_entropy(&p, &q);
        let miss = 1.0 - p[y];
        total += cross_entropy(&q, y) + lambda * div * miss;

        let mut g_adv = cross_entropy_logit_grad(&q, y);
        for ((g, q), p) in g_adv.iter_mut().zip(&q).zip(&p) {
            *g = (*g + lambda * miss * (q - p)) / n;
        }
        let jt = divergence_target_grad(&p, &q);
        let g_clean: Vec<f64> = (0..p.len())
            .map(|k| {
                let dpy = p[y] * (if k == y { 1.0 } else { 0.0 } - p[k]);
                lambda * (miss * jt[k] - div * dpy) / n
            })
            .collect();
        net.backward_trace(&adv, &g_adv, Some(&mut grads), false);
        net.backward_trace(&clean, &g_clean, Some(&mut grads), false);
    }
    (total / n, grads)
}

/// `mean_i w_i · CE(f(x_i + δ_i), y_i)` for precomputed weights.
pub fn gairat_outer(net: &Network, batch: &Batch, adversarial: &Matrix, weights: &[f64]) -> (f64, Gradients) {
    weighted_ce(net, adversarial, &batch.labels, Some(weights))
}

/// GAIRAT weights `(1 + tanh(λ + 5 (1 - 2 κ / K))) / 2`, divided by their
/// batch mean.
pub fn gairat_weights(kappas: &[usize], k_max: usize, gairat_lambda: f64) -> Result<Vec<f64>> {
    if kappas.is_empty() {
        return Err(Error::Empty("GAIRAT weights need at least one κ".into()));
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("GAIRAT needs K > 0".into()));
    }
    if let Some(&k) = kappas.iter().find(|&&k| k > k_max) {
        return Err(Error::InvalidArgument(format!("κ = {k} exceeds K = {k_max}")));
    }
    let raw: Vec<f64> = kappas.iter().map(|&k| gairat_raw_weight(k, k_max, gairat_lambda)).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    Ok(raw.iter().map(|w| w / mean).collect())
}

pub fn gairat_raw_weight(kappa: usize, k_max: usize, gairat_lambda: f64) -> f64 {
    let t = gairat_lambda + 5.0 * (1.0 - 2.0 * kappa as f64 / k_max as f64);
    (1.0 + t.tanh()) / 2.0
}

/// PGD adversarial training loss, plus κ for every example.
pub fn pgd_at_loss(net: &Network, batch: &Batch, cfg: &ObjectiveConfig, seed: u64) -> Result<BatchLoss> {
    ensure_nonempty(batch)?;
    let pert = craft(net, batch, ObjectiveKind::PgdAt, &cfg.attack, seed);
    let (loss, grads) = pgd_at_outer(net, batch, &pert.adversarial);
    Ok(BatchLoss {
        loss,
        grads,
        kappas: pert.kappas,
        robust_correct: pert.robust_correct,
    })
}

pub fn trades_loss(net: &Network, batch: &Batch, cfg: &ObjectiveConfig, seed: u64) -> Result<BatchLoss> {
    ensure_nonempty(batch)?;
    let pert = craft(net, batch, ObjectiveKind::Trades, &cfg.attack, seed);
    let (loss, grads) = trades_outer(net, batch, &pert.adversarial, cfg.lambda);
    Ok(BatchLoss {
        loss,
        grads,
        kappas: pert.kappas,
        robust_correct: pert.robust_correct,
    })
}

pub fn mart_loss(net: &Network, batch: &Batch, cfg: &ObjectiveConfig, seed: u64) -> Result<BatchLoss> {
    ensure_nonempty(batch)?;
    let pert = craft(net, batch, ObjectiveKind::Mart, &cfg.attack, seed);
    let (loss, grads) = mart_outer(net, batch, &pert.adversarial, cfg.lambda);
    Ok(BatchLoss {
        loss,
        grads,
        kappas: pert.kappas,
        robust_correct: pert.robust_correct,
    })
}

pub fn gairat_loss(net: &Network, batch: &Batch, cfg: &ObjectiveConfig, seed: u64) -> Result<BatchLoss> {
    ensure_nonempty(batch)?;
    let pert = craft(net, batch, ObjectiveKind::Gairat, &cfg.attack, seed);
    let weights = gairat_weights(&pert.kappas, cfg.attack.iterations, cfg.gairat_lambda)?;
    let (loss, grads) = gairat_outer(net, batch, &pert.adversarial, &weights);
    Ok(BatchLoss {
        loss,
        grads,
        kappas: pert.kappas,
        robust_correct: pert.robust_correct,
    })
}

/// Dispatches on `cfg.kind`.
pub fn objective_loss(net: &Network, batch: &Batch, cfg: &ObjectiveConfig, seed: u64) -> Result<BatchLoss> {
    match cfg.kind {
        ObjectiveKind::Standard => standard_loss(net, batch),
        ObjectiveKind::PgdAt => pgd_at_loss(net, batch, cfg, seed),
        ObjectiveKind::Trades => trades_loss(net, batch, cfg, seed),
        ObjectiveKind::Mart => mart_loss(net, batch, cfg, seed),
        ObjectiveKind::Gairat => gairat_loss(net, batch, cfg, seed),
    }
}
