use rand::Rng as _;

use super::{AttackConfig, AttackLoss, AttackOutcome, Classifier, TargetedLoss, UntargetedLoss};
use crate::rng::Rng;
use crate::{Error, Result};

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One signed-gradient step from `cur`, projected onto the ε-ball around
/// `x` and then clipped to the unit box.
#[inline]
fn step_into(cur: &mut [f64], x: &[f64], grad: &[f64], step: f64, eps: f64) {
    for ((c, &x0), &g) in cur.iter_mut().zip(x).zip(grad) {
        let delta = ((*c - x0) + step * sign(g)).clamp(-eps, eps);
        *c = (x0 + delta).clamp(0.0, 1.0);
    }
}

/// PGD maximising an arbitrary attack loss. Draws the random start (if any)
/// from `rng`.
pub fn pgd_with_loss<C: Classifier + ?Sized, L: AttackLoss>(
    model: &C,
    x: &[f64],
    loss: &L,
    cfg: &AttackConfig,
    rng: &mut Rng,
) -> AttackOutcome {
    let k_max = cfg.iterations;
    let eps = cfg.epsilon;

    let mut cur = x.to_vec();
    let mut best: Option<AttackOutcome> = None;
    let mut kappa = None;

    if cfg.random_start {
        let clean = model.logits(x);
        let fooled = loss.fooled(&clean);
        if fooled {
            kappa = Some(0);
        }
        best = Some(AttackOutcome {
            adversarial: x.to_vec(),
            success: fooled,
            kappa: 0,
            loss: loss.value(&clean),
        });
        if eps > 0.0 {
            for (c, &x0) in cur.iter_mut().zip(x) {
                *c = (x0 + rng.gen_range(-eps..=eps)).clamp(0.0, 1.0);
            }
        }
    }

    for k in 0..=k_max {
        let (logits, grad, value) = if k < k_max {
            let mut value = 0.0;
            let (logits, grad) = model.logits_and_input_grad(&cur, &mut |z| {
                let (v, g) = loss.value_grad(z);
                value = v;
                g
            });
            (logits, Some(grad), value)
        } else {
            let logits = model.logits(&cur);
            let v = loss.value(&logits);
            (logits, None, v)
        };
        let fooled = loss.fooled(&logits);
        if fooled && kappa.is_none() {
            // without a random start, k = 0 is the clean input itself
            kappa = Some(if cfg.random_start { k.max(1) } else { k });
        }
        let candidate = AttackOutcome {
            adversarial: cur.clone(),
            success: fooled,
            kappa: 0,
            loss: value,
        };
        match &best {
            Some(b) if !candidate.beats(b) => {}
            _ => best = Some(candidate),
        }
        match grad {
            Some(g) => step_into(&mut cur, x, &g, cfg.step_size, eps),
            None => break,
        }
    }

    let mut out = best.expect("at least one candidate");
    out.kappa = kappa.unwrap_or(k_max);
    out
}

/// Cross-entropy loss for either attack direction.
#[derive(Debug, Clone, Copy)]
enum CeLoss {
    Untargeted(UntargetedLoss),
    Targeted(TargetedLoss),
}

impl AttackLoss for CeLoss {
    fn value(&self, logits: &[f64]) -> f64 {
        match self {
            CeLoss::Untargeted(l) => l.value(logits),
            CeLoss::Targeted(l) => l.value(logits),
        }
    }

    fn value_grad(&self, logits: &[f64]) -> (f64, Vec<f64>) {
        match self {
            CeLoss::Untargeted(l) => l.value_grad(logits),
            CeLoss::Targeted(l) => l.value_grad(logits),
        }
    }

    fn fooled(&self, logits: &[f64]) -> bool {
        match self {
            CeLoss::Untargeted(l) => l.fooled(logits),
            CeLoss::Targeted(l) => l.fooled(logits),
        }
    }
}

fn attack_loss(label: usize, cfg: &AttackConfig) -> CeLoss {
    match cfg.target_class {
        Some(target) => CeLoss::Targeted(TargetedLoss { target }),
        None => CeLoss::Untargeted(UntargetedLoss { label }),
    }
}

/// Cross-entropy PGD; targeted when `cfg.target_class` is set.
pub fn pgd<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    label: usize,
    cfg: &AttackConfig,
    rng: &mut Rng,
) -> AttackOutcome {
    pgd_with_loss(model, x, &attack_loss(label, cfg), cfg, rng)
}

/// Worst case over `cfg.restarts` PGD runs drawn sequentially from `rng`, so
/// the first restart reproduces [`pgd`] with the same stream.
pub fn pgd_multi_restart<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    label: usize,
    cfg: &AttackConfig,
    rng: &mut Rng,
) -> AttackOutcome {
    let loss = attack_loss(label, cfg);
    let mut best = pgd_with_loss(model, x, &loss, cfg, rng);
    for _ in 1..cfg.restarts {
        let next = pgd_with_loss(model, x, &loss, cfg, rng);
        let kappa = best.kappa.min(next.kappa);
        if next.beats(&best) {
            best = next;
        }
        best.kappa = kappa;
    }
    best
}

/// Single signed-gradient step of radius `epsilon`, keeping the clean
/// input if the step neither fools the model nor raises the loss.
pub fn fgsm<C: Classifier + ?Sized>(model: &C, x: &[f64], label: usize, epsilon: f64) -> AttackOutcome {
    let loss = UntargetedLoss { label };
    let mut clean_loss = 0.0;
    let (clean_logits, grad) = model.logits_and_input_grad(x, &mut |z| {
        let (v, g) = loss.value_grad(z);
        clean_loss = v;
        g
    });
    let clean_fooled = loss.fooled(&clean_logits);
    let adv: Vec<f64> = x
        .iter()
        .zip(&grad)
        .map(|(&v, &g)| (v + epsilon * sign(g)).clamp(0.0, 1.0))
        .collect();
    let adv_logits = model.logits(&adv);
    let adv_fooled = loss.fooled(&adv_logits);
    let clean = AttackOutcome {
        adversarial: x.to_vec(),
        success: clean_fooled,
        kappa: 0,
        loss: clean_loss,
    };
    let stepped = AttackOutcome {
        adversarial: adv,
        success: adv_fooled,
        kappa: 0,
        loss: loss.value(&adv_logits),
    };
    let kappa = if clean_fooled { 0 } else { 1 };
    let mut out = if stepped.beats(&clean) { stepped } else { clean };
    out.kappa = kappa;
    out
}

/// Smallest radius on the grid `{step, 2 step, .., eps_max}` at which
/// I-FGSM (step size `step`, `ceil(ε / step)` iterations) changes the
/// prediction. Returns `(0, true)` for inputs that are already
/// misclassified and `(eps_max, false)` when no radius succeeds.
///
/// With `j` steps of size `step` the iterate can never leave the radius
/// `j step` ball, so the attack at radius `j step` is the first `j` steps of
/// one unprojected trajectory; the search walks that trajectory once.
pub fn min_perturbation<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    label: usize,
    step: f64,
    eps_max: f64,
) -> Result<(f64, bool)> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("min_perturbation step must be positive".into()));
    }
    if !(eps_max > 0.0 && eps_max <= 1.0) {
        return Err(Error::InvalidArgument("min_perturbation eps_max must lie in (0, 1]".into()));
    }
    let loss = UntargetedLoss { label };
    let grid = (eps_max / step + 1e-9).floor() as usize;
    let mut cur = x.to_vec();
    let (logits, mut grad) = model.logits_and_input_grad(&cur, &mut |z| loss.value_grad(z).1);
    if loss.fooled(&logits) {
        return Ok((0.0, true));
    }
    for j in 1..=grid {
        let radius = j as f64 * step;
        step_into(&mut cur, x, &grad, step, radius);
        let (logits, g) = model.logits_and_input_grad(&cur, &mut |z| loss.value_grad(z).1);
        if loss.fooled(&logits) {
            return Ok((radius, true));
        }
        grad = g;
    }
    Ok((eps_max, false))
}

/// Crafts the perturbation on `surrogate` with multi-restart PGD and scores
/// it on `target`. `kappa` is 0 iff the target misclassifies the clean input
/// and otherwise the surrogate's count (at least 1).
pub fn transfer_attack<S, T>(
    surrogate: &S,
    target: &T,
    x: &[f64],
    label: usize,
    cfg: &AttackConfig,
    rng: &mut Rng,
) -> Result<AttackOutcome>
where
    S: Classifier + ?Sized,
    T: Classifier + ?Sized,
{
    if surrogate.input_dim() != target.input_dim() || surrogate.class_count() != target.class_count() {
        return Err(Error::Shape(format!(
            "surrogate is {}->{}, target is {}->{}",
            surrogate.input_dim(),
            surrogate.class_count(),
            target.input_dim(),
            target.class_count()
        )));
    }
    let crafted = pgd_multi_restart(surrogate, x, label, cfg, rng);
    let loss = attack_loss(label, cfg);
    let clean_logits = target.logits(x);
    let clean = AttackOutcome {
        adversarial: x.to_vec(),
        success: loss.fooled(&clean_logits),
        kappa: 0,
        loss: loss.value(&clean_logits),
    };
    let adv_logits = target.logits(&crafted.adversarial);
    let transferred = AttackOutcome {
        adversarial: crafted.adversarial,
        success: loss.fooled(&adv_logits),
        kappa: crafted.kappa,
        loss: loss.value(&adv_logits),
    };
    let kappa = if clean.success { 0 } else { transferred.kappa.max(1) };
    let mut out = if transferred.beats(&clean) { transferred } else { clean };
    out.kappa = kappa;
    Ok(out)
}
