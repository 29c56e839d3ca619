use serde::{Deserialize, Serialize};

use super::{Gradients, Network};
use crate::{Error, Result};

/// Optimisation schedule for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub base_lr: f64,
    pub lr_decay_epochs: Vec<usize>,
    pub lr_decay_factor: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    /// Desk-scale schedule: 40 epochs with the decay points rescaled from
    /// the 160-epoch protocol, batches of 16.
    fn default() -> Self {
        Self {
            epochs: 40,
            lr_decay_epochs: vec![20, 30],
            batch_size: 16,
            ..Self::full_scale()
        }
    }
}

impl TrainConfig {
    /// The 160-epoch CIFAR protocol: lr 0.1, /10 at 80 and 120, momentum
    /// 0.9, weight decay 5e-4.
    pub fn full_scale() -> Self {
        Self {
            epochs: 160,
            base_lr: 0.1,
            lr_decay_epochs: vec![80, 120],
            lr_decay_factor: 10.0,
            momentum: 0.9,
            weight_decay: 5e-4,
            batch_size: 128,
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let f = |name: &str| format!("{prefix}.{name}");
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::config(f("base_lr"), "must be positive"));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor.is_finite()) {
            return Err(Error::config(f("lr_decay_factor"), "must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(f("momentum"), "must lie in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::config(f("weight_decay"), "must be nonnegative"));
        }
        if self.batch_size == 0 {
            return Err(Error::config(f("batch_size"), "must be positive"));
        }
        if self.lr_decay_epochs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(f("lr_decay_epochs"), "must be strictly increasing"));
        }
        if self.lr_decay_epochs.iter().any(|&e| e >= self.epochs) && self.epochs > 0 {
            return Err(Error::config(f("lr_decay_epochs"), "entries must be < epochs"));
        }
        Ok(())
    }

    /// Step schedule: every decay epoch at or before `epoch` divides the rate.
    pub fn lr(&self, epoch: usize) -> f64 {
        let decays = self.lr_decay_epochs.iter().filter(|&&e| e <= epoch).count();
        self.base_lr / self.lr_decay_factor.powi(decays as i32)
    }
}

/// SGD with heavy-ball momentum and L2 weight decay.
#[derive(Debug, Clone)]
pub struct Sgd {
    velocity: Gradients,
}

impl Sgd {
    pub fn new(net: &Network) -> Self {
        Self {
            velocity: Gradients::zeros_like(net),
        }
    }

    /// `v <- momentum v + (g + wd p)`, `p <- p - lr(epoch) v`.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients, epoch: usize, cfg: &TrainConfig) {
        let lr = cfg.lr(epoch);
        for ((layer, g), v) in net
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.velocity.layers)
        {
            let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
            let gs = g.weights.iter().chain(&g.bias);
            let vs = v.weights.iter_mut().chain(v.bias.iter_mut());
            for ((p, &g), v) in params.zip(gs).zip(vs) {
                *v = cfg.momentum * *v + (g + cfg.weight_decay * *p);
                *p -= lr * *v;
            }
        }
    }
}
