//! ℓ∞-bounded adversaries.
//!
//! Every attack treats the clean input as a candidate and returns the best
//! visited point under the order "fools the model" first, then "higher
//! attack loss". Ties keep the earlier point. As a consequence an input the
//! model already gets wrong is always reported as a successful attack, so
//! robust accuracy never exceeds clean accuracy.

mod config;
mod gradient;
mod loss;
mod square;

pub use config::{AttackConfig, AttackOutcome};
pub use gradient::{fgsm, min_perturbation, pgd, pgd_multi_restart, pgd_with_loss, transfer_attack};
pub use loss::{AttackLoss, DivergenceLoss, TargetedLoss, UntargetedLoss};
pub use square::{margin, square_patch_attack};

use crate::nn::{Network, Trace};

/// Anything an attack can query. Gradient-free attacks only use
/// [`Classifier::logits`].
pub trait Classifier {
    fn input_dim(&self) -> usize;
    fn class_count(&self) -> usize;
    fn logits(&self, x: &[f64]) -> Vec<f64>;
    /// Logits at `x` together with the input gradient of the scalar whose
    /// logit gradient `upstream` returns.
    fn logits_and_input_grad(
        &self,
        x: &[f64],
        upstream: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    ) -> (Vec<f64>, Vec<f64>);
}

thread_local! {
    static TRACE: std::cell::RefCell<Trace> = std::cell::RefCell::new(Trace::default());
}

impl Classifier for Network {
    fn input_dim(&self) -> usize {
        Network::input_dim(self)
    }

    fn class_count(&self) -> usize {
        Network::class_count(self)
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        TRACE.with(|t| {
            let mut t = t.borrow_mut();
            self.forward_trace(x, &mut t);
            t.logits().to_vec()
        })
    }

    fn logits_and_input_grad(
        &self,
        x: &[f64],
        upstream: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    ) -> (Vec<f64>, Vec<f64>) {
        TRACE.with(|t| {
            let mut t = t.borrow_mut();
            self.forward_trace(x, &mut t);
            let logits = t.logits().to_vec();
            let up = upstream(&logits);
            let g = self
                .backward_trace(&t, &up, None, true)
                .expect("input gradient requested");
            (logits, g)
        })
    }
}

/// Whether the model misclassifies `x`.
pub fn misclassified<C: Classifier + ?Sized>(model: &C, x: &[f64], label: usize) -> bool {
    crate::nn::argmax(&model.logits(x)) != label
}
