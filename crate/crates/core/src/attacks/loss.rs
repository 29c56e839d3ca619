use crate::nn::{argmax, cross_entropy, cross_entropy_logit_grad, soft_cross_entropy, softmax};

/// Scalar an attack maximises, as a function of the logits.
pub trait AttackLoss {
    fn value(&self, logits: &[f64]) -> f64;
    /// Value and gradient with respect to the logits.
    fn value_grad(&self, logits: &[f64]) -> (f64, Vec<f64>);
    fn fooled(&self, logits: &[f64]) -> bool;
}

/// Cross-entropy on the true label; fooled when the prediction changes.
#[derive(Debug, Clone, Copy)]
pub struct UntargetedLoss {
    pub label: usize,
}

impl AttackLoss for UntargetedLoss {
    fn value(&self, logits: &[f64]) -> f64 {
        cross_entropy(&softmax(logits), self.label)
    }

    fn value_grad(&self, logits: &[f64]) -> (f64, Vec<f64>) {
        let p = softmax(logits);
        (cross_entropy(&p, self.label), cross_entropy_logit_grad(&p, self.label))
    }

    fn fooled(&self, logits: &[f64]) -> bool {
        argmax(logits) != self.label
    }
}

/// Negated cross-entropy towards `target`, so maximising it pulls the input
/// towards the target class.
#[derive(Debug, Clone, Copy)]
pub struct TargetedLoss {
    pub target: usize,
}

impl AttackLoss for TargetedLoss {
    fn value(&self, logits: &[f64]) -> f64 {
        -cross_entropy(&softmax(logits), self.target)
    }

    fn value_grad(&self, logits: &[f64]) -> (f64, Vec<f64>) {
        let p = softmax(logits);
        let mut g = cross_entropy_logit_grad(&p, self.target);
        g.iter_mut().for_each(|v| *v = -*v);
        (-cross_entropy(&p, self.target), g)
    }

    fn fooled(&self, logits: &[f64]) -> bool {
        argmax(logits) == self.target
    }
}

/// Soft cross-entropy of the perturbed prediction against a fixed clean
/// distribution. Never reports "fooled", so selection is by value alone.
#[derive(Debug, Clone)]
pub struct DivergenceLoss {
    pub clean_probs: Vec<f64>,
}

impl AttackLoss for DivergenceLoss {
    fn value(&self, logits: &[f64]) -> f64 {
        soft_cross_entropy(&self.clean_probs, &softmax(logits))
    }

    fn value_grad(&self, logits: &[f64]) -> (f64, Vec<f64>) {
        let q = softmax(logits);
        let v = soft_cross_entropy(&self.clean_probs, &q);
        // d/dz' of -Σ p ln softmax(z')  =  q - p   (Σ p = 1)
        let g = q.iter().zip(&self.clean_probs).map(|(q, p)| q - p).collect();
        (v, g)
    }

    fn fooled(&self, _logits: &[f64]) -> bool {
        false
    }
}
