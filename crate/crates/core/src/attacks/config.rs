use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// ℓ∞ adversary parameters, in the same normalised units as the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    pub epsilon: f64,
    pub step_size: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub random_start: bool,
    pub target_class: Option<usize>,
}

impl Default for AttackConfig {
    /// Desk-scale PGD-10: radius 0.1, step 0.025, random start.
    fn default() -> Self {
        Self::desk(10)
    }
}

impl AttackConfig {
    /// Desk-scale PGD with radius 0.1 and step 0.025.
    pub fn desk(iterations: usize) -> Self {
        Self {
            epsilon: 0.1,
            step_size: 0.025,
            iterations,
            restarts: 1,
            random_start: true,
            target_class: None,
        }
    }

    /// The CIFAR protocol: PGD-10 with ε = 8/255 and step 2/255.
    pub fn full_scale() -> Self {
        Self {
            epsilon: 8.0 / 255.0,
            step_size: 2.0 / 255.0,
            ..Self::desk(10)
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let f = |name: &str| format!("{prefix}.{name}");
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config(f("epsilon"), "must lie in [0, 1]"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::config(f("step_size"), "must be positive"));
        }
        if self.epsilon > 0.0 && self.step_size > 2.0 * self.epsilon {
            return Err(Error::config(f("step_size"), "must not exceed 2 * epsilon"));
        }
        if self.iterations == 0 {
            return Err(Error::config(f("iterations"), "must be positive"));
        }
        if self.restarts == 0 {
            return Err(Error::config(f("restarts"), "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub adversarial: Vec<f64>,
    /// Untargeted: prediction differs from the label. Targeted: prediction
    /// equals the target.
    pub success: bool,
    /// First iteration at which the running iterate fooled the model; 0 iff
    /// the clean input already does, the iteration budget if never.
    pub kappa: usize,
    /// Attack objective at `adversarial`.
    pub loss: f64,
}

impl AttackOutcome {
    /// Lexicographic (success, loss) order; ties keep `self`.
    pub(crate) fn beats(&self, other: &AttackOutcome) -> bool {
        (self.success && !other.success) || (self.success == other.success && self.loss > other.loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_is_pgd10_at_8_over_255() {
        let c = AttackConfig::full_scale();
        assert_eq!(c.iterations, 10);
        assert_eq!(c.epsilon, 8.0 / 255.0);
        assert_eq!(c.step_size, 2.0 / 255.0);
        c.validate("attack").unwrap();
        assert_eq!(AttackConfig::default(), AttackConfig::desk(10));
    }

    #[test]
    fn validation_names_fields() {
        let c = AttackConfig {
            step_size: 1.0,
            ..AttackConfig::default()
        };
        let e = c.validate("eval_attack").unwrap_err().to_string();
        assert!(e.contains("eval_attack.step_size"), "{e}");
        let c = AttackConfig {
            epsilon: 1.5,
            ..AttackConfig::default()
        };
        assert!(c.validate("a").is_err());
    }
}
