use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Example};
use crate::rng;
use crate::{Error, Result};

/// Gaussian class clusters in `[0, 1]^dim`, with a fraction of every class
/// drawn around the midpoint towards another class instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub dim: usize,
    /// Per-class means. Empty means "use [`SyntheticSpec::default_means`]".
    pub means: Vec<Vec<f64>>,
    /// Shared isotropic standard deviation before clamping.
    pub spread: f64,
    pub ambiguous_fraction: f64,
    pub n_per_class: usize,
    /// Set from the run seed, never read from config files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 3,
            dim: 16,
            means: Vec::new(),
            spread: 0.1,
            ambiguous_fraction: 0.2,
            n_per_class: 600,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// Class `c` sits at 0.65 on the coordinates `j` with `j % classes == c`
    /// and at 0.35 elsewhere.
    pub fn default_means(classes: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..classes)
            .map(|c| (0..dim).map(|j| if j % classes == c { 0.65 } else { 0.35 }).collect())
            .collect()
    }

    pub fn resolved_means(&self) -> Vec<Vec<f64>> {
        if self.means.is_empty() {
            Self::default_means(self.classes, self.dim)
        } else {
            self.means.clone()
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let f = |name: &str| format!("{prefix}.{name}");
        if self.classes < 2 {
            return Err(Error::config(f("classes"), "must be at least 2"));
        }
        if self.dim < 2 {
            return Err(Error::config(f("dim"), "must be at least 2"));
        }
        if self.dim < self.classes && self.means.is_empty() {
            return Err(Error::config(f("dim"), "default means need dim >= classes"));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(Error::config(f("spread"), "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.ambiguous_fraction) {
            return Err(Error::config(f("ambiguous_fraction"), "must lie in [0, 1]"));
        }
        if self.n_per_class == 0 {
            return Err(Error::config(f("n_per_class"), "must be positive"));
        }
        if !self.means.is_empty() {
            if self.means.len() != self.classes {
                return Err(Error::config(f("means"), "need one mean per class"));
            }
            for (c, m) in self.means.iter().enumerate() {
                if m.len() != self.dim {
                    return Err(Error::config(format!("{prefix}.means[{c}]"), "wrong length"));
                }
                if m.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::config(format!("{prefix}.means[{c}]"), "must lie in [0, 1]"));
                }
            }
            for a in 0..self.classes {
                for b in a + 1..self.classes {
                    if self.means[a] == self.means[b] {
                        return Err(Error::config(f("means"), format!("classes {a} and {b} share a mean")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Posterior mass on classes other than `label` under equal-prior isotropic
/// Gaussians centred on `means` with standard deviation `spread`.
pub fn ambiguity_oracle(x: &[f64], label: usize, means: &[Vec<f64>], spread: f64) -> f64 {
    let logs: Vec<f64> = means
        .iter()
        .map(|m| -m.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * spread * spread))
        .collect();
    let post = crate::nn::softmax(&logs);
    (1.0 - post[label]).clamp(0.0, 1.0)
}

/// Draws `n_per_class` examples per class. Ids run from 0 in class-major
/// order. Returns the dataset and the per-example ambiguity (same order).
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, Vec<f64>)> {
    spec.validate("data")?;
    let means = spec.resolved_means();
    let mut r = rng::stream(spec.seed, &[rng::DATA]);
    let noise = Normal::new(0.0, spec.spread).expect("validated spread");
    let n_amb = (spec.ambiguous_fraction * spec.n_per_class as f64).round() as usize;
    let mut examples = Vec::with_capacity(spec.classes * spec.n_per_class);
    let mut ambiguity = Vec::with_capacity(examples.capacity());
    for c in 0..spec.classes {
        for i in 0..spec.n_per_class {
            let centre: Vec<f64> = if i < n_amb {
                let mut other = r.gen_range(0..spec.classes - 1);
                if other >= c {
                    other += 1;
                }
                means[c].iter().zip(&means[other]).map(|(a, b)| 0.5 * (a + b)).collect()
            } else {
                means[c].clone()
            };
            let features: Vec<f64> = centre
                .iter()
                .map(|m| (m + noise.sample(&mut r)).clamp(0.0, 1.0))
                .collect();
            ambiguity.push(ambiguity_oracle(&features, c, &means, spec.spread));
            examples.push(Example {
                id: examples.len() as u64,
                features,
                label: c,
            });
        }
    }
    Ok((Dataset::new(spec.dim, spec.classes, examples)?, ambiguity))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_counts_are_exact() {
        let spec = SyntheticSpec {
            n_per_class: 37,
            ..SyntheticSpec::default()
        };
        let (d, amb) = generate_synthetic(&spec).unwrap();
        assert_eq!(d.class_counts(), vec![37, 37, 37]);
        assert_eq!(amb.len(), d.len());
        assert!(amb.iter().all(|a| (0.0..=1.0).contains(a)));
    }

    #[test]
    fn separated_point_masses_are_unambiguous() {
        let spec = SyntheticSpec {
            spread: 1e-4,
            ambiguous_fraction: 0.0,
            n_per_class: 20,
            ..SyntheticSpec::default()
        };
        let (_, amb) = generate_synthetic(&spec).unwrap();
        assert!(amb.iter().all(|&a| a < 1e-12));
    }

    #[test]
    fn identical_means_are_maximally_ambiguous() {
        let means = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        for x in [[0.1, 0.9], [0.5, 0.5], [1.0, 0.0]] {
            assert!((ambiguity_oracle(&x, 0, &means, 0.1) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_means_fail_validation() {
        let spec = SyntheticSpec {
            classes: 2,
            dim: 2,
            means: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec {
            n_per_class: 10,
            seed: 5,
            ..SyntheticSpec::default()
        };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 6, ..spec.clone() };
        assert_ne!(generate_synthetic(&spec).unwrap().0, generate_synthetic(&other).unwrap().0);
    }

    #[test]
    fn ambiguity_tracks_distance_to_own_mean() {
        let spec = SyntheticSpec {
            n_per_class: 200,
            ..SyntheticSpec::default()
        };
        let (d, amb) = generate_synthetic(&spec).unwrap();
        let means = spec.resolved_means();
        let dist: Vec<f64> = d
            .examples()
            .iter()
            .map(|e| e.features.iter().zip(&means[e.label]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .collect();
        let rho = crate::stats::spearman(&amb, &dist).unwrap();
        assert!(rho > 0.0, "rho = {rho}");
    }
}
