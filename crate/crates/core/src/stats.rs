//! Rank statistics and seed aggregation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

/// Ranks `1..=n` in ascending order of `values`; ties go to the lower index
/// first, so the result is always a permutation.
pub fn ordinal_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = (r + 1) as f64;
    }
    ranks
}

fn spearman_of_permutations(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Spearman's ρ: both inputs are re-ranked with [`ordinal_ranks`] and
/// compared with `1 - 6 Σ d² / (n (n² - 1))`.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("spearman inputs have lengths {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument("spearman needs at least two observations".into()));
    }
    Ok(spearman_of_permutations(&ordinal_ranks(a), &ordinal_ranks(b)))
}

/// Two-sided permutation test for Spearman's ρ. Returns the plus-one
/// smoothed fraction of shuffles whose `|ρ|` reaches the observed `|ρ|`.
pub fn permutation_test(x: &[f64], y: &[f64], shuffles: usize, seed: u64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("permutation test lengths {} and {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument("permutation test needs at least three observations".into()));
    }
    if shuffles == 0 {
        return Err(Error::InvalidArgument("permutation test needs at least one shuffle".into()));
    }
    let rx = ordinal_ranks(x);
    let mut ry = ordinal_ranks(y);
    let observed = spearman_of_permutations(&rx, &ry).abs();
    let mut r = rng::stream(seed, &[rng::PERMUTATION]);
    let mut hits = 0usize;
    for _ in 0..shuffles {
        ry.shuffle(&mut r);
        // a hair of slack so exact ties with the observed value count
        if spearman_of_permutations(&rx, &ry).abs() >= observed - 1e-12 {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (shuffles + 1) as f64)
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub values: Vec<f64>,
    pub mean: f64,
    /// `n - 1` denominator; 0 for a single value.
    pub stddev: f64,
    pub n: usize,
}

pub fn aggregate(values: &[f64]) -> Result<SeedAggregate> {
    if values.is_empty() {
        return Err(Error::Empty("aggregate of zero values".into()));
    }
    let n = values.len();
    // sort first so the result does not depend on input order
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let stddev = if n == 1 {
        0.0
    } else {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(SeedAggregate {
        values: values.to_vec(),
        mean,
        stddev,
        n,
    })
}
