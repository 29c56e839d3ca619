use rand::seq::SliceRandom;

use super::Dataset;
use crate::profiler::QualityRanking;
use crate::rng;
use crate::{Error, Result};

/// Per-class proportional train/test split. Both outputs keep the input
/// order.
pub fn stratified_split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument("test fraction must lie in (0, 1)".into()));
    }
    let mut r = rng::stream(seed, &[rng::SPLIT]);
    let mut is_test = vec![false; dataset.len()];
    for c in 0..dataset.classes() {
        let mut members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.examples()[i].label == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::InvalidArgument(format!("class {c} has fewer than 2 examples")));
        }
        let n_test = ((test_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        members.shuffle(&mut r);
        for &i in &members[..n_test] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| is_test[i]);
    Ok((dataset.select(&train), dataset.select(&test)))
}

/// Splits every class in two equal halves by quality rank. Returns
/// `(high_quality, low_quality)`; with an odd class count the median
/// example lands in the low half.
pub fn class_balanced_halves(dataset: &Dataset, ranking: &QualityRanking) -> Result<(Dataset, Dataset)> {
    let ranks = ranking.ranks_for(dataset)?;
    let mut in_high = vec![false; dataset.len()];
    for c in 0..dataset.classes() {
        let mut members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.examples()[i].label == c).collect();
        members.sort_by(|&a, &b| {
            ranks[a]
                .total_cmp(&ranks[b])
                .then(dataset.examples()[a].id.cmp(&dataset.examples()[b].id))
        });
        let n_low = members.len().div_ceil(2);
        for &i in &members[n_low..] {
            in_high[i] = true;
        }
    }
    let (high, low): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| in_high[i]);
    Ok((dataset.select(&high), dataset.select(&low)))
}
