/// Floor applied inside every logarithm so saturated softmax outputs keep
/// losses finite.
pub const LOG_FLOOR: f64 = 1e-300;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

#[inline]
fn floored_ln(p: f64) -> f64 {
    p.max(LOG_FLOOR).ln()
}

/// `-ln probs[label]`, with the log floored.
pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -floored_ln(probs[label])
}

/// `-Σ target[c] ln probs[c]`. The first argument is the target distribution.
pub fn soft_cross_entropy(target: &[f64], probs: &[f64]) -> f64 {
    -target
        .iter()
        .zip(probs)
        .map(|(&t, &p)| if t == 0.0 { 0.0 } else { t * floored_ln(p) })
        .sum::<f64>()
}

/// Gradient of `cross_entropy(softmax(z), label)` with respect to `z`.
pub fn cross_entropy_logit_grad(probs: &[f64], label: usize) -> Vec<f64> {
    let mut g = probs.to_vec();
    g[label] -= 1.0;
    g
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
