use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::rng;
use crate::{Error, Result};

/// Affine layer `y = W x + b`, with `W` row-major `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// Glorot-uniform weights, zero bias.
    fn glorot(in_dim: usize, out_dim: usize, rng: &mut rng::Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            bias: vec![0.0; out_dim],
        }
    }

    #[inline]
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.in_dim).zip(&self.bias))
        {
            *o = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

/// Dense ReLU network producing raw logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Dense>,
}

/// Per-layer activations of one forward pass. `acts[0]` is the input,
/// `acts[l + 1]` the output of layer `l` (post-ReLU except for the logits).
#[derive(Debug, Clone, Default)]
pub struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.acts.last().map_or(&[], Vec::as_slice)
    }
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|v| *v *= s);
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl Network {
    /// MLP with the given hidden widths, Glorot-initialised from `seed`.
    pub fn new(input_dim: usize, hidden: &[usize], class_count: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::config("model.input_dim", "must be positive"));
        }
        if class_count < 2 {
            return Err(Error::config("model.class_count", "must be at least 2"));
        }
        if let Some(i) = hidden.iter().position(|&w| w == 0) {
            return Err(Error::config(format!("model.hidden[{i}]"), "must be positive"));
        }
        let mut rng = rng::stream(seed, &[rng::INIT]);
        let dims: Vec<usize> = std::iter::once(input_dim)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(class_count))
            .collect();
        let layers = dims
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], &mut rng))
            .collect();
        Ok(Self { layers })
    }

    /// Builds a network from explicit layers, checking that dimensions chain.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::Shape("network needs at least one layer".into()));
        };
        if last.out_dim < 2 {
            return Err(Error::config("model.class_count", "must be at least 2"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::Shape(format!("layer {i} has a zero dimension")));
            }
            if l.weights.len() != l.in_dim * l.out_dim {
                return Err(Error::LayerDim {
                    layer: i,
                    expected: l.in_dim * l.out_dim,
                    actual: l.weights.len(),
                });
            }
            if l.bias.len() != l.out_dim {
                return Err(Error::LayerDim {
                    layer: i,
                    expected: l.out_dim,
                    actual: l.bias.len(),
                });
            }
            if i > 0 && layers[i - 1].out_dim != l.in_dim {
                return Err(Error::LayerDim {
                    layer: i,
                    expected: layers[i - 1].out_dim,
                    actual: l.in_dim,
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn class_count(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Layer widths from input to logits.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    /// Batched forward pass: one logit row per input row.
    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_input(batch.cols())?;
        let mut out = Matrix::zeros(batch.rows(), self.class_count());
        let mut trace = Trace::default();
        for (i, x) in batch.iter_rows().enumerate() {
            self.forward_trace(x, &mut trace);
            out.row_mut(i).copy_from_slice(trace.logits());
        }
        Ok(out)
    }

    /// Logits for a single input. Panics if `x` has the wrong length.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut trace = Trace::default();
        self.forward_trace(x, &mut trace);
        trace.acts.pop().unwrap_or_default()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        super::argmax(&self.logits(x))
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::LayerDim {
                layer: 0,
                expected: self.input_dim(),
                actual: cols,
            });
        }
        Ok(())
    }

    /// Forward pass recording every activation into `trace`, reusing its
    /// buffers.
    pub fn forward_trace(&self, x: &[f64], trace: &mut Trace) {
        assert_eq!(x.len(), self.input_dim(), "input length");
        let n = self.layers.len();
        trace.acts.resize_with(n + 1, Vec::new);
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = trace.acts.split_at_mut(l + 1);
            let out = &mut tail[0];
            out.resize(layer.out_dim, 0.0);
            layer.apply(&head[l], out);
            if l + 1 < n {
                for v in out.iter_mut() {
                    // ReLU; the derivative at exactly 0 is taken as 0
                    if *v <= 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
    }

    /// Reverse pass for one traced input. Adds parameter gradients into
    /// `grads` when given and returns the input gradient when `want_input`.
    pub fn backward_trace(
        &self,
        trace: &Trace,
        upstream: &[f64],
        mut grads: Option<&mut Gradients>,
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let mut delta = upstream.to_vec();
        let mut next = Vec::new();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.acts[l];
            if let Some(g) = grads.as_deref_mut() {
                let gl = &mut g.layers[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gl.bias[o] += d;
                    let row = &mut gl.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (w, &a) in row.iter_mut().zip(input) {
                        *w += d * a;
                    }
                }
            }
            if l == 0 && !want_input {
                return None;
            }
            next.clear();
            next.resize(layer.in_dim, 0.0);
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (n, &w) in next.iter_mut().zip(row) {
                    *n += d * w;
                }
            }
            if l > 0 {
                for (n, &a) in next.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *n = 0.0;
                    }
                }
            }
            std::mem::swap(&mut delta, &mut next);
        }
        Some(delta)
    }

    /// Batched backward pass: `upstream` holds the loss gradient at the
    /// logits, one row per input. Returns summed parameter gradients and
    /// per-input gradients.
    pub fn backward(&self, batch: &Matrix, upstream: &Matrix) -> Result<(Gradients, Matrix)> {
        self.check_input(batch.cols())?;
        if upstream.rows() != batch.rows() || upstream.cols() != self.class_count() {
            return Err(Error::LayerDim {
                layer: self.layers.len() - 1,
                expected: self.class_count(),
                actual: upstream.cols(),
            });
        }
        let mut grads = Gradients::zeros_like(self);
        let mut input_grads = Matrix::zeros(batch.rows(), batch.cols());
        let mut trace = Trace::default();
        for (i, x) in batch.iter_rows().enumerate() {
            self.forward_trace(x, &mut trace);
            let gx = self
                .backward_trace(&trace, upstream.row(i), Some(&mut grads), true)
                .expect("input gradient requested");
            input_grads.row_mut(i).copy_from_slice(&gx);
        }
        Ok((grads, input_grads))
    }
}
