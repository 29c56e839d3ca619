//! Datasets: the synthetic generator, file formats, splitting and pruning.

mod io;
mod prune;
mod split;
mod synthetic;

pub use io::{load_ambiguity, load_delimited, read_delimited, save_ambiguity, save_delimited, write_delimited};
pub use prune::{
    load_manifest, remove_fraction, remove_fraction_classwise, save_manifest, Manifest, Pruned, RemovalMode,
};
pub use split::{class_balanced_halves, stratified_split};
pub use synthetic::{ambiguity_oracle, generate_synthetic, SyntheticSpec};

use std::collections::HashSet;

use crate::nn::Matrix;
use crate::objectives::Batch;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: u64,
    pub features: Vec<f64>,
    pub label: usize,
}

/// Examples with features in `[0, 1]^dim` and labels below `classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    classes: usize,
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(dim: usize, classes: usize, examples: Vec<Example>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dataset dimension must be positive".into()));
        }
        if classes < 2 {
            return Err(Error::InvalidArgument("dataset needs at least two classes".into()));
        }
        let mut seen = HashSet::with_capacity(examples.len());
        for e in &examples {
            if e.features.len() != dim {
                return Err(Error::Shape(format!(
                    "example {} has {} features, expected {dim}",
                    e.id,
                    e.features.len()
                )));
            }
            if e.label >= classes {
                return Err(Error::InvalidArgument(format!(
                    "example {} has label {} but there are {classes} classes",
                    e.id, e.label
                )));
            }
            if let Some(v) = e.features.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidArgument(format!(
                    "example {} has feature {v} outside [0, 1]",
                    e.id
                )));
            }
            if !seen.insert(e.id) {
                return Err(Error::InvalidArgument(format!("duplicate example id {}", e.id)));
            }
        }
        Ok(Self { dim, classes, examples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn ids(&self) -> Vec<u64> {
        self.examples.iter().map(|e| e.id).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }

    /// Same header, different examples. Callers only pass subsets of an
    /// already validated dataset.
    pub(crate) fn with_examples(&self, examples: Vec<Example>) -> Self {
        Self {
            dim: self.dim,
            classes: self.classes,
            examples,
        }
    }

    /// Subset by position, preserving the given order.
    pub fn select(&self, positions: &[usize]) -> Self {
        self.with_examples(positions.iter().map(|&i| self.examples[i].clone()).collect())
    }

    pub fn batch(&self, positions: &[usize]) -> Batch {
        let mut inputs = Matrix::zeros(positions.len(), self.dim);
        let mut labels = Vec::with_capacity(positions.len());
        for (r, &i) in positions.iter().enumerate() {
            inputs.row_mut(r).copy_from_slice(&self.examples[i].features);
            labels.push(self.examples[i].label);
        }
        Batch { inputs, labels }
    }

    pub fn full_batch(&self) -> Batch {
        self.batch(&(0..self.len()).collect::<Vec<_>>())
    }
}
