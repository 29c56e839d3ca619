//! Dense feedforward classifier with exact reverse-mode gradients.
//!
//! Layers are affine maps with ReLU between them and raw logits at the
//! output. Everything is `f64`.

mod checkpoint;
mod loss;
mod matrix;
mod network;
mod optim;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use loss::{
    argmax, cross_entropy, cross_entropy_logit_grad, soft_cross_entropy, softmax, LOG_FLOOR,
};
pub use matrix::Matrix;
pub use network::{Dense, Gradients, Network, Trace};
pub use optim::{Sgd, TrainConfig};
