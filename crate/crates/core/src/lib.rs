//! Data quality profiling for adversarial training.
//!
//! The crate trains small dense classifiers adversarially, logs per-example
//! training dynamics, reduces them to quality scores (learning stability,
//! first-learned epoch, clean true-class probability, minimum perturbation),
//! ranks and prunes training data by those scores, and runs the controlled
//! experiments that relate data quality to robust overfitting, robustness
//! overestimation and the robustness-accuracy trade-off.
//!
//! Module map:
//!
//! - [`nn`]: dense ReLU classifier, losses, SGD, checkpoints
//! - [`attacks`]: FGSM, PGD, minimum-perturbation search, square-patch random
//!   search, transfer attacks
//! - [`objectives`]: standard, PGD-AT, TRADES, MART and GAIRAT training losses
//! - [`profiler`]: per-example records, stability, quality ranks
//! - [`datasets`]: synthetic generator with an ambiguity oracle, file formats,
//!   splitting and pruning
//! - [`experiments`]: training runs, gap metrics, removal curves, reports
//! - [`stats`]: rank statistics, permutation tests, seed aggregates
//! - [`config`]: the TOML experiment configuration

pub mod attacks;
pub mod config;
pub mod datasets;
mod error;
pub mod experiments;
pub mod nn;
pub mod objectives;
pub mod profiler;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
