//! Training runs and the controlled experiments built from them.
//!
//! [`train_run`] trains one model, evaluates it on the test set after every
//! epoch and optionally records per-example dynamics for the profiler.
//! [`overestimation_eval`] scores a finished model under several attacks,
//! [`compute_gaps`] turns an adversarial run, its standard-training twin and
//! the evaluator table into the three gap metrics, and the protocols in
//! this module sweep those over removal fractions, modes, halves and seeds.

mod eval;
mod gaps;
mod pool;
mod protocols;
mod report;
mod run;

pub use eval::{overestimation_eval, EvalSuite, EvalTable};
pub use gaps::{compute_gaps, overestimation_gap, Condition, GapReport};
pub use pool::run_parallel;
pub use protocols::{
    half_split_demo, profile_runs, removal_curve, stability_ensemble, CurveEntry, CurveSetup, HalfEntry, Half,
    ProfileOutcome,
};
pub use report::{
    curve_table, half_split_table, summarize_curve, write_json, ConditionSummary, CurveReport, HalfSplitReport,
};
pub use run::{dataset_digest, train_run, RunResult, RunSetup, RunSummary};

/// Progress sink; receives one line per finished unit of work.
pub type Progress<'a> = Option<&'a (dyn Fn(&str) + Sync)>;
