use serde::{Deserialize, Serialize};

use crate::attacks::{self, AttackConfig};
use crate::config::{digest_json, CliConfig};
use crate::datasets::Dataset;
use crate::nn::{Network, Sgd, TrainConfig};
use crate::objectives::{objective_loss, ObjectiveConfig, ObjectiveKind};
use crate::profiler::{self, ExampleRecord, StabilitySource};
use crate::rng;
use crate::{Error, Result};
use rand::seq::SliceRandom;

/// Everything a training run depends on except data and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSetup {
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub objective: ObjectiveConfig,
    pub eval_attack: AttackConfig,
    /// Per-example records and where their correctness bits come from;
    /// `None` skips profiling.
    pub profile: Option<StabilitySource>,
}

impl RunSetup {
    pub fn from_config(cfg: &CliConfig) -> Self {
        Self {
            hidden: cfg.model.hidden.clone(),
            train: cfg.train.clone(),
            objective: cfg.objective.clone(),
            eval_attack: cfg.eval_attack.clone(),
            profile: cfg.profile.enabled.then_some(cfg.profile.source),
        }
    }

    pub fn with_objective(&self, kind: ObjectiveKind) -> Self {
        Self {
            objective: self.objective.clone().with_kind(kind),
            ..self.clone()
        }
    }

    pub fn with_profile(&self, profile: Option<StabilitySource>) -> Self {
        Self {
            profile,
            ..self.clone()
        }
    }

    pub fn digest(&self) -> String {
        digest_json(self)
    }
}

/// Accuracy curves and metadata of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub objective: ObjectiveKind,
    pub train_size: usize,
    pub test_digest: String,
    pub config_digest: String,
    pub train_clean_acc: Vec<f64>,
    /// Empty when the run neither profiles nor trains adversarially.
    pub train_robust_acc: Vec<f64>,
    pub test_clean_acc: Vec<f64>,
    pub test_robust_acc: Vec<f64>,
    /// Epoch with the highest robust test accuracy, earliest on ties.
    pub best_epoch: Option<usize>,
}

impl RunSummary {
    pub fn epochs(&self) -> usize {
        self.test_robust_acc.len()
    }

    pub fn best_robust(&self) -> Option<f64> {
        self.best_epoch.map(|e| self.test_robust_acc[e])
    }

    pub fn last_robust(&self) -> Option<f64> {
        self.test_robust_acc.last().copied()
    }

    pub fn last_clean(&self) -> Option<f64> {
        self.test_clean_acc.last().copied()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    /// Model at `best_epoch` (the initial model when no epoch ran).
    pub best: Network,
    pub last: Network,
    /// One per training example, in training-set order; empty when
    /// profiling is off.
    pub records: Vec<ExampleRecord>,
}

/// Digest of a dataset's ids, used to check that runs share a test set.
pub fn dataset_digest(dataset: &Dataset) -> String {
    digest_json(&dataset.ids())
}

fn accuracy(hits: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

/// Clean and robust accuracy; attack streams are `(seed, label, epoch, id)`.
fn evaluate(net: &Network, data: &Dataset, attack: &AttackConfig, seed: u64, label: u64, epoch: u64) -> (f64, f64) {
    let (mut clean, mut robust) = (0, 0);
    for ex in data.examples() {
        if net.predict(&ex.features) != ex.label {
            // the attack would report success at κ = 0
            continue;
        }
        clean += 1;
        let mut r = rng::stream(seed, &[label, epoch, ex.id]);
        if !attacks::pgd(net, &ex.features, ex.label, attack, &mut r).success {
            robust += 1;
        }
    }
    (accuracy(clean, data.len()), accuracy(robust, data.len()))
}

/// Trains one model. Deterministic in `(train, test, setup, seed)`.
pub fn train_run(train: &Dataset, test: &Dataset, setup: &RunSetup, seed: u64) -> Result<RunResult> {
    setup.train.validate("train")?;
    setup.objective.validate("objective")?;
    setup.eval_attack.validate("eval_attack")?;
    if train.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if train.dim() != test.dim() || train.classes() != test.classes() {
        return Err(Error::Shape("train and test sets differ in dimension or classes".into()));
    }
    let test_ids: std::collections::HashSet<u64> = test.ids().into_iter().collect();
    if let Some(e) = train.examples().iter().find(|e| test_ids.contains(&e.id)) {
        return Err(Error::IdMismatch(format!("example {} is in both train and test sets", e.id)));
    }

    let mut net = Network::new(train.dim(), &setup.hidden, train.classes(), seed)?;
    let mut sgd = Sgd::new(&net);
    let mut records = if setup.profile.is_some() {
        profiler::new_records(train)
    } else {
        Vec::new()
    };
    let mut summary = RunSummary {
        seed,
        objective: setup.objective.kind,
        train_size: train.len(),
        test_digest: dataset_digest(test),
        config_digest: setup.digest(),
        train_clean_acc: Vec::new(),
        train_robust_acc: Vec::new(),
        test_clean_acc: Vec::new(),
        test_robust_acc: Vec::new(),
        best_epoch: None,
    };
    let mut best = net.clone();
    let adversarial = setup.objective.kind.is_adversarial();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut fly = vec![false; train.len()];

    for epoch in 0..setup.train.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(seed, &[rng::SHUFFLE, epoch as u64]));
        for (b, chunk) in order.chunks(setup.train.batch_size).enumerate() {
            let batch = train.batch(chunk);
            let batch_seed = rng::derive_seed(seed, &[rng::TRAIN_ATTACK, epoch as u64, b as u64]);
            let out = objective_loss(&net, &batch, &setup.objective, batch_seed)?;
            if !out.grads.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite gradient at epoch {epoch}; lower train.base_lr"
                )));
            }
            sgd.step(&mut net, &out.grads, epoch, &setup.train);
            for (&i, &ok) in chunk.iter().zip(&out.robust_correct) {
                fly[i] = ok;
            }
        }

        let clean_hits = train
            .examples()
            .iter()
            .filter(|e| net.predict(&e.features) == e.label)
            .count();
        summary.train_clean_acc.push(accuracy(clean_hits, train.len()));
        match setup.profile {
            Some(StabilitySource::PostEpoch) => {
                profiler::record_epoch(&mut records, epoch, &net, train, &setup.eval_attack, seed)?;
            }
            Some(StabilitySource::OnTheFly) => {
                if adversarial {
                    profiler::record_epoch_on_the_fly(&mut records, epoch, &net, train, &fly)?;
                } else {
                    // standard training has no perturbation to reuse
                    profiler::record_epoch(&mut records, epoch, &net, train, &setup.eval_attack, seed)?;
                }
            }
            None => {}
        }
        if !records.is_empty() {
            let hits = records.iter().filter(|r| r.robust_correct[epoch]).count();
            summary.train_robust_acc.push(accuracy(hits, train.len()));
        } else if adversarial {
            summary.train_robust_acc.push(accuracy(fly.iter().filter(|&&b| b).count(), train.len()));
        }

        let (clean, robust) = evaluate(&net, test, &setup.eval_attack, seed, rng::TEST_ATTACK, epoch as u64);
        summary.test_clean_acc.push(clean);
        summary.test_robust_acc.push(robust);
        if summary.best_robust().map_or(true, |b| robust > b) {
            summary.best_epoch = Some(epoch);
            best = net.clone();
        }
    }

    Ok(RunResult {
        summary,
        best,
        last: net,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_synthetic, stratified_split, SyntheticSpec};

    fn small_data(ambiguous: f64, spread: f64) -> (Dataset, Dataset) {
        let spec = SyntheticSpec {
            dim: 6,
            n_per_class: 40,
            ambiguous_fraction: ambiguous,
            spread,
            seed: 3,
            ..SyntheticSpec::default()
        };
        let (data, _) = generate_synthetic(&spec).unwrap();
        stratified_split(&data, 0.25, 1).unwrap()
    }

    fn small_setup(kind: ObjectiveKind, epochs: usize) -> RunSetup {
        RunSetup {
            hidden: vec![16],
            train: TrainConfig {
                epochs,
                lr_decay_epochs: vec![],
                batch_size: 16,
                ..TrainConfig::default()
            },
            objective: ObjectiveConfig {
                attack: AttackConfig::desk(3),
                ..ObjectiveConfig::default()
            }
            .with_kind(kind),
            eval_attack: AttackConfig::desk(5),
            profile: Some(StabilitySource::PostEpoch),
        }
    }

    #[test]
    fn zero_epochs_keeps_initial_model() {
        let (train, test) = small_data(0.2, 0.1);
        let r = train_run(&train, &test, &small_setup(ObjectiveKind::PgdAt, 0), 5).unwrap();
        assert_eq!(r.summary.best_epoch, None);
        assert!(r.summary.test_robust_acc.is_empty());
        assert_eq!(r.best, r.last);
        assert_eq!(r.best, Network::new(6, &[16], 3, 5).unwrap());
        assert!(r.records.iter().all(|rec| rec.epochs() == 0));
    }

    #[test]
    fn rerun_is_bit_identical() {
        let (train, test) = small_data(0.2, 0.1);
        let setup = small_setup(ObjectiveKind::Trades, 3);
        let a = train_run(&train, &test, &setup, 9).unwrap();
        let b = train_run(&train, &test, &setup, 9).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.last, b.last);
        assert_eq!(a.records, b.records);
        let c = train_run(&train, &test, &setup, 10).unwrap();
        assert_ne!(a.last, c.last);
    }

    #[test]
    fn run_invariants_hold_for_every_objective() {
        let (train, test) = small_data(0.2, 0.1);
        for kind in [
            ObjectiveKind::Standard,
            ObjectiveKind::PgdAt,
            ObjectiveKind::Trades,
            ObjectiveKind::Mart,
            ObjectiveKind::Gairat,
        ] {
            let r = train_run(&train, &test, &small_setup(kind, 4), 1).unwrap();
            let s = &r.summary;
            assert_eq!(s.epochs(), 4);
            assert!(s.best_robust().unwrap() >= s.last_robust().unwrap());
            for (c, rb) in s.test_clean_acc.iter().zip(&s.test_robust_acc) {
                assert!((0.0..=1.0).contains(c) && rb <= c, "{kind}");
            }
            assert_eq!(r.records.len(), train.len());
            assert!(r.records.iter().all(|rec| rec.epochs() == 4));
            let best = s.best_epoch.unwrap();
            assert!(s.test_robust_acc[..best].iter().all(|&v| v < s.test_robust_acc[best]));
        }
    }

    #[test]
    fn standard_training_fits_separable_data() {
        let (train, test) = small_data(0.0, 0.05);
        let mut setup = small_setup(ObjectiveKind::Standard, 40);
        setup.profile = None;
        let r = train_run(&train, &test, &setup, 2).unwrap();
        assert_eq!(*r.summary.train_clean_acc.last().unwrap(), 1.0);
        assert!(r.summary.train_robust_acc.is_empty());
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        let (train, _) = small_data(0.2, 0.1);
        let e = train_run(&train, &train, &small_setup(ObjectiveKind::Standard, 1), 0).unwrap_err();
        assert!(matches!(e, Error::IdMismatch(_)));
    }

    #[test]
    fn zero_radius_profiling_tracks_clean_correctness() {
        let (train, test) = small_data(0.2, 0.1);
        let mut setup = small_setup(ObjectiveKind::Standard, 3);
        setup.eval_attack.epsilon = 0.0;
        let r = train_run(&train, &test, &setup, 4).unwrap();
        for (rec, ex) in r.records.iter().zip(train.examples()) {
            assert_eq!(*rec.robust_correct.last().unwrap(), r.last.predict(&ex.features) == ex.label);
        }
        let s = &r.summary;
        assert_eq!(s.test_clean_acc, s.test_robust_acc);
    }
}
