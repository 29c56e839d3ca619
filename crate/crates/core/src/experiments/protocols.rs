use serde::{Deserialize, Serialize};

use super::eval::{overestimation_eval, EvalSuite, EvalTable};
use super::gaps::{compute_gaps, Condition, GapReport};
use super::pool::run_parallel;
use super::run::{train_run, RunSetup, RunSummary};
use super::Progress;
use crate::config::CliConfig;
use crate::datasets::{class_balanced_halves, remove_fraction, remove_fraction_classwise, Dataset, RemovalMode};
use crate::objectives::ObjectiveKind;
use crate::profiler::{self, MinPerturbationConfig, ProfileRow, QualityRanking};
use crate::{Error, Result};

fn report(progress: Progress, line: String) {
    if let Some(p) = progress {
        p(&line);
    }
}

/// A profiled run reduced to its profile rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOutcome {
    pub summary: RunSummary,
    pub rows: Vec<ProfileRow>,
}

/// One profiled training run per seed. `setup.profile` must be set.
pub fn profile_runs(
    train: &Dataset,
    test: &Dataset,
    setup: &RunSetup,
    min_pert: &MinPerturbationConfig,
    seeds: &[u64],
    workers: usize,
    progress: Progress,
) -> Result<Vec<ProfileOutcome>> {
    if setup.profile.is_none() {
        return Err(Error::config("profile.enabled", "profiling runs need profiling enabled"));
    }
    run_parallel(seeds.to_vec(), workers, |&seed| {
        let run = train_run(train, test, setup, seed)?;
        let best = run
            .summary
            .best_epoch
            .ok_or_else(|| Error::Empty("profiling run has no completed epochs".into()))?;
        let rows = profiler::build_profile(train, &run.records, best, &run.best, min_pert)?;
        report(progress, format!("profile seed {seed}: best epoch {best}"));
        Ok(ProfileOutcome {
            summary: run.summary,
            rows,
        })
    })
}

/// Ensemble of the stability ranks of several profiled runs.
pub fn stability_ensemble(outcomes: &[ProfileOutcome]) -> Result<QualityRanking> {
    let rankings = outcomes
        .iter()
        .map(|o| {
            QualityRanking::new(
                profiler::Measure::Stability,
                1,
                o.rows.iter().map(|r| r.id).collect(),
                o.rows.iter().map(|r| r.quality_rank).collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    profiler::ensemble_rank(&rankings)
}

/// Settings shared by every condition of a removal curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSetup {
    pub fractions: Vec<f64>,
    pub modes: Vec<RemovalMode>,
    pub classwise: bool,
    pub adversarial: RunSetup,
    pub standard: RunSetup,
    pub suite: EvalSuite,
}

impl CurveSetup {
    /// Curve settings from a config file. Curve runs skip per-example
    /// profiling.
    pub fn from_config(cfg: &CliConfig) -> Self {
        let adversarial = RunSetup::from_config(cfg).with_profile(None);
        Self {
            fractions: cfg.experiment.fractions.clone(),
            modes: cfg.experiment.modes.clone(),
            classwise: cfg.experiment.classwise,
            standard: adversarial.with_objective(ObjectiveKind::Standard),
            adversarial,
            suite: EvalSuite {
                attack: cfg.eval_attack.clone(),
                evaluators: cfg.experiment.evaluators.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub condition: Condition,
    pub train_size: usize,
    pub class_counts: Vec<usize>,
    pub adversarial: RunSummary,
    pub standard: RunSummary,
    pub eval: EvalTable,
    pub gaps: GapReport,
}

/// Trains the adversarial and standard models of one condition and scores
/// the adversarial best checkpoint.
fn run_condition(
    train: &Dataset,
    test: &Dataset,
    setup: &CurveSetup,
    condition: Condition,
) -> Result<CurveEntry> {
    let adv = train_run(train, test, &setup.adversarial, condition.seed)?;
    let std = train_run(train, test, &setup.standard, condition.seed)?;
    let eval = overestimation_eval(&adv.best, test, &setup.suite, None, condition.seed)?;
    let gaps = compute_gaps(&adv.summary, &std.summary, Some(&eval), condition.clone())?;
    Ok(CurveEntry {
        condition,
        train_size: train.len(),
        class_counts: train.class_counts(),
        adversarial: adv.summary,
        standard: std.summary,
        eval,
        gaps,
    })
}

/// Trains one condition per `(fraction, mode, seed)`, in that nesting
/// order. Fraction 0 is the same for every mode, so it is trained once per
/// seed and reported under each mode.
pub fn removal_curve(
    train: &Dataset,
    test: &Dataset,
    ranking: &QualityRanking,
    setup: &CurveSetup,
    seeds: &[u64],
    workers: usize,
    progress: Progress,
) -> Result<Vec<CurveEntry>> {
    if setup.fractions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("experiment.fractions", "must be strictly increasing"));
    }
    if let Some(f) = setup.fractions.iter().find(|f| !(0.0..1.0).contains(*f)) {
        return Err(Error::config("experiment.fractions", format!("{f} is outside [0, 1)")));
    }
    ranking.ranks_for(train)?;
    let mut jobs = Vec::new();
    for &fraction in &setup.fractions {
        let modes: Vec<Option<RemovalMode>> = if fraction == 0.0 {
            vec![None]
        } else {
            setup.modes.iter().copied().map(Some).collect()
        };
        for mode in modes {
            for &seed in seeds {
                jobs.push((fraction, mode, seed));
            }
        }
    }
    let done = run_parallel(jobs.clone(), workers, |&(fraction, mode, seed)| {
        let pruned = match mode {
            None => train.clone(),
            Some(m) if setup.classwise => remove_fraction_classwise(train, ranking, fraction, m, seed)?.kept,
            Some(m) => remove_fraction(train, ranking, fraction, m, seed)?.kept,
        };
        let condition = Condition {
            fraction,
            mode,
            objective: setup.adversarial.objective.kind,
            seed,
            subset: None,
        };
        let entry = run_condition(&pruned, test, setup, condition)?;
        report(
            progress,
            format!(
                "curve fraction {fraction} mode {} seed {seed}: best robust {:.4}",
                mode.map_or("none", |m| m.name()),
                entry.gaps.best_robust
            ),
        );
        Ok(entry)
    })?;

    let mut out = Vec::with_capacity(setup.fractions.len() * setup.modes.len() * seeds.len());
    for &fraction in &setup.fractions {
        for &mode in &setup.modes {
            for &seed in seeds {
                let key = (fraction, if fraction == 0.0 { None } else { Some(mode) }, seed);
                let i = jobs.iter().position(|j| *j == key).expect("job scheduled");
                let mut entry = done[i].clone();
                entry.condition.mode = Some(mode);
                entry.gaps.condition.mode = Some(mode);
                out.push(entry);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Half {
    High,
    Low,
}

impl Half {
    pub fn name(self) -> &'static str {
        match self {
            Half::High => "high",
            Half::Low => "low",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfEntry {
    pub half: Half,
    pub seed: u64,
    pub train_size: usize,
    pub class_counts: Vec<usize>,
    pub adversarial: RunSummary,
    pub standard: RunSummary,
    pub gaps: GapReport,
}

/// Splits `train` into class-balanced quality halves and trains an
/// adversarial and a standard model on each, for every seed.
pub fn half_split_demo(
    train: &Dataset,
    test: &Dataset,
    ranking: &QualityRanking,
    adversarial: &RunSetup,
    standard: &RunSetup,
    seeds: &[u64],
    workers: usize,
    progress: Progress,
) -> Result<Vec<HalfEntry>> {
    let (high, low) = class_balanced_halves(train, ranking)?;
    let jobs: Vec<(Half, u64)> = seeds
        .iter()
        .flat_map(|&s| [(Half::High, s), (Half::Low, s)])
        .collect();
    run_parallel(jobs, workers, |&(half, seed)| {
        let data = if half == Half::High { &high } else { &low };
        let adv = train_run(data, test, adversarial, seed)?;
        let std = train_run(data, test, standard, seed)?;
        let condition = Condition {
            fraction: 0.5,
            mode: None,
            objective: adversarial.objective.kind,
            seed,
            subset: Some(format!("{}_half", half.name())),
        };
        let gaps = compute_gaps(&adv.summary, &std.summary, None, condition)?;
        report(
            progress,
            format!("half {} seed {seed}: overfitting gap {:.4}", half.name(), gaps.robust_overfitting_gap),
        );
        Ok(HalfEntry {
            half,
            seed,
            train_size: data.len(),
            class_counts: data.class_counts(),
            adversarial: adv.summary,
            standard: std.summary,
            gaps,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::AttackConfig;
    use crate::config::EvaluatorConfig;
    use crate::datasets::{generate_synthetic, stratified_split, SyntheticSpec};
    use crate::nn::TrainConfig;
    use crate::objectives::ObjectiveConfig;
    use crate::profiler::StabilitySource;

    fn tiny() -> (Dataset, Dataset, RunSetup) {
        let spec = SyntheticSpec {
            dim: 4,
            n_per_class: 24,
            seed: 2,
            ..SyntheticSpec::default()
        };
        let (data, _) = generate_synthetic(&spec).unwrap();
        let (train, test) = stratified_split(&data, 0.25, 0).unwrap();
        let setup = RunSetup {
            hidden: vec![8],
            train: TrainConfig {
                epochs: 2,
                lr_decay_epochs: vec![],
                batch_size: 16,
                ..TrainConfig::default()
            },
            objective: ObjectiveConfig {
                attack: AttackConfig::desk(2),
                ..ObjectiveConfig::default()
            },
            eval_attack: AttackConfig::desk(2),
            profile: Some(StabilitySource::PostEpoch),
        };
        (train, test, setup)
    }

    fn curve_setup(setup: &RunSetup, fractions: Vec<f64>) -> CurveSetup {
        CurveSetup {
            fractions,
            modes: vec![RemovalMode::Random, RemovalMode::AscendingQuality],
            classwise: false,
            adversarial: setup.with_profile(None),
            standard: setup.with_objective(ObjectiveKind::Standard).with_profile(None),
            suite: EvalSuite {
                attack: AttackConfig::desk(2),
                evaluators: EvaluatorConfig {
                    restarts: 2,
                    square_queries: 10,
                    long_iterations: 0,
                },
            },
        }
    }

    #[test]
    fn curve_cardinality_and_shared_baseline() {
        let (train, test, setup) = tiny();
        let outcomes = profile_runs(&train, &test, &setup, &MinPerturbationConfig::default(), &[1, 2], 1, None).unwrap();
        assert_eq!(outcomes[0].rows.len(), train.len());
        let ranking = stability_ensemble(&outcomes).unwrap();
        assert_eq!(ranking.ensemble_size, 2);

        let cs = curve_setup(&setup, vec![0.0]);
        let c = removal_curve(&train, &test, &ranking, &cs, &[3], 1, None).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].adversarial, c[1].adversarial);
        assert_eq!(c[0].eval, c[1].eval);

        let cs = curve_setup(&setup, vec![0.0, 0.25]);
        let c = removal_curve(&train, &test, &ranking, &cs, &[3, 4], 2, None).unwrap();
        assert_eq!(c.len(), 2 * 2 * 2);
        let sizes: Vec<usize> = c.iter().map(|e| e.train_size).collect();
        let removed = (0.25 * train.len() as f64).floor() as usize;
        assert_eq!(sizes, [vec![train.len(); 4], vec![train.len() - removed; 4]].concat());
        // worker count does not change results
        assert_eq!(c, removal_curve(&train, &test, &ranking, &cs, &[3, 4], 1, None).unwrap());
    }

    #[test]
    fn halves_are_balanced() {
        let (train, test, setup) = tiny();
        let ids = train.ids();
        let ranks: Vec<f64> = (1..=ids.len()).map(|r| r as f64).collect();
        let ranking = QualityRanking::new(profiler::Measure::Stability, 1, ids, ranks).unwrap();
        let std = setup.with_objective(ObjectiveKind::Standard).with_profile(None);
        let out = half_split_demo(&train, &test, &ranking, &setup.with_profile(None), &std, &[0], 1, None).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].class_counts, out[1].class_counts);
        assert_eq!(out[0].train_size, out[1].train_size);
    }
}
