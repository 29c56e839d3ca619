//! Quality measures on real training runs: ensembling and agreement
//! between measures.

use robustdata::config::CliConfig;
use robustdata::datasets::{generate_synthetic, stratified_split, Dataset};
use robustdata::experiments::{profile_runs, ProfileOutcome, RunSetup};
use robustdata::profiler::{ensemble_rank, rank_profile, spearman, Measure, QualityRanking};

const SMALL: &str = r#"
seed = 7

[synthetic]
dim = 8
n_per_class = 60

[model]
hidden = [16]

[train]
epochs = 12
lr_decay_epochs = [8]

[objective.attack]
iterations = 3

[eval_attack]
iterations = 5
"#;

fn data(cfg: &CliConfig) -> (Dataset, Dataset) {
    let mut spec = cfg.synthetic.clone();
    spec.seed = cfg.seed;
    let (data, _) = generate_synthetic(&spec).unwrap();
    stratified_split(&data, cfg.split.test_fraction, cfg.seed).unwrap()
}

fn profiles(cfg: &CliConfig, seeds: &[u64]) -> Vec<ProfileOutcome> {
    let (train, test) = data(cfg);
    let setup = RunSetup::from_config(cfg);
    profile_runs(&train, &test, &setup, &cfg.profile.min_perturbation, seeds, 1, None).unwrap()
}

fn stability(o: &ProfileOutcome, epochs: usize) -> QualityRanking {
    rank_profile(&o.rows, Measure::Stability, epochs).unwrap()
}

#[test]
fn ensemble_agrees_with_a_held_out_run_better_than_single_runs() {
    let cfg = CliConfig::from_toml(SMALL).unwrap();
    let seeds: Vec<u64> = (0..11).collect();
    let runs: Vec<QualityRanking> = profiles(&cfg, &seeds)
        .iter()
        .map(|o| stability(o, cfg.train.epochs))
        .collect();
    let (held_out, members) = runs.split_last().unwrap();
    let ensemble = ensemble_rank(members).unwrap();
    assert_eq!(ensemble.ensemble_size, 10);

    let rho_ensemble = spearman(&ensemble, held_out).unwrap();
    let singles: Vec<f64> = members.iter().map(|r| spearman(r, held_out).unwrap()).collect();
    let mean_single = singles.iter().sum::<f64>() / singles.len() as f64;
    assert!(
        rho_ensemble > mean_single,
        "ensemble ρ {rho_ensemble:.4} vs mean single-run ρ {mean_single:.4}"
    );
}

#[test]
fn quality_measures_agree_in_sign() {
    let cfg = CliConfig::from_toml(SMALL).unwrap();
    let run = &profiles(&cfg, &[0])[0];
    let epochs = cfg.train.epochs;
    let base = stability(run, epochs);
    // learning order is ranked late-learned first, i.e. already inverted
    for measure in [Measure::Probability, Measure::MinPerturbation, Measure::LearningOrder] {
        let other = rank_profile(&run.rows, measure, epochs).unwrap();
        let rho = spearman(&base, &other).unwrap();
        assert!(rho > 0.0, "ρ(stability, {measure}) = {rho:.4}");
    }
}
