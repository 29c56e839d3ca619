use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use robustdata::config::{CliConfig, CONFIG_ENV};
use robustdata::datasets::{
    generate_synthetic, load_ambiguity, load_delimited, remove_fraction, remove_fraction_classwise, save_ambiguity,
    save_delimited, save_manifest, stratified_split, Dataset, RemovalMode,
};
use robustdata::experiments::{
    curve_table, half_split_demo, half_split_table, overestimation_eval, removal_curve, summarize_curve,
    train_run, write_json, CurveReport, CurveSetup, EvalSuite, HalfSplitReport, RunSetup, RunSummary,
};
use robustdata::nn::{load_checkpoint, save_checkpoint, Checkpoint};
use robustdata::objectives::ObjectiveKind;
use robustdata::profiler::{
    self, build_profile, ensemble_rank, load_profile, load_ranking, rank_profile, save_profile, save_ranking,
    ExampleRecord, Measure, QualityRanking,
};
use robustdata::stats;
use robustdata::{Error, Result};

#[derive(Parser)]
#[command(name = "robustdata", version, about = "Data quality profiling for adversarial training")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML config; defaults to $ROBUSTDATA_CONFIG, then built-in defaults.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for multi-run commands.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Replace existing output files.
    #[arg(long, global = true)]
    overwrite: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset and its ambiguity oracle.
    GenData,
    /// Stratified train/test split.
    Split {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train one model, saving curves, checkpoints and per-example records.
    Train {
        /// Dataset to split first (default: <out>/data.csv).
        #[arg(long, conflicts_with_all = ["train", "test"])]
        data: Option<PathBuf>,
        #[arg(long, requires = "test")]
        train: Option<PathBuf>,
        #[arg(long, requires = "train")]
        test: Option<PathBuf>,
        #[arg(long)]
        objective: Option<ObjectiveKind>,
    },
    /// Reduce a run's records to a profile file.
    Profile {
        /// Directory written by `train` (default: <out>).
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Rank examples by a quality measure, ensembling several profiles.
    Rank {
        #[arg(long, num_args = 1..)]
        profile: Vec<PathBuf>,
        /// stability, probability, min_perturbation or learning_order.
        #[arg(long, default_value = "stability")]
        measure: Measure,
    },
    /// Remove a fraction of the training set.
    Prune {
        /// Default: <out>/train.csv.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Default: <out>/ranking.csv.
        #[arg(long)]
        ranking: Option<PathBuf>,
        /// Share of examples to remove, in [0, 1).
        #[arg(long)]
        fraction: f64,
        /// `ascending_quality` or `random`.
        #[arg(long, default_value = "ascending_quality")]
        mode: RemovalMode,
        /// Remove the fraction from every class separately.
        #[arg(long)]
        classwise: bool,
    },
    /// Removal curve over the configured fractions, modes and seeds.
    Curve(ExperimentInputs),
    /// Train on the high- and low-quality halves of the training set.
    HalfSplit(ExperimentInputs),
    /// Robust accuracy of a checkpoint under every evaluator.
    EvalAttacks {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Checkpoint to craft transfer attacks on.
        #[arg(long)]
        surrogate: Option<PathBuf>,
    },
    /// Spearman correlation between two rankings, profiles or ambiguity files.
    Spearman {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 1000)]
        shuffles: usize,
    },
    /// Flat table and seed aggregates from a curve report.
    Report {
        #[arg(long)]
        curve: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentInputs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    ranking: Option<PathBuf>,
}

struct Ctx {
    cfg: CliConfig,
    out: PathBuf,
    workers: usize,
    overwrite: bool,
}

impl Ctx {
    fn input(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out.join(default))
    }

    /// Path for a new output file; refuses to clobber without --overwrite.
    fn output(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        let p = self.out.join(name);
        if p.exists() && !self.overwrite {
            return Err(Error::OutputExists(p));
        }
        Ok(p)
    }

    fn outputs<const N: usize>(&self, names: [&str; N]) -> Result<[PathBuf; N]> {
        let mut out: [PathBuf; N] = std::array::from_fn(|_| PathBuf::new());
        for (slot, name) in out.iter_mut().zip(names) {
            *slot = self.output(name)?;
        }
        Ok(out)
    }
}

fn log(line: &str) {
    eprintln!("{line}");
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_json(value, path)
}

fn gen_data(ctx: &Ctx) -> Result<()> {
    let [data_path, amb_path] = ctx.outputs(["data.csv", "ambiguity.csv"])?;
    let mut spec = ctx.cfg.synthetic.clone();
    spec.seed = ctx.cfg.seed;
    let (data, ambiguity) = generate_synthetic(&spec)?;
    save_delimited(&data, &data_path)?;
    save_ambiguity(&data.ids(), &ambiguity, &amb_path)?;
    log(&format!("wrote {} examples to {}", data.len(), data_path.display()));
    Ok(())
}

fn split_into(ctx: &Ctx, data: &Dataset) -> Result<(Dataset, Dataset)> {
    let [train_path, test_path] = ctx.outputs(["train.csv", "test.csv"])?;
    let (train, test) = stratified_split(data, ctx.cfg.split.test_fraction, ctx.cfg.seed)?;
    save_delimited(&train, &train_path)?;
    save_delimited(&test, &test_path)?;
    log(&format!("split into {} train / {} test", train.len(), test.len()));
    Ok((train, test))
}

fn train(ctx: &Ctx, data: &Option<PathBuf>, train: &Option<PathBuf>, test: &Option<PathBuf>, objective: Option<ObjectiveKind>) -> Result<()> {
    let mut setup = RunSetup::from_config(&ctx.cfg);
    if let Some(kind) = objective {
        setup = setup.with_objective(kind);
    }
    let names = ["run.json", "best.ckpt", "last.ckpt", "records.json"];
    ctx.outputs(names)?;
    let (train, test) = match (train, test) {
        (Some(a), Some(b)) => (load_delimited(a)?, load_delimited(b)?),
        _ => split_into(ctx, &load_delimited(&ctx.input(data, "data.csv"))?)?,
    };
    let run = train_run(&train, &test, &setup, ctx.cfg.seed)?;
    let [run_path, best_path, last_path, records_path] = ctx.outputs(names)?;
    save_json(&run.summary, &run_path)?;
    for (net, path) in [(&run.best, &best_path), (&run.last, &last_path)] {
        let ckpt = Checkpoint {
            network: net.clone(),
            train: setup.train.clone(),
        };
        save_checkpoint(path, &ckpt)?;
    }
    save_json(&run.records, &records_path)?;
    let s = &run.summary;
    log(&format!(
        "trained {} for {} epochs: best robust {} at epoch {}, last robust {}",
        s.objective,
        s.epochs(),
        s.best_robust().map_or("-".into(), |v| format!("{v:.4}")),
        s.best_epoch.map_or("-".into(), |e| e.to_string()),
        s.last_robust().map_or("-".into(), |v| format!("{v:.4}")),
    ));
    Ok(())
}

fn profile(ctx: &Ctx, run_dir: &Option<PathBuf>, train: &Option<PathBuf>) -> Result<()> {
    let [profile_path] = ctx.outputs(["profile.csv"])?;
    let dir = run_dir.clone().unwrap_or_else(|| ctx.out.clone());
    let summary: RunSummary = read_json(&dir.join("run.json"))?;
    let records: Vec<ExampleRecord> = read_json(&dir.join("records.json"))?;
    let best = load_checkpoint(&dir.join("best.ckpt"))?.network;
    let train = load_delimited(&ctx.input(train, "train.csv"))?;
    let best_epoch = summary
        .best_epoch
        .ok_or_else(|| Error::Empty("run has no completed epochs to profile".into()))?;
    if records.is_empty() {
        return Err(Error::config("profile.enabled", "the run was trained without profiling"));
    }
    let rows = build_profile(&train, &records, best_epoch, &best, &ctx.cfg.profile.min_perturbation)?;
    save_profile(&rows, &profile_path)?;
    log(&format!("profiled {} examples into {}", rows.len(), profile_path.display()));
    Ok(())
}

fn rank(ctx: &Ctx, profiles: &[PathBuf], measure: Measure) -> Result<()> {
    let [ranking_path] = ctx.outputs(["ranking.csv"])?;
    let defaults = [ctx.out.join("profile.csv")];
    let paths = if profiles.is_empty() { &defaults[..] } else { profiles };
    let epochs = ctx.cfg.train.epochs;
    let rankings = paths
        .iter()
        .map(|p| rank_profile(&load_profile(p)?, measure, epochs))
        .collect::<Result<Vec<_>>>()?;
    let ranking = ensemble_rank(&rankings)?;
    save_ranking(&ranking, &ranking_path)?;
    log(&format!("ranked {} examples by {measure} over {} runs", ranking.len(), rankings.len()));
    Ok(())
}

fn prune(ctx: &Ctx, data: &Option<PathBuf>, ranking: &Option<PathBuf>, fraction: f64, mode: RemovalMode, classwise: bool) -> Result<()> {
    let [kept_path, manifest_path] = ctx.outputs(["pruned.csv", "manifest.txt"])?;
    let data = load_delimited(&ctx.input(data, "train.csv"))?;
    let ranking = load_ranking(&ctx.input(ranking, "ranking.csv"))?;
    let pruned = if classwise {
        remove_fraction_classwise(&data, &ranking, fraction, mode, ctx.cfg.seed)?
    } else {
        remove_fraction(&data, &ranking, fraction, mode, ctx.cfg.seed)?
    };
    save_delimited(&pruned.kept, &kept_path)?;
    save_manifest(&pruned.manifest, &manifest_path)?;
    log(&format!(
        "removed {} of {} examples; class counts {:?}",
        pruned.manifest.removed.len(),
        data.len(),
        pruned.kept.class_counts()
    ));
    Ok(())
}

fn experiment_inputs(ctx: &Ctx, inputs: &ExperimentInputs) -> Result<(Dataset, Dataset, QualityRanking)> {
    Ok((
        load_delimited(&ctx.input(&inputs.train, "train.csv"))?,
        load_delimited(&ctx.input(&inputs.test, "test.csv"))?,
        load_ranking(&ctx.input(&inputs.ranking, "ranking.csv"))?,
    ))
}

fn curve(ctx: &Ctx, inputs: &ExperimentInputs) -> Result<()> {
    let [json_path, csv_path] = ctx.outputs(["curve.json", "curve.csv"])?;
    let (train, test, ranking) = experiment_inputs(ctx, inputs)?;
    let setup = CurveSetup::from_config(&ctx.cfg);
    let progress: &(dyn Fn(&str) + Sync) = &log;
    let entries = removal_curve(&train, &test, &ranking, &setup, &ctx.cfg.experiment.seeds, ctx.workers, Some(progress))?;
    let report = CurveReport {
        config_digest: ctx.cfg.digest(),
        ranking_measure: ranking.measure,
        ranking_ensemble_size: ranking.ensemble_size,
        summary: summarize_curve(&entries)?,
        entries,
    };
    save_json(&report, &json_path)?;
    write_text(&csv_path, &curve_table(&report.entries))?;
    log(&format!("wrote {} conditions to {}", report.entries.len(), json_path.display()));
    Ok(())
}

fn half_split(ctx: &Ctx, inputs: &ExperimentInputs) -> Result<()> {
    let [json_path, csv_path] = ctx.outputs(["half_split.json", "half_split.csv"])?;
    let (train, test, ranking) = experiment_inputs(ctx, inputs)?;
    let setup = CurveSetup::from_config(&ctx.cfg);
    let progress: &(dyn Fn(&str) + Sync) = &log;
    let entries = half_split_demo(
        &train,
        &test,
        &ranking,
        &setup.adversarial,
        &setup.standard,
        &ctx.cfg.experiment.seeds,
        ctx.workers,
        Some(progress),
    )?;
    let report = HalfSplitReport {
        config_digest: ctx.cfg.digest(),
        entries,
    };
    save_json(&report, &json_path)?;
    write_text(&csv_path, &half_split_table(&report.entries))?;
    Ok(())
}

fn eval_attacks(ctx: &Ctx, model: &Path, test: &Option<PathBuf>, surrogate: &Option<PathBuf>) -> Result<()> {
    let [eval_path] = ctx.outputs(["eval.json"])?;
    let net = load_checkpoint(model)?.network;
    let surrogate = surrogate.as_deref().map(load_checkpoint).transpose()?.map(|c| c.network);
    let test = load_delimited(&ctx.input(test, "test.csv"))?;
    let suite = EvalSuite {
        attack: ctx.cfg.eval_attack.clone(),
        evaluators: ctx.cfg.experiment.evaluators.clone(),
    };
    let table = overestimation_eval(&net, &test, &suite, surrogate.as_ref(), ctx.cfg.seed)?;
    for (name, acc) in table.entries() {
        println!("{name:>14}  {acc:.4}");
    }
    println!("{:>14}  {:.4}", "strong", table.strong);
    save_json(&table, &eval_path)
}

/// Ranking from a ranking, profile or ambiguity file. Ambiguity becomes
/// the oracle's true-class probability `1 - ambiguity`.
fn any_ranking(path: &Path) -> Result<QualityRanking> {
    let head = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if head.starts_with("id,ambiguity") {
        let pairs = load_ambiguity(path)?;
        let ids: Vec<u64> = pairs.iter().map(|p| p.0).collect();
        let truth: Vec<f64> = pairs.iter().map(|p| 1.0 - p.1).collect();
        return profiler::quality_rank(&ids, &truth, Measure::Probability);
    }
    load_ranking(path)
}

#[derive(Serialize)]
struct SpearmanOut {
    n: usize,
    rho: f64,
    p_value: f64,
    shuffles: usize,
}

fn spearman(ctx: &Ctx, a: &Path, b: &Path, shuffles: usize) -> Result<()> {
    let [out_path] = ctx.outputs(["spearman.json"])?;
    let (ra, rb) = (any_ranking(a)?, any_ranking(b)?);
    // compare on the shared ids; ranks are recomputed inside
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    for &id in ra.ids() {
        if let Some(r) = rb.rank_of(id) {
            xa.push(ra.rank_of(id).expect("own id"));
            xb.push(r);
        }
    }
    let rho = stats::spearman(&xa, &xb)?;
    let p_value = stats::permutation_test(&xa, &xb, shuffles, ctx.cfg.seed)?;
    println!("n = {}  rho = {rho:.6}  p = {p_value:.6}", xa.len());
    save_json(
        &SpearmanOut {
            n: xa.len(),
            rho,
            p_value,
            shuffles,
        },
        &out_path,
    )
}

fn report(ctx: &Ctx, curve: &Option<PathBuf>) -> Result<()> {
    let [csv_path, summary_path] = ctx.outputs(["report.csv", "summary.json"])?;
    let report: CurveReport = read_json(&ctx.input(curve, "curve.json"))?;
    let summary = summarize_curve(&report.entries)?;
    write_text(&csv_path, &curve_table(&report.entries))?;
    save_json(&summary, &summary_path)?;
    for s in &summary {
        println!(
            "fraction {:<5} {:<17} best robust {:.4} ± {:.4}  overfitting gap {:.4}  cross-generalization gap {:.4}",
            s.fraction,
            s.mode.map_or("none", |m| m.name()),
            s.best_robust.mean,
            s.best_robust.stddev,
            s.robust_overfitting_gap.mean,
            s.cross_generalization_gap.mean,
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(out) = g.out {
        cfg.out_dir = out;
    }
    if g.workers == 0 {
        return Err(Error::config("--workers", "must be positive"));
    }
    let ctx = Ctx {
        out: cfg.out_dir.clone(),
        cfg,
        workers: g.workers,
        overwrite: g.overwrite,
    };
    match &cli.command {
        Command::GenData => gen_data(&ctx),
        Command::Split { data } => split_into(&ctx, &load_delimited(&ctx.input(data, "data.csv"))?).map(|_| ()),
        Command::Train {
            data,
            train: tr,
            test,
            objective,
        } => train(&ctx, data, tr, test, *objective),
        Command::Profile { run, train } => profile(&ctx, run, train),
        Command::Rank { profile, measure } => rank(&ctx, profile, *measure),
        Command::Prune {
            data,
            ranking,
            fraction,
            mode,
            classwise,
        } => prune(&ctx, data, ranking, *fraction, *mode, *classwise),
        Command::Curve(inputs) => curve(&ctx, inputs),
        Command::HalfSplit(inputs) => half_split(&ctx, inputs),
        Command::EvalAttacks { model, test, surrogate } => eval_attacks(&ctx, model, test, surrogate),
        Command::Spearman { a, b, shuffles } => spearman(&ctx, a, b, *shuffles),
        Command::Report { curve } => report(&ctx, curve),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
