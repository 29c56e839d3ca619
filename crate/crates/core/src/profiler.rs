//! Per-example training dynamics and the quality measures derived from
//! them.
//!
//! A run keeps one [`ExampleRecord`] per training example. After every
//! epoch, [`record_epoch`] attacks each example against the epoch's model
//! and stores whether it stayed correct, plus the clean probability of its
//! label. Learning stability is the fraction of epochs in which the example
//! was robustly correct. Rankings order examples from lowest to highest
//! quality (rank 1 = lowest).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attacks::{self, AttackConfig};
use crate::datasets::Dataset;
use crate::nn::{softmax, Network};
use crate::rng;
use crate::stats;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub example_id: u64,
    pub label: usize,
    /// One entry per completed epoch.
    pub robust_correct: Vec<bool>,
    pub clean_true_prob: Vec<f64>,
    /// Measured once, at the best checkpoint.
    pub min_perturbation: Option<f64>,
}

impl ExampleRecord {
    pub fn new(example_id: u64, label: usize) -> Self {
        Self {
            example_id,
            label,
            robust_correct: Vec::new(),
            clean_true_prob: Vec::new(),
            min_perturbation: None,
        }
    }

    pub fn epochs(&self) -> usize {
        self.robust_correct.len()
    }
}

pub fn new_records(dataset: &Dataset) -> Vec<ExampleRecord> {
    dataset.examples().iter().map(|e| ExampleRecord::new(e.id, e.label)).collect()
}

/// Where the per-epoch robust-correctness bit comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StabilitySource {
    /// A fresh attack on every training example after the epoch.
    #[default]
    PostEpoch,
    /// The perturbation the training step already produced.
    OnTheFly,
}

fn check_epoch(records: &[ExampleRecord], dataset: &Dataset, epoch: usize) -> Result<()> {
    if records.len() != dataset.len() {
        return Err(Error::IdMismatch(format!(
            "{} records for {} examples",
            records.len(),
            dataset.len()
        )));
    }
    for (r, e) in records.iter().zip(dataset.examples()) {
        if r.example_id != e.id {
            return Err(Error::IdMismatch(format!("record {} vs example {}", r.example_id, e.id)));
        }
        if r.epochs() != epoch {
            return Err(Error::InvalidArgument(format!(
                "record {} holds {} epochs, cannot append epoch {epoch}",
                r.example_id,
                r.epochs()
            )));
        }
    }
    Ok(())
}

/// Appends epoch `epoch` to every record by attacking each example with
/// `attack` against the epoch snapshot. Example `id` draws its random start
/// from stream `(seed, epoch, id)`.
pub fn record_epoch(
    records: &mut [ExampleRecord],
    epoch: usize,
    net: &Network,
    train: &Dataset,
    attack: &AttackConfig,
    seed: u64,
) -> Result<()> {
    check_epoch(records, train, epoch)?;
    for (rec, ex) in records.iter_mut().zip(train.examples()) {
        let mut r = rng::stream(seed, &[rng::PROFILE_ATTACK, epoch as u64, ex.id]);
        let out = attacks::pgd(net, &ex.features, ex.label, attack, &mut r);
        let p = softmax(&net.logits(&ex.features));
        rec.robust_correct.push(!out.success);
        rec.clean_true_prob.push(p[ex.label]);
    }
    Ok(())
}

/// Appends an epoch using correctness bits gathered during training
/// (`robust_correct[i]` belongs to `train.examples()[i]`).
pub fn record_epoch_on_the_fly(
    records: &mut [ExampleRecord],
    epoch: usize,
    net: &Network,
    train: &Dataset,
    robust_correct: &[bool],
) -> Result<()> {
    check_epoch(records, train, epoch)?;
    if robust_correct.len() != train.len() {
        return Err(Error::Shape("one correctness bit per example required".into()));
    }
    for ((rec, ex), &ok) in records.iter_mut().zip(train.examples()).zip(robust_correct) {
        let p = softmax(&net.logits(&ex.features));
        rec.robust_correct.push(ok);
        rec.clean_true_prob.push(p[ex.label]);
    }
    Ok(())
}

/// Fraction of recorded epochs in which the example was robustly correct.
pub fn stability(record: &ExampleRecord) -> Result<f64> {
    stability_window(record, 0, record.epochs())
}

/// Stability restricted to epochs `start..end`.
pub fn stability_window(record: &ExampleRecord, start: usize, end: usize) -> Result<f64> {
    if end <= start || end > record.epochs() {
        return Err(Error::InvalidArgument(format!(
            "stability window {start}..{end} is empty or exceeds {} epochs",
            record.epochs()
        )));
    }
    let hits = record.robust_correct[start..end].iter().filter(|&&b| b).count();
    Ok(hits as f64 / (end - start) as f64)
}

/// Earliest epoch with a robustly correct prediction.
pub fn first_learned_epoch(record: &ExampleRecord) -> Option<usize> {
    record.robust_correct.iter().position(|&b| b)
}

/// Clean true-label probability at `best_epoch` for every record.
pub fn prediction_probability(records: &[ExampleRecord], best_epoch: usize) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            r.clean_true_prob.get(best_epoch).copied().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "record {} has no epoch {best_epoch} ({} recorded)",
                    r.example_id,
                    r.epochs()
                ))
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Stability,
    Probability,
    MinPerturbation,
    LearningOrder,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::Stability => "stability",
            Measure::Probability => "probability",
            Measure::MinPerturbation => "min_perturbation",
            Measure::LearningOrder => "learning_order",
        }
    }

    /// Whether a high score marks a low-quality example.
    pub fn high_is_low_quality(self) -> bool {
        self == Measure::LearningOrder
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stability" => Ok(Measure::Stability),
            "probability" => Ok(Measure::Probability),
            "min_perturbation" => Ok(Measure::MinPerturbation),
            "learning_order" => Ok(Measure::LearningOrder),
            other => Err(Error::InvalidArgument(format!("unknown quality measure `{other}`"))),
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Quality rank per example id; 1 is the lowest quality. Stored sorted by
/// id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRanking {
    pub measure: Measure,
    pub ensemble_size: usize,
    ids: Vec<u64>,
    ranks: Vec<f64>,
}

impl QualityRanking {
    pub fn new(measure: Measure, ensemble_size: usize, ids: Vec<u64>, ranks: Vec<f64>) -> Result<Self> {
        if ids.len() != ranks.len() {
            return Err(Error::Shape(format!("{} ids but {} ranks", ids.len(), ranks.len())));
        }
        if ensemble_size == 0 {
            return Err(Error::InvalidArgument("ensemble size must be positive".into()));
        }
        let mut pairs: Vec<(u64, f64)> = ids.into_iter().zip(ranks).collect();
        pairs.sort_by_key(|p| p.0);
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument(format!("duplicate id {} in ranking", w[0].0)));
        }
        let (ids, ranks) = pairs.into_iter().unzip();
        Ok(Self {
            measure,
            ensemble_size,
            ids,
            ranks,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    pub fn rank_of(&self, id: u64) -> Option<f64> {
        self.ids.binary_search(&id).ok().map(|i| self.ranks[i])
    }

    /// Ranks aligned with the dataset's example order. Errors if the
    /// ranking lacks any of the dataset's ids.
    pub fn ranks_for(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        dataset
            .examples()
            .iter()
            .map(|e| {
                self.rank_of(e.id)
                    .ok_or_else(|| Error::IdMismatch(format!("example {} has no quality rank", e.id)))
            })
            .collect()
    }
}

/// Ordinal ranks from raw scores. Low score means low quality unless the
/// measure says otherwise; ties go to the smaller id first.
pub fn quality_rank(ids: &[u64], scores: &[f64], measure: Measure) -> Result<QualityRanking> {
    if ids.is_empty() {
        return Err(Error::Empty("quality_rank needs at least one score".into()));
    }
    if ids.len() != scores.len() {
        return Err(Error::Shape(format!("{} ids but {} scores", ids.len(), scores.len())));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| {
        let by_score = if measure.high_is_low_quality() {
            scores[b].total_cmp(&scores[a])
        } else {
            scores[a].total_cmp(&scores[b])
        };
        by_score.then(ids[a].cmp(&ids[b]))
    });
    let mut ranks = vec![0.0; ids.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = (r + 1) as f64;
    }
    QualityRanking::new(measure, 1, ids.to_vec(), ranks)
}

/// Per-id mean rank over several runs.
pub fn ensemble_rank(rankings: &[QualityRanking]) -> Result<QualityRanking> {
    let first = rankings
        .first()
        .ok_or_else(|| Error::Empty("ensemble of zero rankings".into()))?;
    for (i, r) in rankings.iter().enumerate().skip(1) {
        if r.ids != first.ids {
            return Err(Error::IdMismatch(format!("ranking {i} covers different ids")));
        }
        if r.measure != first.measure {
            return Err(Error::InvalidArgument(format!(
                "ranking {i} uses {} but ranking 0 uses {}",
                r.measure, first.measure
            )));
        }
    }
    let size: usize = rankings.iter().map(|r| r.ensemble_size).sum();
    let ranks = (0..first.len())
        .map(|j| rankings.iter().map(|r| r.ranks[j] * r.ensemble_size as f64).sum::<f64>() / size as f64)
        .collect();
    QualityRanking::new(first.measure, size, first.ids.clone(), ranks)
}

/// Spearman's ρ between two rankings over the same ids.
pub fn spearman(a: &QualityRanking, b: &QualityRanking) -> Result<f64> {
    if a.ids != b.ids {
        return Err(Error::IdMismatch("rankings cover different ids".into()));
    }
    stats::spearman(&a.ranks, &b.ranks)
}

/// One row of the profile file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub id: u64,
    pub label: usize,
    pub stability: f64,
    pub first_learned_epoch: Option<usize>,
    pub probability: f64,
    pub min_perturbation: Option<f64>,
    pub quality_rank: f64,
}

/// Settings for the minimum-perturbation search at the best checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinPerturbationConfig {
    pub enabled: bool,
    pub step: f64,
    pub eps_max: f64,
}

impl Default for MinPerturbationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            step: 1.0 / 255.0,
            eps_max: 0.5,
        }
    }
}

/// Reduces completed records to profile rows, ranked by stability.
/// `best` is the best-checkpoint model and its epoch index.
pub fn build_profile(
    train: &Dataset,
    records: &[ExampleRecord],
    best_epoch: usize,
    best: &Network,
    min_pert: &MinPerturbationConfig,
) -> Result<Vec<ProfileRow>> {
    if records.len() != train.len() {
        return Err(Error::IdMismatch(format!("{} records for {} examples", records.len(), train.len())));
    }
    let probability = prediction_probability(records, best_epoch)?;
    let stab = records.iter().map(stability).collect::<Result<Vec<_>>>()?;
    let ids: Vec<u64> = records.iter().map(|r| r.example_id).collect();
    let ranking = quality_rank(&ids, &stab, Measure::Stability)?;
    let mut rows = Vec::with_capacity(records.len());
    for ((rec, ex), (&s, &p)) in records.iter().zip(train.examples()).zip(stab.iter().zip(&probability)) {
        if rec.example_id != ex.id {
            return Err(Error::IdMismatch(format!("record {} vs example {}", rec.example_id, ex.id)));
        }
        let mp = match rec.min_perturbation {
            Some(v) => Some(v),
            None if min_pert.enabled => {
                Some(attacks::min_perturbation(best, &ex.features, ex.label, min_pert.step, min_pert.eps_max)?.0)
            }
            None => None,
        };
        rows.push(ProfileRow {
            id: ex.id,
            label: ex.label,
            stability: s,
            first_learned_epoch: first_learned_epoch(rec),
            probability: p,
            min_perturbation: mp,
            quality_rank: ranking.rank_of(ex.id).expect("ranked above"),
        });
    }
    Ok(rows)
}

/// Ranking of profile rows under `measure`. Never-learned examples count
/// as learned after the last epoch.
pub fn rank_profile(rows: &[ProfileRow], measure: Measure, epochs: usize) -> Result<QualityRanking> {
    let ids: Vec<u64> = rows.iter().map(|r| r.id).collect();
    let scores: Vec<f64> = rows
        .iter()
        .map(|r| match measure {
            Measure::Stability => Ok(r.stability),
            Measure::Probability => Ok(r.probability),
            Measure::LearningOrder => Ok(r.first_learned_epoch.unwrap_or(epochs) as f64),
            Measure::MinPerturbation => r
                .min_perturbation
                .ok_or_else(|| Error::InvalidArgument(format!("example {} has no minimum perturbation", r.id))),
        })
        .collect::<Result<_>>()?;
    quality_rank(&ids, &scores, measure)
}

const PROFILE_HEADER: &str = "id,label,stability,first_learned_epoch,probability,min_perturbation,quality_rank";
const RANKING_MAGIC: &str = "# robustdata ranking v1";

/// Profile file: one header line, then one row per example. Absent
/// first-learned epochs and minimum perturbations are written as `-1`.
pub fn write_profile(rows: &[ProfileRow]) -> String {
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    for r in rows {
        let fl = r.first_learned_epoch.map_or(-1, |e| e as i64);
        let mp = r.min_perturbation.unwrap_or(-1.0);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.id, r.label, r.stability, fl, r.probability, mp, r.quality_rank
        );
    }
    out
}

pub fn save_profile(rows: &[ProfileRow], path: &Path) -> Result<()> {
    std::fs::write(path, write_profile(rows)).map_err(|e| Error::io(path, e))
}

pub fn read_profile(text: &str, path: &Path) -> Result<Vec<ProfileRow>> {
    let err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(PROFILE_HEADER) {
        return Err(err(1, "expected profile header".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 7 {
            return Err(err(n, format!("expected 7 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(n, format!("bad number `{s}`")));
        let fl: i64 = f[3].parse().map_err(|_| err(n, format!("bad epoch `{}`", f[3])))?;
        let mp = num(f[5])?;
        rows.push(ProfileRow {
            id: f[0].parse().map_err(|_| err(n, format!("bad id `{}`", f[0])))?,
            label: f[1].parse().map_err(|_| err(n, format!("bad label `{}`", f[1])))?,
            stability: num(f[2])?,
            first_learned_epoch: (fl >= 0).then_some(fl as usize),
            probability: num(f[4])?,
            min_perturbation: (mp >= 0.0).then_some(mp),
            quality_rank: num(f[6])?,
        });
    }
    if rows.is_empty() {
        return Err(Error::Empty(format!("profile `{}` has no rows", path.display())));
    }
    Ok(rows)
}

pub fn load_profile(path: &Path) -> Result<Vec<ProfileRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_profile(&text, path)
}

pub fn write_ranking(ranking: &QualityRanking) -> String {
    let mut out = format!(
        "{RANKING_MAGIC} measure={} ensemble_size={}\nid,rank\n",
        ranking.measure, ranking.ensemble_size
    );
    for (id, r) in ranking.ids.iter().zip(&ranking.ranks) {
        let _ = writeln!(out, "{id},{r}");
    }
    out
}

pub fn save_ranking(ranking: &QualityRanking, path: &Path) -> Result<()> {
    std::fs::write(path, write_ranking(ranking)).map_err(|e| Error::io(path, e))
}

/// Loads either a ranking file or a profile file (whose `quality_rank`
/// column is the stability rank).
pub fn load_ranking(path: &Path) -> Result<QualityRanking> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if !text.starts_with(RANKING_MAGIC) {
        let rows = read_profile(&text, path)?;
        return QualityRanking::new(
            Measure::Stability,
            1,
            rows.iter().map(|r| r.id).collect(),
            rows.iter().map(|r| r.quality_rank).collect(),
        );
    }
    let err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let field = |key: &str| {
        header
            .split_whitespace()
            .find_map(|t| t.strip_prefix(key)?.strip_prefix('='))
            .ok_or_else(|| err(1, format!("header lacks {key}=")))
    };
    let measure: Measure = field("measure")?.parse()?;
    let size: usize = field("ensemble_size")?
        .parse()
        .map_err(|_| err(1, "bad ensemble_size".into()))?;
    lines.next();
    let (mut ids, mut ranks) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line.split_once(',').ok_or_else(|| err(i + 3, "expected `id,rank`".into()))?;
        ids.push(a.trim().parse().map_err(|_| err(i + 3, format!("bad id `{a}`")))?);
        ranks.push(b.trim().parse().map_err(|_| err(i + 3, format!("bad rank `{b}`")))?);
    }
    if ids.is_empty() {
        return Err(Error::Empty(format!("ranking `{}` has no rows", path.display())));
    }
    QualityRanking::new(measure, size, ids, ranks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(bits: &[bool]) -> ExampleRecord {
        ExampleRecord {
            example_id: 0,
            label: 0,
            robust_correct: bits.to_vec(),
            clean_true_prob: vec![0.5; bits.len()],
            min_perturbation: None,
        }
    }

    #[test]
    fn stability_counts() {
        assert_eq!(stability(&rec(&[true; 10])).unwrap(), 1.0);
        assert_eq!(stability(&rec(&[false; 10])).unwrap(), 0.0);
        let mut bits = vec![false; 160];
        bits[..40].iter_mut().for_each(|b| *b = true);
        assert_eq!(stability(&rec(&bits)).unwrap(), 0.25);
        assert!(stability(&rec(&[])).is_err());
        assert_eq!(stability_window(&rec(&[false, true, true, false]), 1, 3).unwrap(), 1.0);
    }

    #[test]
    fn first_learned() {
        assert_eq!(first_learned_epoch(&rec(&[false, false, true, true])), Some(2));
        assert_eq!(first_learned_epoch(&rec(&[false, false])), None);
        assert_eq!(first_learned_epoch(&rec(&[true, true])), Some(0));
    }

    #[test]
    fn probability_indexes_best_epoch() {
        let mut r = rec(&[true, true, true]);
        r.clean_true_prob = vec![0.2, 0.9, 0.4];
        assert_eq!(prediction_probability(&[r.clone()], 1).unwrap(), vec![0.9]);
        assert!(prediction_probability(&[r], 3).is_err());
    }

    #[test]
    fn rank_examples() {
        let r = quality_rank(&[0, 1, 2], &[0.9, 0.1, 0.5], Measure::Stability).unwrap();
        assert_eq!(r.ranks(), &[3.0, 1.0, 2.0]);
        let r = quality_rank(&[0, 1, 2, 3], &[0.5; 4], Measure::Probability).unwrap();
        assert_eq!(r.ranks(), &[1.0, 2.0, 3.0, 4.0]);
        let r = quality_rank(&[0, 1, 2], &[5.0, 80.0, 20.0], Measure::LearningOrder).unwrap();
        assert_eq!(r.ranks(), &[3.0, 1.0, 2.0]);
        assert!(quality_rank(&[], &[], Measure::Stability).is_err());
    }

    #[test]
    fn ensemble_examples() {
        let a = quality_rank(&[0, 1, 2], &[1.0, 2.0, 3.0], Measure::Stability).unwrap();
        let b = quality_rank(&[0, 1, 2], &[3.0, 2.0, 1.0], Measure::Stability).unwrap();
        assert_eq!(ensemble_rank(std::slice::from_ref(&a)).unwrap(), a);
        let e = ensemble_rank(&[a.clone(), b]).unwrap();
        assert_eq!(e.ranks(), &[2.0, 2.0, 2.0]);
        assert_eq!(e.ensemble_size, 2);
        let c = quality_rank(&[0, 1, 5], &[1.0, 2.0, 3.0], Measure::Stability).unwrap();
        assert!(matches!(ensemble_rank(&[a.clone(), c]), Err(Error::IdMismatch(_))));
        let d = quality_rank(&[0, 1, 2], &[1.0, 2.0, 3.0], Measure::Probability).unwrap();
        assert!(ensemble_rank(&[a, d]).is_err());
    }

    #[test]
    fn spearman_of_rankings() {
        let a = QualityRanking::new(Measure::Stability, 1, vec![0, 1, 2, 3, 4], vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let b = QualityRanking::new(Measure::Stability, 1, vec![0, 1, 2, 3, 4], vec![1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
        assert_eq!(spearman(&a, &b).unwrap(), 0.8);
        assert_eq!(spearman(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn profile_and_ranking_files_round_trip() {
        let rows = vec![
            ProfileRow {
                id: 3,
                label: 1,
                stability: 0.25,
                first_learned_epoch: Some(4),
                probability: 0.123456789,
                min_perturbation: Some(3.0 / 255.0),
                quality_rank: 1.0,
            },
            ProfileRow {
                id: 7,
                label: 0,
                stability: 1.0,
                first_learned_epoch: None,
                probability: 0.99,
                min_perturbation: None,
                quality_rank: 2.0,
            },
        ];
        let back = read_profile(&write_profile(&rows), Path::new("p")).unwrap();
        assert_eq!(back, rows);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        save_profile(&rows, &path).unwrap();
        let r = load_ranking(&path).unwrap();
        assert_eq!(r.rank_of(7), Some(2.0));
        let e = ensemble_rank(&[r.clone(), r]).unwrap();
        let path = dir.path().join("r.csv");
        save_ranking(&e, &path).unwrap();
        assert_eq!(load_ranking(&path).unwrap(), e);
    }

    proptest! {
        #[test]
        fn rank_is_bijection_and_monotone_invariant(scores in proptest::collection::vec(-10.0f64..10.0, 1..40)) {
            let ids: Vec<u64> = (0..scores.len() as u64).map(|i| i * 3 + 1).collect();
            let r = quality_rank(&ids, &scores, Measure::Stability).unwrap();
            let mut sorted = r.ranks().to_vec();
            sorted.sort_by(f64::total_cmp);
            let expected: Vec<f64> = (1..=scores.len()).map(|v| v as f64).collect();
            prop_assert_eq!(&sorted, &expected);
            let transformed: Vec<f64> = scores.iter().map(|s| (s / 3.0).exp() + 7.0).collect();
            let r2 = quality_rank(&ids, &transformed, Measure::Stability).unwrap();
            prop_assert_eq!(r.ranks(), r2.ranks());
        }

        #[test]
        fn stability_is_one_iff_always_learned(bits in proptest::collection::vec(any::<bool>(), 1..50)) {
            let r = rec(&bits);
            let s = stability(&r).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            let always = first_learned_epoch(&r) == Some(0) && bits.iter().all(|&b| b);
            prop_assert_eq!(s == 1.0, always);
        }
    }
}
