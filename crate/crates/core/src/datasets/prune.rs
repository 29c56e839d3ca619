use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::profiler::QualityRanking;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalMode {
    Random,
    AscendingQuality,
}

impl RemovalMode {
    pub fn name(self) -> &'static str {
        match self {
            RemovalMode::Random => "random",
            RemovalMode::AscendingQuality => "ascending_quality",
        }
    }
}

impl std::fmt::Display for RemovalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RemovalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(RemovalMode::Random),
            "ascending_quality" => Ok(RemovalMode::AscendingQuality),
            other => Err(Error::InvalidArgument(format!(
                "unknown removal mode `{other}` (expected random or ascending_quality)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pruned {
    pub kept: Dataset,
    pub manifest: Manifest,
}

/// Provenance for one removal: which ids left the dataset and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub mode: RemovalMode,
    pub fraction: f64,
    pub seed: u64,
    pub original_size: usize,
    /// Ascending.
    pub removed: Vec<u64>,
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("removal fraction {fraction} must lie in [0, 1)")));
    }
    Ok(())
}

/// Removal order over `positions`: lowest quality first, or a seeded
/// shuffle. Prefixes of this order are the removed sets, so survivors are
/// nested across fractions.
fn removal_order(dataset: &Dataset, ranks: &[f64], positions: &mut [usize], mode: RemovalMode, seed: u64) {
    let ex = dataset.examples();
    positions.sort_by_key(|&i| ex[i].id);
    match mode {
        RemovalMode::AscendingQuality => {
            positions.sort_by(|&a, &b| ranks[a].total_cmp(&ranks[b]).then(ex[a].id.cmp(&ex[b].id)));
        }
        RemovalMode::Random => positions.shuffle(&mut rng::stream(seed, &[rng::PRUNE])),
    }
}

fn finish(dataset: &Dataset, remove: Vec<usize>, mode: RemovalMode, fraction: f64, seed: u64) -> Pruned {
    let mut gone = vec![false; dataset.len()];
    for &i in &remove {
        gone[i] = true;
    }
    let kept: Vec<usize> = (0..dataset.len()).filter(|&i| !gone[i]).collect();
    let mut removed: Vec<u64> = remove.iter().map(|&i| dataset.examples()[i].id).collect();
    removed.sort_unstable();
    Pruned {
        kept: dataset.select(&kept),
        manifest: Manifest {
            mode,
            fraction,
            seed,
            original_size: dataset.len(),
            removed,
        },
    }
}

/// Removes `floor(fraction n)` examples globally: the lowest-ranked ones,
/// or a uniform sample. Survivor order and ids are preserved.
pub fn remove_fraction(
    dataset: &Dataset,
    ranking: &QualityRanking,
    fraction: f64,
    mode: RemovalMode,
    seed: u64,
) -> Result<Pruned> {
    check_fraction(fraction)?;
    let ranks = ranking.ranks_for(dataset)?;
    let k = (fraction * dataset.len() as f64).floor() as usize;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    removal_order(dataset, &ranks, &mut order, mode, seed);
    order.truncate(k);
    Ok(finish(dataset, order, mode, fraction, seed))
}

/// Like [`remove_fraction`] but removes `floor(fraction n_c)` from every
/// class separately, keeping the class histogram proportional.
pub fn remove_fraction_classwise(
    dataset: &Dataset,
    ranking: &QualityRanking,
    fraction: f64,
    mode: RemovalMode,
    seed: u64,
) -> Result<Pruned> {
    check_fraction(fraction)?;
    let ranks = ranking.ranks_for(dataset)?;
    let mut remove = Vec::new();
    for c in 0..dataset.classes() {
        let mut members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.examples()[i].label == c).collect();
        let k = (fraction * members.len() as f64).floor() as usize;
        removal_order(dataset, &ranks, &mut members, mode, rng::derive_seed(seed, &[c as u64]));
        remove.extend_from_slice(&members[..k]);
    }
    Ok(finish(dataset, remove, mode, fraction, seed))
}

const MANIFEST_MAGIC: &str = "# robustdata prune manifest v1";

pub fn save_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{MANIFEST_MAGIC}");
    let _ = writeln!(
        out,
        "# mode={} fraction={} seed={} n={} removed={}",
        manifest.mode,
        manifest.fraction,
        manifest.seed,
        manifest.original_size,
        manifest.removed.len()
    );
    out.push_str("id\n");
    for id in &manifest.removed {
        let _ = writeln!(out, "{id}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, reason: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.to_string(),
    };
    let mut lines = text.lines();
    if lines.next() != Some(MANIFEST_MAGIC) {
        return Err(err(1, "missing manifest header"));
    }
    let meta = lines.next().ok_or_else(|| err(2, "missing metadata line"))?;
    let get = |key: &str| {
        meta.split_whitespace()
            .find_map(|t| t.strip_prefix(key)?.strip_prefix('='))
            .ok_or_else(|| err(2, "incomplete metadata"))
    };
    let mode: RemovalMode = get("mode")?.parse()?;
    let fraction: f64 = get("fraction")?.parse().map_err(|_| err(2, "bad fraction"))?;
    let seed: u64 = get("seed")?.parse().map_err(|_| err(2, "bad seed"))?;
    let original_size: usize = get("n")?.parse().map_err(|_| err(2, "bad n"))?;
    let count: usize = get("removed")?.parse().map_err(|_| err(2, "bad removed count"))?;
    lines.next();
    let mut removed = Vec::with_capacity(count);
    for (i, l) in lines.enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        removed.push(l.trim().parse().map_err(|_| err(i + 4, "bad id"))?);
    }
    if removed.len() != count {
        return Err(err(2, "removed count does not match the id list"));
    }
    Ok(Manifest {
        mode,
        fraction,
        seed,
        original_size,
        removed,
    })
}
