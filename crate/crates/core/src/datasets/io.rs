//! Delimited text formats.
//!
//! Dataset file:
//!
//! ```text
//! # robustdata dataset v1 dim=<d> classes=<k>
//! id,label,x0,...,x<d-1>
//! <id>,<label>,<f64>,...
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a save
//! followed by a load reproduces every value exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{Dataset, Example};
use crate::{Error, Result};

const MAGIC: &str = "# robustdata dataset v1";

pub fn write_delimited(dataset: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} dim={} classes={}", dataset.dim(), dataset.classes());
    out.push_str("id,label");
    for j in 0..dataset.dim() {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for e in dataset.examples() {
        let _ = write!(out, "{},{}", e.id, e.label);
        for v in &e.features {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn header_value(header: &str, key: &str) -> Option<usize> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

/// Parses the dataset format; `path` only labels errors.
pub fn read_delimited(text: &str, path: &Path) -> Result<Dataset> {
    let err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let Some((_, header)) = lines.next() else {
        return Err(Error::Empty(format!("dataset file `{}` is empty", path.display())));
    };
    if !header.starts_with(MAGIC) {
        return Err(err(1, "missing dataset header".into()));
    }
    let dim = header_value(header, "dim").ok_or_else(|| err(1, "header lacks dim=".into()))?;
    let classes = header_value(header, "classes").ok_or_else(|| err(1, "header lacks classes=".into()))?;
    if dim == 0 || classes < 2 {
        return Err(err(1, "dim must be positive and classes at least 2".into()));
    }
    match lines.next() {
        Some((_, cols)) if cols.starts_with("id,label") => {}
        Some((n, _)) => return Err(err(n, "expected column header `id,label,...`".into())),
        None => return Err(Error::Empty(format!("dataset file `{}` has no examples", path.display()))),
    }
    let mut examples = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(err(n, format!("expected {} fields, found {}", dim + 2, fields.len())));
        }
        let id: u64 = fields[0].trim().parse().map_err(|_| err(n, format!("bad id `{}`", fields[0])))?;
        let label: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| err(n, format!("bad label `{}`", fields[1])))?;
        if label >= classes {
            return Err(err(n, format!("label {label} out of range for {classes} classes")));
        }
        let mut features = Vec::with_capacity(dim);
        for f in &fields[2..] {
            let v: f64 = f.trim().parse().map_err(|_| err(n, format!("bad feature `{f}`")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(err(n, format!("feature {v} outside [0, 1]")));
            }
            features.push(v);
        }
        if !ids.insert(id) {
            return Err(err(n, format!("duplicate id {id}")));
        }
        examples.push(Example { id, features, label });
    }
    if examples.is_empty() {
        return Err(Error::Empty(format!("dataset file `{}` has no examples", path.display())));
    }
    Dataset::new(dim, classes, examples)
}

pub fn save_delimited(dataset: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, write_delimited(dataset)).map_err(|e| Error::io(path, e))
}

pub fn load_delimited(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_delimited(&text, path)
}

/// `id,ambiguity` rows for the generator's ground-truth oracle.
pub fn save_ambiguity(ids: &[u64], ambiguity: &[f64], path: &Path) -> Result<()> {
    let mut out = String::from("id,ambiguity\n");
    for (id, a) in ids.iter().zip(ambiguity) {
        let _ = writeln!(out, "{id},{a}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_ambiguity(path: &Path) -> Result<Vec<(u64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parse = || -> Option<(u64, f64)> {
            let (a, b) = line.split_once(',')?;
            Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
        };
        rows.push(parse().ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: format!("bad ambiguity row `{line}`"),
        })?);
    }
    Ok(rows)
}
