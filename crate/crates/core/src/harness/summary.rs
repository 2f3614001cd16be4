use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::trial::{EvalPoint, CONFIG_FILE, EVAL_FILE};
use crate::error::{Error, Result};

/// Mean and standard error across seeds at one evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub episode: usize,
    pub method: String,
    pub mean: f64,
    pub stderr: f64,
}

/// Reads a trial's evaluation CSV.
pub fn read_eval_csv(path: &Path) -> Result<Vec<EvalPoint>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(f);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| Error::Invalid(format!("{}: short row", path.display())))
        };
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Invalid(format!("{}: bad number `{s}`", path.display())))
        };
        let episode = field(0)?
            .parse()
            .map_err(|_| Error::Invalid(format!("{}: bad episode", path.display())))?;
        let mean_return = parse(field(1)?)?;
        let returns = (2..rec.len()).map(|i| parse(&rec[i])).collect::<Result<_>>()?;
        out.push(EvalPoint {
            episode,
            mean_return,
            returns,
        });
    }
    Ok(out)
}

/// Per-episode mean and standard error over seeds; the sample standard
/// deviation uses `n - 1` and a single seed gives zero error.
pub fn aggregate_curves(method: &str, curves: &[Vec<EvalPoint>]) -> Result<Vec<SummaryRow>> {
    let Some(first) = curves.first() else {
        return Err(Error::Invalid(format!("no runs for method `{method}`")));
    };
    let grid: Vec<usize> = first.iter().map(|p| p.episode).collect();
    for c in curves {
        let g: Vec<usize> = c.iter().map(|p| p.episode).collect();
        if g != grid {
            return Err(Error::Invalid(format!(
                "evaluation grids differ between runs of `{method}`"
            )));
        }
    }
    let n = curves.len() as f64;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(k, &episode)| {
            let xs: Vec<f64> = curves.iter().map(|c| c[k].mean_return).collect();
            let mean = xs.iter().sum::<f64>() / n;
            let stderr = if curves.len() > 1 {
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                episode,
                method: method.to_string(),
                mean,
                stderr,
            }
        })
        .collect())
}

/// Centered moving average of `mean` and `stderr` over `window` points,
/// truncated at the edges. An even window extends one further to the right.
pub fn smooth(rows: &[SummaryRow], window: usize) -> Vec<SummaryRow> {
    let w = window.max(1);
    let left = (w - 1) / 2;
    let right = w / 2;
    (0..rows.len())
        .map(|k| {
            let lo = k.saturating_sub(left);
            let hi = (k + right).min(rows.len() - 1);
            let span = &rows[lo..=hi];
            let m = span.len() as f64;
            SummaryRow {
                episode: rows[k].episode,
                method: rows[k].method.clone(),
                mean: span.iter().map(|r| r.mean).sum::<f64>() / m,
                stderr: span.iter().map(|r| r.stderr).sum::<f64>() / m,
            }
        })
        .collect()
}

/// Trial directories under `path`: itself if it holds an evaluation CSV,
/// otherwise its immediate subdirectories that do, sorted by name.
pub fn trial_dirs(path: &Path) -> Result<Vec<PathBuf>> {
    if path.join(EVAL_FILE).is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(EVAL_FILE).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Invalid(format!("no trial results under {}", path.display())));
    }
    Ok(dirs)
}

/// Groups every trial under `paths` by method and aggregates each group.
pub fn aggregate_dirs(paths: &[PathBuf]) -> Result<Vec<SummaryRow>> {
    let mut groups: BTreeMap<String, Vec<Vec<EvalPoint>>> = BTreeMap::new();
    for p in paths {
        for dir in trial_dirs(p)? {
            let cfg = RunConfig::load(&dir.join(CONFIG_FILE))?;
            groups
                .entry(cfg.method())
                .or_default()
                .push(read_eval_csv(&dir.join(EVAL_FILE))?);
        }
    }
    let mut out = Vec::new();
    for (method, curves) in &groups {
        out.extend(aggregate_curves(method, curves)?);
    }
    Ok(out)
}

/// Smooths each method's rows independently.
pub fn smooth_by_method(rows: &[SummaryRow], window: usize) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<&str, Vec<SummaryRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(&r.method).or_default().push(r.clone());
    }
    groups.values().flat_map(|g| smooth(g, window)).collect()
}

/// Writes `episode,method,mean,stderr` rows.
pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(f);
    w.write_record(["episode", "method", "mean", "stderr"])?;
    for r in rows {
        w.write_record([
            r.episode.to_string(),
            r.method.clone(),
            r.mean.to_string(),
            r.stderr.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(f);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
