//! On-disk layout of series, runs and exports.

use std::fs;
use std::path::{Path, PathBuf};

use dyngem::engine::{GrowthEvent, RunConfig, StepRecord};
use dyngem::graph::SbmConfig;
use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const LABELS: &str = "labels.csv";
pub const IDS: &str = "ids.csv";
pub const LONG_EMBEDDINGS: &str = "embeddings_long.csv";
pub const DELTAS: &str = "deltas.csv";

pub fn embedding_file_name(t: usize) -> String {
    format!("emb_{t:04}.csv")
}

pub fn checkpoint_file_name(t: usize) -> String {
    format!("model_{t:04}.ckpt")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateManifest {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: SbmConfig,
    pub snapshots: Vec<String>,
    pub labels: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    /// Series directory the run was trained on.
    pub input: PathBuf,
    pub config: RunConfig,
    pub steps: Vec<StepRecord>,
    pub growth: Vec<GrowthEvent>,
    pub embeddings: Vec<String>,
    /// Checkpoint file per step, where one was written.
    pub checkpoints: Vec<Option<String>>,
    pub total_seconds: f64,
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).at(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).at(path)?;
    text.push('\n');
    fs::write(path, text).at(path)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).at(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

/// The run manifest of `dir`, if it has one.
pub fn read_run_manifest(dir: &Path) -> CliResult<Option<RunManifest>> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Ok(None);
    }
    read_json(&path).map(Some)
}

/// Accepts either a manifest file or a directory holding one.
pub fn read_run_manifest_at(path: &Path) -> CliResult<RunManifest> {
    let file = if path.is_dir() {
        path.join(MANIFEST)
    } else {
        path.to_path_buf()
    };
    read_json(&file)
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).at(path)
}

fn header(d: usize, leading: &[&str]) -> Vec<String> {
    leading
        .iter()
        .map(|s| s.to_string())
        .chain((1..=d).map(|k| format!("y{k}")))
        .collect()
}

/// `node,y1..yd` with one row per node in index order.
pub fn write_embedding_csv(path: &Path, embedding: &Array2<f64>) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header(embedding.ncols(), &["node"]))
        .at(path)?;
    for (i, row) in embedding.rows().into_iter().enumerate() {
        let record = std::iter::once(i.to_string()).chain(row.iter().map(|v| v.to_string()));
        w.write_record(record).at(path)?;
    }
    w.flush().at(path)
}

fn parse_value(path: &Path, line: u64, field: &str) -> CliResult<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::invalid(format!("{}:{line}: bad value {field:?}", path.display())))
}

fn parse_index(path: &Path, line: u64, field: &str) -> CliResult<usize> {
    field
        .parse::<usize>()
        .map_err(|_| CliError::invalid(format!("{}:{line}: bad index {field:?}", path.display())))
}

fn check_header(path: &Path, found: &csv::StringRecord, leading: &[&str]) -> CliResult<usize> {
    let d = found.len().saturating_sub(leading.len());
    if d == 0 || found.iter().collect::<Vec<_>>() != header(d, leading) {
        return Err(CliError::invalid(format!(
            "{}: expected header {}",
            path.display(),
            header(1, leading).join(",").replace("y1", "y1..yd")
        )));
    }
    Ok(d)
}

pub fn read_embedding_csv(path: &Path) -> CliResult<Array2<f64>> {
    let mut r = csv::Reader::from_path(path).at(path)?;
    let d = check_header(path, &r.headers().at(path)?.clone(), &["node"])?;
    let mut values = Vec::new();
    let mut rows = 0;
    for record in r.records() {
        let record = record.at(path)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if parse_index(path, line, &record[0])? != rows {
            return Err(CliError::invalid(format!(
                "{}:{line}: rows must list nodes 0, 1, … in order",
                path.display()
            )));
        }
        for field in record.iter().skip(1) {
            values.push(parse_value(path, line, field)?);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, d), values)
        .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

/// All `emb_*.csv` files of a run directory, in step order.
pub fn read_run_embeddings(dir: &Path) -> CliResult<Vec<Array2<f64>>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .at(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("emb_") && n.ends_with(".csv"))
        })
        .collect();
    if files.is_empty() {
        return Err(CliError::invalid(format!(
            "{}: no embedding files",
            dir.display()
        )));
    }
    files.sort();
    files.iter().map(|p| read_embedding_csv(p)).collect()
}

/// `t,node,y1..yd` rows for every step.
pub fn write_long_csv(path: &Path, embeddings: &[Array2<f64>]) -> CliResult<()> {
    let d = embeddings.first().map(|e| e.ncols()).unwrap_or(0);
    let mut w = csv_writer(path)?;
    w.write_record(header(d, &["t", "node"])).at(path)?;
    for (t, emb) in embeddings.iter().enumerate() {
        for (i, row) in emb.rows().into_iter().enumerate() {
            let record = [t.to_string(), i.to_string()]
                .into_iter()
                .chain(row.iter().map(|v| v.to_string()));
            w.write_record(record).at(path)?;
        }
    }
    w.flush().at(path)
}

pub fn read_long_csv(path: &Path) -> CliResult<Vec<Array2<f64>>> {
    let mut r = csv::Reader::from_path(path).at(path)?;
    let d = check_header(path, &r.headers().at(path)?.clone(), &["t", "node"])?;
    let mut steps: Vec<Vec<f64>> = Vec::new();
    for record in r.records() {
        let record = record.at(path)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let t = parse_index(path, line, &record[0])?;
        let node = parse_index(path, line, &record[1])?;
        if t == steps.len() {
            steps.push(Vec::new());
        }
        if t + 1 != steps.len() || node * d != steps[t].len() {
            return Err(CliError::invalid(format!(
                "{}:{line}: rows must be ordered by step, then node",
                path.display()
            )));
        }
        for field in record.iter().skip(2) {
            steps[t].push(parse_value(path, line, field)?);
        }
    }
    if steps.is_empty() {
        return Err(CliError::invalid(format!(
            "{}: no embeddings",
            path.display()
        )));
    }
    steps
        .into_iter()
        .map(|v| {
            let rows = v.len() / d;
            Array2::from_shape_vec((rows, d), v).map_err(|e| CliError::invalid(e.to_string()))
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[Vec<usize>]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["step", "node", "community"]).at(path)?;
    for (t, step) in labels.iter().enumerate() {
        for (node, c) in step.iter().enumerate() {
            w.write_record([t.to_string(), node.to_string(), c.to_string()])
                .at(path)?;
        }
    }
    w.flush().at(path)
}

pub fn write_deltas(path: &Path, deltas: &[(usize, f64)]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "delta"]).at(path)?;
    for (t, delta) in deltas {
        w.write_record([t.to_string(), delta.to_string()])
            .at(path)?;
    }
    w.flush().at(path)
}

/// `external-id,internal-index` pairs.
pub fn read_ids(path: &Path) -> CliResult<Vec<(String, usize)>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .at(path)?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.at(path)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(CliError::invalid(format!(
                "{}:{line}: expected external-id,internal-index",
                path.display()
            )));
        }
        out.push((record[0].to_string(), parse_index(path, line, &record[1])?));
    }
    Ok(out)
}

pub fn write_ids(path: &Path, ids: &[String]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .at(path)?;
    for (k, id) in ids.iter().enumerate() {
        w.write_record([id.as_str(), &k.to_string()]).at(path)?;
    }
    w.flush().at(path)
}
