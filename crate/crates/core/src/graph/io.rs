//! Plain-text edge-list format.
//!
//! ```text
//! # comment
//! n 3
//! 0 1 1.0
//! 1 2 2.5
//! ```
//!
//! A series is a directory of `snapshot_0000.edges`, `snapshot_0001.edges`, …

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{DynamicGraph, Edge, GraphSnapshot};
use crate::error::{Error, Result};

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<GraphSnapshot> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text, path)
}

/// Parses edge-list text; `origin` is only used in error messages.
pub fn parse_snapshot(text: &str, origin: &Path) -> Result<GraphSnapshot> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut node_count: Option<usize> = None;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(n) = node_count else {
            match fields.as_slice() {
                ["n", count] => {
                    let count = count
                        .parse::<usize>()
                        .map_err(|_| err(lineno, format!("invalid node count {count:?}")))?;
                    node_count = Some(count);
                    continue;
                }
                _ => return Err(err(lineno, "missing `n <node_count>` header".into())),
            }
        };
        let [i, j, w] = fields.as_slice() else {
            return Err(err(lineno, format!("expected `<i> <j> <w>`, got {line:?}")));
        };
        let i: usize = i
            .parse()
            .map_err(|_| err(lineno, format!("invalid index {i:?}")))?;
        let j: usize = j
            .parse()
            .map_err(|_| err(lineno, format!("invalid index {j:?}")))?;
        let w: f64 = w
            .parse()
            .map_err(|_| err(lineno, format!("invalid weight {w:?}")))?;
        if i >= n || j >= n {
            return Err(err(
                lineno,
                format!("index {} out of range for {n} nodes", i.max(j)),
            ));
        }
        if i == j {
            return Err(err(lineno, format!("self-loop on node {i}")));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(err(lineno, format!("weight must be positive, got {w}")));
        }
        let edge = Edge::new(i, j, w);
        if !seen.insert((edge.u, edge.v)) {
            return Err(err(
                lineno,
                format!("duplicate undirected edge ({}, {})", edge.u, edge.v),
            ));
        }
        edges.push(edge);
    }

    let n = node_count.ok_or_else(|| err(0, "missing `n <node_count>` header".into()))?;
    GraphSnapshot::from_edges(n, edges)
}

pub fn write_snapshot<W: Write>(graph: &GraphSnapshot, mut out: W) -> std::io::Result<()> {
    writeln!(out, "n {}", graph.node_count())?;
    for e in graph.edges() {
        writeln!(out, "{} {} {}", e.u, e.v, e.weight)?;
    }
    Ok(())
}

pub fn save_snapshot(graph: &GraphSnapshot, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_snapshot(graph, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn snapshot_file_name(t: usize) -> String {
    format!("snapshot_{t:04}.edges")
}

/// Writes every snapshot into `dir`, creating it if needed.
pub fn save_series(series: &DynamicGraph, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    series
        .snapshots()
        .iter()
        .enumerate()
        .map(|(t, g)| {
            let path = dir.join(snapshot_file_name(t));
            save_snapshot(g, &path).map(|_| path)
        })
        .collect()
}

/// Loads all `snapshot_*.edges` files of `dir` in lexicographic order.
pub fn load_series(dir: impl AsRef<Path>) -> Result<DynamicGraph> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snapshot_") && n.ends_with(".edges"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::config(format!(
            "no snapshot_*.edges files in {}",
            dir.display()
        )));
    }
    let snapshots = files
        .iter()
        .map(load_snapshot)
        .collect::<Result<Vec<_>>>()?;
    DynamicGraph::new(snapshots)
}
