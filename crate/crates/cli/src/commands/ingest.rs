use std::collections::{BTreeMap, HashMap};
use std::fs;

use dyngem::graph::{save_series, DynamicGraph, Edge, GraphSnapshot};
use serde::Serialize;

use crate::args::IngestArgs;
use crate::artifacts::{
    ensure_dir, read_ids, write_ids, write_json, IDS, MANIFEST, SCHEMA_VERSION,
};
use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Serialize)]
pub struct IngestManifest {
    pub schema_version: u32,
    pub command: String,
    pub events: String,
    pub node_counts: Vec<usize>,
    pub edge_counts: Vec<usize>,
    pub self_loops_dropped: usize,
}

struct Event {
    step: usize,
    src: String,
    dst: String,
    weight: f64,
}

fn parse_events(text: &str, origin: &std::path::Path) -> CliResult<Vec<Event>> {
    let mut events = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| CliError::invalid(format!("{}:{}: {what}", origin.display(), k + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(bad("expected `<step> <src> <dst> [weight]`"));
        }
        let step = fields[0]
            .parse()
            .map_err(|_| bad("step must be a non-negative integer"))?;
        let weight = match fields.get(3) {
            Some(w) => w
                .parse::<f64>()
                .ok()
                .filter(|w| *w > 0.0 && w.is_finite())
                .ok_or_else(|| bad("weight must be positive"))?,
            None => 1.0,
        };
        events.push(Event {
            step,
            src: fields[1].to_string(),
            dst: fields[2].to_string(),
            weight,
        });
    }
    if events.is_empty() {
        return Err(CliError::invalid(format!(
            "{}: no events",
            origin.display()
        )));
    }
    Ok(events)
}

/// Builds one snapshot per step. Repeated pairs within a step add their
/// weights; self-loops are dropped. Without a mapping, ids are numbered by
/// first appearance so the node set only grows.
pub fn ingest(args: &IngestArgs) -> CliResult<IngestManifest> {
    let text = fs::read_to_string(&args.events).at(&args.events)?;
    let mut events = parse_events(&text, &args.events)?;
    events.sort_by_key(|e| e.step);

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let fixed = args.ids.is_some();
    if let Some(path) = &args.ids {
        let pairs = read_ids(path)?;
        names = vec![String::new(); pairs.len()];
        for (name, k) in pairs {
            if k >= names.len() || !names[k].is_empty() || index.insert(name.clone(), k).is_some() {
                return Err(CliError::invalid(format!(
                    "{}: indices must be a permutation of 0..{} and ids unique",
                    path.display(),
                    names.len()
                )));
            }
            names[k] = name;
        }
    }

    let steps = events.last().map(|e| e.step + 1).unwrap_or(0);
    let mut per_step: Vec<BTreeMap<(usize, usize), f64>> = vec![BTreeMap::new(); steps];
    let mut counts = vec![0usize; steps];
    let mut self_loops = 0;
    for e in &events {
        let mut lookup = |id: &str| -> CliResult<usize> {
            if let Some(&k) = index.get(id) {
                return Ok(k);
            }
            if fixed {
                return Err(CliError::invalid(format!(
                    "id {id:?} missing from the id mapping"
                )));
            }
            index.insert(id.to_string(), names.len());
            names.push(id.to_string());
            Ok(names.len() - 1)
        };
        let (a, b) = (lookup(&e.src)?, lookup(&e.dst)?);
        counts[e.step] = names.len();
        if a == b {
            self_loops += 1;
            continue;
        }
        *per_step[e.step].entry((a.min(b), a.max(b))).or_insert(0.0) += e.weight;
    }
    if self_loops > 0 {
        log::warn!("dropped {self_loops} self-loop events");
    }

    let mut snapshots = Vec::with_capacity(steps);
    let mut n = 0;
    for (t, edges) in per_step.into_iter().enumerate() {
        n = if fixed { names.len() } else { n.max(counts[t]) };
        snapshots.push(GraphSnapshot::from_edges(
            n,
            edges.into_iter().map(|((u, v), w)| Edge::new(u, v, w)),
        )?);
    }
    let series = DynamicGraph::new(snapshots)?;
    ensure_dir(&args.out)?;
    save_series(&series, &args.out)?;
    write_ids(&args.out.join(IDS), &names)?;
    let manifest = IngestManifest {
        schema_version: SCHEMA_VERSION,
        command: "ingest".into(),
        events: args.events.display().to_string(),
        node_counts: series.node_counts(),
        edge_counts: series.snapshots().iter().map(|s| s.edge_count()).collect(),
        self_loops_dropped: self_loops,
    };
    write_json(&args.out.join(MANIFEST), &manifest)?;
    Ok(manifest)
}
