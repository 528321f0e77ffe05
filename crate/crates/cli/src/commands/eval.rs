use std::path::{Path, PathBuf};

use dyngem::engine::{run_observed, Method, StepOutput};
use dyngem::graph::{load_series, DynamicGraph};
use dyngem::metrics::{
    anomaly_series, eval_link_prediction, eval_reconstruction, expected_speedup, random_scores,
    stability_constant, ThresholdRule,
};
use dyngem::model::{load_checkpoint, reconstruct_scores, symmetrize, AutoencoderParams};
use ndarray::Array2;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    AnomalyArgs, EmbeddingSource, EvalCommand, LinkpredArgs, ReconstructionArgs, ScoreKind,
    SeriesEvalArgs, SpeedupArgs,
};
use crate::artifacts::{
    read_long_csv, read_run_embeddings, read_run_manifest, read_run_manifest_at, write_json,
    RunManifest, SCHEMA_VERSION,
};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub kind: String,
    pub method: Option<String>,
    pub config: Value,
    pub per_step: Vec<Value>,
    pub aggregate: Value,
}

impl Report {
    fn new(
        kind: &str,
        manifest: Option<&RunManifest>,
        per_step: Vec<Value>,
        aggregate: Value,
    ) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            kind: kind.into(),
            method: manifest.map(|m| m.config.method.to_string()),
            config: manifest.map(|m| json!(m.config)).unwrap_or(Value::Null),
            per_step,
            aggregate,
        }
    }
}

struct Loaded {
    embeddings: Vec<Array2<f64>>,
    manifest: Option<RunManifest>,
    run_dir: Option<PathBuf>,
}

fn load_source(source: &EmbeddingSource) -> CliResult<Loaded> {
    match (&source.run, &source.embeddings) {
        (Some(dir), _) => Ok(Loaded {
            embeddings: read_run_embeddings(dir)?,
            manifest: read_run_manifest(dir)?,
            run_dir: Some(dir.clone()),
        }),
        (None, Some(file)) => Ok(Loaded {
            embeddings: read_long_csv(file)?,
            manifest: None,
            run_dir: None,
        }),
        (None, None) => Err(CliError::invalid("give --run or --embeddings")),
    }
}

fn resolve_series(
    input: Option<&Path>,
    manifest: Option<&RunManifest>,
    steps: usize,
) -> CliResult<DynamicGraph> {
    let dir = input
        .map(Path::to_path_buf)
        .or_else(|| manifest.map(|m| m.input.clone()))
        .ok_or_else(|| {
            CliError::invalid("--in is required when the embeddings carry no manifest")
        })?;
    let series = load_series(&dir)?;
    if series.len() != steps {
        return Err(CliError::invalid(format!(
            "{} embedding steps but {} snapshots in {}",
            steps,
            series.len(),
            dir.display()
        )));
    }
    Ok(series)
}

fn dot_scores(y: &Array2<f64>) -> Array2<f64> {
    y.dot(&y.t())
}

/// Pair scores for a trained autoencoder (decoder output, symmetrised).
pub fn decoder_scores(
    model: &AutoencoderParams,
    snapshot: &dyngem::graph::GraphSnapshot,
) -> CliResult<Array2<f64>> {
    Ok(symmetrize(&reconstruct_scores(model, snapshot)?))
}

pub fn reconstruction(args: &ReconstructionArgs) -> CliResult<Report> {
    let loaded = load_source(&args.source)?;
    let manifest = loaded.manifest.as_ref();
    let series = resolve_series(args.input.as_deref(), manifest, loaded.embeddings.len())?;
    let mut per_step = Vec::new();
    let (mut total, mut null_total) = (0.0, 0.0);
    for (t, emb) in loaded.embeddings.iter().enumerate() {
        let checkpoint = manifest
            .and_then(|m| m.checkpoints.get(t).cloned().flatten())
            .zip(loaded.run_dir.as_ref())
            .map(|(name, dir)| dir.join(name));
        let (scores, kind) = match (args.scores, checkpoint) {
            (ScoreKind::Dot, _) | (ScoreKind::Auto, None) => (dot_scores(emb), "dot"),
            (_, Some(path)) => (
                decoder_scores(&load_checkpoint(&path)?, &series[t])?,
                "decoder",
            ),
            (ScoreKind::Decoder, None) => {
                return Err(CliError::invalid(format!(
                    "step {t} has no checkpoint for decoder scores"
                )));
            }
        };
        if scores.nrows() != series[t].node_count() {
            return Err(CliError::invalid(format!(
                "step {t}: embedding rows do not match the snapshot"
            )));
        }
        let map = eval_reconstruction(scores.view(), &series[t])?;
        total += map;
        let mut row = json!({"step": t, "nodes": series[t].node_count(), "edges": series[t].edge_count(), "scores": kind, "map": map});
        if let Some(seed) = args.null_seed {
            let null_map = eval_reconstruction(
                random_scores(series[t].node_count(), seed ^ t as u64).view(),
                &series[t],
            )?;
            null_total += null_map;
            row["null_map"] = json!(null_map);
        }
        per_step.push(row);
    }
    let steps = per_step.len() as f64;
    let mut aggregate = json!({"average_map": total / steps});
    if args.null_seed.is_some() {
        aggregate["average_null_map"] = json!(null_total / steps);
    }
    Ok(Report::new("reconstruction", manifest, per_step, aggregate))
}

pub fn linkpred(args: &LinkpredArgs) -> CliResult<Report> {
    let manifest = read_run_manifest_at(&args.run)?;
    let dir = args.input.clone().unwrap_or_else(|| manifest.input.clone());
    let series = load_series(&dir)?;
    let (train_last, hidden) = series
        .last()
        .hide_edges(args.hide_fraction, args.hide_seed)?;
    let modified = series.with_last(train_last.clone())?;
    let last = modified.len() - 1;
    let mut decoder = None;
    let out = run_observed(&modified, &manifest.config, &mut |o: StepOutput<'_>| {
        if o.step == last {
            if let Some(model) = o.model {
                decoder = Some(symmetrize(&reconstruct_scores(model, &modified[last])?));
            }
        }
        Ok(())
    })?;
    let scores = match decoder {
        Some(s) => s,
        None => dot_scores(&out.embeddings[last]),
    };
    let map = eval_link_prediction(scores.view(), &train_last, &hidden)?;
    let null_map = eval_link_prediction(
        random_scores(train_last.node_count(), args.hide_seed).view(),
        &train_last,
        &hidden,
    )?;
    let per_step = vec![json!({
        "step": last,
        "hidden_edges": hidden.len(),
        "train_edges": train_last.edge_count(),
        "map": map,
        "null_map": null_map,
    })];
    let aggregate = json!({
        "map": map,
        "null_map": null_map,
        "ratio_to_null": map / null_map,
        "hide_fraction": args.hide_fraction,
        "hide_seed": args.hide_seed,
    });
    Ok(Report::new(
        "linkpred",
        Some(&manifest),
        per_step,
        aggregate,
    ))
}

pub fn stability(args: &SeriesEvalArgs) -> CliResult<Report> {
    let loaded = load_source(&args.source)?;
    let manifest = loaded.manifest.as_ref();
    let series = resolve_series(args.input.as_deref(), manifest, loaded.embeddings.len())?;
    let (per_step, aggregate) = match stability_constant(&loaded.embeddings, &series) {
        Ok(report) => {
            let rows = report
                .steps
                .iter()
                .map(|s| {
                    let mut row =
                        json!({"step": s.step, "absolute": s.absolute, "relative": s.relative});
                    if s.relative.is_none() {
                        row["reason"] =
                            json!("no adjacency change, or zero previous embedding/adjacency");
                    }
                    row
                })
                .collect();
            (
                rows,
                json!({"stability_constant": report.constant, "skipped": report.skipped}),
            )
        }
        Err(dyngem::Error::UndefinedMetric(reason)) => (
            Vec::new(),
            json!({"stability_constant": null, "reason": reason}),
        ),
        Err(e) => return Err(e.into()),
    };
    Ok(Report::new("stability", manifest, per_step, aggregate))
}

pub fn anomaly(args: &AnomalyArgs) -> CliResult<Report> {
    let loaded = load_source(&args.source)?;
    let rule = match args.threshold {
        Some(threshold) => ThresholdRule::Absolute { threshold },
        None => ThresholdRule::MeanPlusStd { c: args.c },
    };
    let report = anomaly_series(&loaded.embeddings)?.flag(rule)?;
    let per_step = report
        .scores
        .iter()
        .map(|s| json!({"step": s.step, "delta": s.delta, "flagged": report.flagged.contains(&s.step)}))
        .collect();
    let aggregate = json!({"rule": rule, "threshold": report.threshold, "flagged": report.flagged});
    Ok(Report::new(
        "anomaly",
        loaded.manifest.as_ref(),
        per_step,
        aggregate,
    ))
}

fn training_seconds(manifest: &RunManifest) -> f64 {
    manifest.steps.iter().map(|s| s.seconds).sum()
}

pub fn speedup(args: &SpeedupArgs) -> CliResult<Report> {
    let expected = expected_speedup(args.ns, args.ni, args.steps)?;
    let mut aggregate =
        json!({"ns": args.ns, "ni": args.ni, "T": args.steps, "expected_speedup": expected});
    let mut manifest = None;
    if let (Some(fast), Some(slow)) = (&args.dyngem_run, &args.baseline_run) {
        let fast = read_run_manifest_at(fast)?;
        let slow = read_run_manifest_at(slow)?;
        if fast.config.method != Method::Dyngem {
            log::warn!("--dyngem-run was trained with {}", fast.config.method);
        }
        let (tf, ts) = (training_seconds(&fast), training_seconds(&slow));
        let updates = |m: &RunManifest| m.steps.iter().map(|s| s.updates).sum::<usize>();
        aggregate["dyngem_seconds"] = json!(tf);
        aggregate["baseline_seconds"] = json!(ts);
        aggregate["measured_speedup"] = json!(ts / tf);
        aggregate["update_ratio"] = json!(updates(&slow) as f64 / updates(&fast) as f64);
        manifest = Some(fast);
    }
    Ok(Report::new(
        "speedup",
        manifest.as_ref(),
        Vec::new(),
        aggregate,
    ))
}

pub fn eval(command: &EvalCommand) -> CliResult<Report> {
    let (report, out) = match command {
        EvalCommand::Reconstruction(a) => (reconstruction(a)?, &a.out),
        EvalCommand::Linkpred(a) => (linkpred(a)?, &a.out),
        EvalCommand::Stability(a) => (stability(a)?, &a.out),
        EvalCommand::Anomaly(a) => (anomaly(a)?, &a.out),
        EvalCommand::Speedup(a) => (speedup(a)?, &a.out),
    };
    match out {
        Some(path) => write_json(path, &report)?,
        None => {
            use std::io::Write;
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            // a closed pipe (e.g. `| head`) is not a failure of the evaluation
            if let Err(e) = writeln!(std::io::stdout().lock(), "{text}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(CliError::Runtime(format!("stdout: {e}")));
                }
            }
        }
    }
    Ok(report)
}
