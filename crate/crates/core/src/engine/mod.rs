//! Per-method drivers that turn a [`DynamicGraph`] into an [`EmbeddingSeries`].
//!
//! * `dyngem` – one autoencoder trained on the first snapshot, then carried
//!   forward: grown when nodes arrive and fine-tuned for `epochs_warm`.
//! * `sdne_retrain` – a fresh autoencoder per snapshot.
//! * `gf` / `gf_init` – graph factorization, cold or warm started.
//! * `*_align` – the retrained series rotated onto its predecessor.

mod gf;
mod procrustes;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DynamicGraph;
use crate::growth::{apply_plan, propsize_plan, GrowthPlan};
use crate::model::{build_autoencoder, embed, train_snapshot, AutoencoderParams, Hyperparameters};
use crate::seed::{self, Stream};

pub use gf::{
    extend_rows, gf_init, gf_objective, gf_scores, row_norm, train_gf, GfConfig, GfOutcome,
};
pub use procrustes::{
    align_series, jacobi_svd, procrustes_align, Alignment, Svd, MAX_SWEEPS, OFF_DIAGONAL_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dyngem,
    SdneRetrain,
    SdneAlign,
    Gf,
    GfInit,
    GfAlign,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Dyngem,
        Method::SdneRetrain,
        Method::SdneAlign,
        Method::Gf,
        Method::GfInit,
        Method::GfAlign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dyngem => "dyngem",
            Method::SdneRetrain => "sdne_retrain",
            Method::SdneAlign => "sdne_align",
            Method::Gf => "gf",
            Method::GfInit => "gf_init",
            Method::GfAlign => "gf_align",
        }
    }

    /// Whether the method trains autoencoders (and so has a decoder to score with).
    pub fn is_autoencoder(self) -> bool {
        matches!(
            self,
            Method::Dyngem | Method::SdneRetrain | Method::SdneAlign
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let roster: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::config(format!(
                    "unknown method {s:?}; expected one of {}",
                    roster.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub method: Method,
    pub hyper: Hyperparameters,
    pub gf_lambda: f64,
    pub gf_iters: usize,
    pub gf_lr: f64,
    /// Snapshots trained concurrently by cold-start methods.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::Dyngem,
            hyper: Hyperparameters::default(),
            gf_lambda: 1.0,
            gf_iters: 100,
            gf_lr: 0.01,
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn gf(&self) -> GfConfig {
        GfConfig {
            lambda: self.gf_lambda,
            epochs: self.gf_iters,
            lr: self.gf_lr,
            d: self.hyper.d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.jobs == 0 {
            return Err(Error::config("jobs must be at least 1"));
        }
        match self.method {
            Method::Gf | Method::GfInit | Method::GfAlign => {
                if self.gf_iters == 0 {
                    return Err(Error::config("gf_iters must be at least 1"));
                }
                self.gf().validate()
            }
            _ => self.hyper.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub nodes: usize,
    pub edges: usize,
    pub seconds: f64,
    pub epochs: usize,
    /// Gradient updates (minibatches for autoencoders, edge visits for GF).
    pub updates: usize,
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEvent {
    pub step: usize,
    pub seed: u64,
    pub plan: GrowthPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSeries {
    pub method: Method,
    pub embeddings: Vec<Array2<f64>>,
    pub steps: Vec<StepRecord>,
    pub growth: Vec<GrowthEvent>,
}

impl EmbeddingSeries {
    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.first().map(|e| e.ncols()).unwrap_or(0)
    }

    pub fn total_updates(&self) -> usize {
        self.steps.iter().map(|s| s.updates).sum()
    }

    pub fn total_seconds(&self) -> f64 {
        self.steps.iter().map(|s| s.seconds).sum()
    }
}

/// What a driver exposes after finishing a step.
pub struct StepOutput<'a> {
    pub step: usize,
    pub embedding: &'a Array2<f64>,
    /// Trained autoencoder, for autoencoder methods.
    pub model: Option<&'a AutoencoderParams>,
}

/// Callback invoked once per step, in step order.
pub type Observer<'a> = dyn FnMut(StepOutput<'_>) -> Result<()> + 'a;

/// Runs `config.method` over the series without observing intermediate models.
pub fn run(series: &DynamicGraph, config: &RunConfig) -> Result<EmbeddingSeries> {
    run_observed(series, config, &mut |_| Ok(()))
}

pub fn run_observed(
    series: &DynamicGraph,
    config: &RunConfig,
    observer: &mut Observer<'_>,
) -> Result<EmbeddingSeries> {
    config.validate()?;
    let mut out = match config.method {
        Method::Dyngem => run_dyngem(series, config, observer)?,
        Method::SdneRetrain | Method::SdneAlign => run_sdne_retrain(series, config, observer)?,
        Method::Gf | Method::GfAlign => run_gf(series, config, false, observer)?,
        Method::GfInit => run_gf(series, config, true, observer)?,
    };
    if matches!(config.method, Method::SdneAlign | Method::GfAlign) {
        out.embeddings = align_series(&out.embeddings)?;
    }
    out.method = config.method;
    Ok(out)
}

fn step_hyper(hyper: &Hyperparameters, t: usize) -> Hyperparameters {
    Hyperparameters {
        seed: seed::derive(hyper.seed, t, Stream::Shuffle),
        ..hyper.clone()
    }
}

/// Warm-started autoencoder over the whole series.
pub fn run_dyngem(
    series: &DynamicGraph,
    config: &RunConfig,
    observer: &mut Observer<'_>,
) -> Result<EmbeddingSeries> {
    let hyper = &config.hyper;
    hyper.validate()?;
    let mut embeddings = Vec::with_capacity(series.len());
    let mut steps = Vec::with_capacity(series.len());
    let mut growth = Vec::new();
    let mut params: Option<AutoencoderParams> = None;

    for (t, snapshot) in series.snapshots().iter().enumerate() {
        let started = Instant::now();
        let n = snapshot.node_count();
        let (mut model, epochs) = match params.take() {
            None => (
                build_autoencoder(
                    n,
                    &hyper.hidden,
                    hyper.d,
                    seed::derive(hyper.seed, t, Stream::Init),
                )?,
                hyper.epochs_first,
            ),
            Some(prev) if prev.n() < n => {
                let sizes = prev.encoder_sizes();
                let plan = propsize_plan(&sizes[..sizes.len() - 1], n, hyper.rho, hyper.d)?;
                let growth_seed = seed::derive(hyper.seed, t, Stream::Growth);
                let grown = apply_plan(&prev, &plan, hyper.noise_scale, growth_seed)?;
                growth.push(GrowthEvent {
                    step: t,
                    seed: growth_seed,
                    plan,
                });
                (grown, hyper.epochs_warm)
            }
            Some(prev) => (prev, hyper.epochs_warm),
        };
        let report = train_snapshot(&mut model, snapshot, &step_hyper(hyper, t), epochs)?;
        let embedding = embed(&model, snapshot)?;
        steps.push(StepRecord {
            step: t,
            nodes: n,
            edges: snapshot.edge_count(),
            seconds: started.elapsed().as_secs_f64(),
            epochs,
            updates: report.updates,
            final_loss: report.loss_trace.last().copied(),
        });
        observer(StepOutput {
            step: t,
            embedding: &embedding,
            model: Some(&model),
        })?;
        embeddings.push(embedding);
        params = Some(model);
    }
    Ok(EmbeddingSeries {
        method: Method::Dyngem,
        embeddings,
        steps,
        growth,
    })
}

struct ColdStep<M> {
    embedding: Array2<f64>,
    model: Option<M>,
    record: StepRecord,
}

/// Runs `train` on every step, `jobs` at a time, then reports them in order.
fn run_cold<M, F>(
    series: &DynamicGraph,
    jobs: usize,
    train: F,
    observer: &mut Observer<'_>,
) -> Result<Vec<ColdStep<M>>>
where
    M: Send + std::borrow::Borrow<AutoencoderParams>,
    F: Fn(usize) -> Result<ColdStep<M>> + Sync,
{
    let mut out = Vec::with_capacity(series.len());
    let steps: Vec<usize> = (0..series.len()).collect();
    for chunk in steps.chunks(jobs.max(1)) {
        let done: Vec<ColdStep<M>> = if chunk.len() == 1 {
            vec![train(chunk[0])?]
        } else {
            chunk.par_iter().map(|&t| train(t)).collect::<Result<_>>()?
        };
        for mut step in done {
            observer(StepOutput {
                step: step.record.step,
                embedding: &step.embedding,
                model: step.model.as_ref().map(|m| m.borrow()),
            })?;
            // models are only needed by the observer
            step.model = None;
            out.push(step);
        }
    }
    Ok(out)
}

/// A fresh autoencoder per snapshot.
pub fn run_sdne_retrain(
    series: &DynamicGraph,
    config: &RunConfig,
    observer: &mut Observer<'_>,
) -> Result<EmbeddingSeries> {
    let hyper = &config.hyper;
    hyper.validate()?;
    let train = |t: usize| -> Result<ColdStep<AutoencoderParams>> {
        let started = Instant::now();
        let snapshot = &series[t];
        let mut model = build_autoencoder(
            snapshot.node_count(),
            &hyper.hidden,
            hyper.d,
            seed::derive(hyper.seed, t, Stream::Init),
        )?;
        let report = train_snapshot(
            &mut model,
            snapshot,
            &step_hyper(hyper, t),
            hyper.epochs_first,
        )?;
        let embedding = embed(&model, snapshot)?;
        Ok(ColdStep {
            embedding,
            record: StepRecord {
                step: t,
                nodes: snapshot.node_count(),
                edges: snapshot.edge_count(),
                seconds: started.elapsed().as_secs_f64(),
                epochs: hyper.epochs_first,
                updates: report.updates,
                final_loss: report.loss_trace.last().copied(),
            },
            model: Some(model),
        })
    };
    let steps = run_cold(series, config.jobs, train, observer)?;
    Ok(collect_cold(Method::SdneRetrain, steps))
}

fn collect_cold<M>(method: Method, steps: Vec<ColdStep<M>>) -> EmbeddingSeries {
    let (embeddings, records) = steps.into_iter().map(|s| (s.embedding, s.record)).unzip();
    EmbeddingSeries {
        method,
        embeddings,
        steps: records,
        growth: Vec::new(),
    }
}

fn gf_step(
    series: &DynamicGraph,
    config: &RunConfig,
    t: usize,
    init: Array2<f64>,
) -> Result<(Array2<f64>, StepRecord)> {
    let started = Instant::now();
    let snapshot = &series[t];
    let mut y = init;
    let outcome = train_gf(
        &mut y,
        snapshot,
        &config.gf(),
        seed::derive(config.hyper.seed, t, Stream::Gf),
    )?;
    Ok((
        y,
        StepRecord {
            step: t,
            nodes: snapshot.node_count(),
            edges: snapshot.edge_count(),
            seconds: started.elapsed().as_secs_f64(),
            epochs: config.gf_iters,
            updates: outcome.updates,
            final_loss: outcome.trace.last().copied(),
        },
    ))
}

/// Graph factorization per snapshot; with `warm_start` each step starts from
/// the previous step's factors (new nodes initialised randomly).
pub fn run_gf(
    series: &DynamicGraph,
    config: &RunConfig,
    warm_start: bool,
    observer: &mut Observer<'_>,
) -> Result<EmbeddingSeries> {
    let gf = config.gf();
    gf.validate()?;
    if config.gf_iters == 0 {
        return Err(Error::config("gf_iters must be at least 1"));
    }
    let init_seed = |t: usize| seed::derive(config.hyper.seed, t, Stream::Init);
    if !warm_start {
        let train = |t: usize| -> Result<ColdStep<AutoencoderParams>> {
            let init = gf_init(series[t].node_count(), gf.d, init_seed(t));
            let (embedding, record) = gf_step(series, config, t, init)?;
            Ok(ColdStep {
                embedding,
                model: None,
                record,
            })
        };
        let steps = run_cold(series, config.jobs, train, observer)?;
        return Ok(collect_cold(Method::Gf, steps));
    }

    let mut embeddings: Vec<Array2<f64>> = Vec::with_capacity(series.len());
    let mut records = Vec::with_capacity(series.len());
    for t in 0..series.len() {
        let n = series[t].node_count();
        let init = match embeddings.last() {
            None => gf_init(n, gf.d, init_seed(t)),
            Some(prev) => extend_rows(prev, n, init_seed(t)),
        };
        let (embedding, record) = gf_step(series, config, t, init)?;
        observer(StepOutput {
            step: t,
            embedding: &embedding,
            model: None,
        })?;
        embeddings.push(embedding);
        records.push(record);
    }
    Ok(EmbeddingSeries {
        method: Method::GfInit,
        embeddings,
        steps: records,
        growth: Vec::new(),
    })
}
