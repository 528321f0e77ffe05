use std::path::Path;
use std::time::Instant;

use dyngem::engine::{run_observed, RunConfig, StepOutput};
use dyngem::graph::load_series;
use dyngem::model::save_checkpoint;

use crate::args::{CheckpointPolicy, HyperArgs, TrainArgs};
use crate::artifacts::{
    checkpoint_file_name, embedding_file_name, ensure_dir, read_run_manifest_at,
    write_embedding_csv, write_json, RunManifest, MANIFEST, SCHEMA_VERSION,
};
use crate::error::{CliError, CliResult};

impl HyperArgs {
    /// Overrides the fields that were given on the command line.
    pub fn apply(&self, config: &mut RunConfig) {
        let h = &mut config.hyper;
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { $field = v; })*
            };
        }
        set!(
            d => h.d, hidden => h.hidden, alpha => h.alpha, beta => h.beta, nu1 => h.nu1, nu2 => h.nu2,
            rho => h.rho, lr => h.base_lr, momentum => h.momentum, decay => h.decay,
            batch_size => h.batch_size, epochs_first => h.epochs_first, epochs_warm => h.epochs_warm,
            noise_scale => h.noise_scale, seed => h.seed,
            gf_lambda => config.gf_lambda, gf_iters => config.gf_iters, gf_lr => config.gf_lr, jobs => config.jobs,
        );
    }
}

fn wants_checkpoint(policy: CheckpointPolicy, step: usize, last: usize) -> bool {
    match policy {
        CheckpointPolicy::All => true,
        CheckpointPolicy::Last => step == last,
        CheckpointPolicy::None => false,
    }
}

pub fn resolve_config(args: &TrainArgs) -> CliResult<(RunConfig, std::path::PathBuf)> {
    let base = args
        .from_manifest
        .as_deref()
        .map(read_run_manifest_at)
        .transpose()?;
    let mut config = base.as_ref().map(|m| m.config.clone()).unwrap_or_default();
    match (args.method, &base) {
        (Some(m), _) => config.method = m,
        (None, None) => {
            return Err(CliError::invalid(
                "--method is required unless --from-manifest is given",
            ))
        }
        (None, Some(_)) => {}
    }
    args.hyper.apply(&mut config);
    config.validate()?;
    let input = args
        .input
        .clone()
        .or_else(|| base.map(|m| m.input))
        .ok_or_else(|| CliError::invalid("--in is required unless --from-manifest is given"))?;
    Ok((config, input))
}

pub fn train(args: &TrainArgs) -> CliResult<RunManifest> {
    let (config, input) = resolve_config(args)?;
    let series = load_series(&input)?;
    let input = input.canonicalize().unwrap_or(input);
    ensure_dir(&args.out)?;
    let last = series.len() - 1;
    let started = Instant::now();
    let mut checkpoints = vec![None; series.len()];
    let out: &Path = &args.out;
    let result = run_observed(&series, &config, &mut |o: StepOutput<'_>| {
        log::info!("step {} trained ({} nodes)", o.step, o.embedding.nrows());
        if let Some(model) = o
            .model
            .filter(|_| wants_checkpoint(args.checkpoints, o.step, last))
        {
            let name = checkpoint_file_name(o.step);
            save_checkpoint(model, out.join(&name))?;
            checkpoints[o.step] = Some(name);
        }
        Ok(())
    })?;
    let mut embeddings = Vec::with_capacity(result.len());
    for (t, emb) in result.embeddings.iter().enumerate() {
        let name = embedding_file_name(t);
        write_embedding_csv(&out.join(&name), emb)?;
        embeddings.push(name);
    }
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        command: "train".into(),
        input,
        config,
        steps: result.steps,
        growth: result.growth,
        embeddings,
        checkpoints,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&out.join(MANIFEST), &manifest)?;
    Ok(manifest)
}
