use dyngem::graph::{generate_sbm_series, save_series, MergeEvent, SbmConfig};

use crate::args::GenerateArgs;
use crate::artifacts::{
    ensure_dir, write_json, write_labels, GenerateManifest, LABELS, MANIFEST, SCHEMA_VERSION,
};
use crate::error::CliResult;

pub fn sbm_config(args: &GenerateArgs) -> SbmConfig {
    SbmConfig {
        node_count: args.nodes,
        communities: args.communities,
        p_in: args.p_in,
        p_out: args.p_out,
        migrate_per_step: args.migrate,
        steps: args.steps,
        edge_weight: args.edge_weight,
        initial_node_count: args.initial_nodes,
        merge: match (args.merge_step, args.merge_absorbed, args.merge_into) {
            (Some(step), Some(absorbed), Some(into)) => Some(MergeEvent {
                step,
                absorbed,
                into,
            }),
            _ => None,
        },
    }
}

pub fn generate(args: &GenerateArgs) -> CliResult<GenerateManifest> {
    let config = sbm_config(args);
    config.validate()?;
    let series = generate_sbm_series(&config, args.seed)?;
    ensure_dir(&args.out)?;
    let files = save_series(&series.graph, &args.out)?;
    write_labels(&args.out.join(LABELS), &series.labels)?;
    let manifest = GenerateManifest {
        schema_version: SCHEMA_VERSION,
        command: "generate".into(),
        seed: args.seed,
        config,
        snapshots: files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        labels: LABELS.into(),
    };
    write_json(&args.out.join(MANIFEST), &manifest)?;
    log::info!(
        "wrote {} snapshots to {}",
        manifest.snapshots.len(),
        args.out.display()
    );
    Ok(manifest)
}
