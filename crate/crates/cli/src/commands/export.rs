use dyngem::metrics::anomaly_series;

use crate::args::ExportArgs;
use crate::artifacts::{
    ensure_dir, read_run_embeddings, write_deltas, write_long_csv, DELTAS, LONG_EMBEDDINGS,
};
use crate::error::CliResult;

/// Writes `embeddings_long.csv` and, for series of two or more steps, `deltas.csv`.
pub fn export(args: &ExportArgs) -> CliResult<()> {
    let embeddings = read_run_embeddings(&args.run)?;
    ensure_dir(&args.out)?;
    write_long_csv(&args.out.join(LONG_EMBEDDINGS), &embeddings)?;
    if embeddings.len() >= 2 {
        let report = anomaly_series(&embeddings)?;
        let deltas: Vec<(usize, f64)> = report.scores.iter().map(|s| (s.step, s.delta)).collect();
        write_deltas(&args.out.join(DELTAS), &deltas)?;
    }
    Ok(())
}
