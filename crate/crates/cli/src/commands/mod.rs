mod eval;
mod export;
mod generate;
mod ingest;
mod train;

pub use eval::{
    anomaly, decoder_scores, eval, linkpred, reconstruction, speedup, stability, Report,
};
pub use export::export;
pub use generate::{generate, sbm_config};
pub use ingest::{ingest, IngestManifest};
pub use train::{resolve_config, train};
