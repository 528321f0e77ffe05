//! Command-line driver: generate or ingest series, train embeddings with any
//! method, evaluate runs and export artifacts.

pub mod args;
pub mod artifacts;
pub mod commands;
pub mod error;

pub use args::Cli;
pub use error::{CliError, CliResult};

use args::Command;

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate(a) => commands::generate(a).map(|_| ()),
        Command::Ingest(a) => commands::ingest(a).map(|_| ()),
        Command::Train(a) => commands::train(a).map(|_| ()),
        Command::Eval(c) => commands::eval(c).map(|_| ()),
        Command::Export(a) => commands::export(a),
    }
}
