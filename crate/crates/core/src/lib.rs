// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Dynamic graph embedding with a deep autoencoder that is warm-started from
//! one snapshot to the next and grown with function-preserving transforms
//! when the node set expands.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] – snapshots, series, SBM generation and the edge-list format.
//! * [`nn`] – dense ReLU layers, backpropagation, regularizers and Nesterov SGD.
//! * [`model`] – the autoencoder, its composite loss and the per-snapshot trainer.
//! * [`growth`] – width planning plus widening/deepening transforms.
//! * [`engine`] – per-method drivers producing an [`engine::EmbeddingSeries`].
//! * [`metrics`] – MAP, stability, anomaly scores and the speedup formula.

pub mod engine;
pub mod error;
pub mod graph;
pub mod growth;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod seed;

pub use error::{Error, Result};
