//! Tabular binary classification with model-agnostic explanations.
//!
//! The crate covers the whole loop for a small dense dataset such as the
//! Wisconsin diagnostic breast cancer table: CSV ingestion and Min-Max
//! scaling ([`dataset`]), six model families behind one [`Predictor`]
//! contract ([`linear`], [`tree`], [`ensemble`], [`knn`], [`mlp`]),
//! evaluation ([`metrics`]), Shapley and LIME attributions ([`shap`],
//! [`lime`]), experiment orchestration with JSON reports ([`pipeline`]) and
//! SVG plot emission ([`plot`]).
//!
//! Every stochastic step is driven by an explicit [`RngSeed`]; there is no
//! global random state, so identical configuration and seed give
//! bit-identical results.

pub mod data;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod knn;
pub mod lime;
pub mod linear;
pub mod metrics;
pub mod mlp;
pub mod pipeline;
pub mod plot;
pub mod rng;
pub mod shap;
pub mod tree;

pub use data::{Dataset, FeatureMatrix, LabelVector, Predictor, DECISION_THRESHOLD};
pub use error::{Error, Result};
pub use rng::RngSeed;

/// Toolkit version recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
