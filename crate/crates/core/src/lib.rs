//! Dataset-level property inference against models trained on pooled
//! multi-party data.
//!
//! The crate is organised around the attack pipeline:
//!
//! - [`data`]: tabular and graph datasets, ratio-controlled resampling,
//!   synthetic generators with controlled correlations, CSV ingestion.
//! - [`stats`]: Pearson r, Cramér's V, one-way ANOVA and the scenario
//!   classifier built on top of them.
//! - [`models`]: logistic regression, MLP and two-layer GCN trained with Adam.
//! - [`attack`]: shadow ensembles, attack vectors, meta-classifiers and the
//!   fine-grained, model-update and white-box variants.
//! - [`server`]: a newline-delimited JSON query server and its client.
//! - [`harness`]: config-driven experiment runner, sweeps and reports.

pub mod attack;
pub mod data;
pub mod harness;
pub mod models;
pub mod rng;
pub mod server;
pub mod stats;

pub use attack::{AttackVector, MetaClassifier, MetaKind, Prediction};
pub use data::{AttributeSchema, GraphDataset, PropertySpec, SyntheticConfig, TabularDataset};
pub use harness::{ExperimentConfig, ExperimentResult};
pub use models::{Architecture, Hyperparameters, TrainedModel};
