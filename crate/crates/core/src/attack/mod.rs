//! Shadow-model property inference: shadow datasets resampled from the
//! auxiliary pool, shadow models trained like the target, attack vectors
//! from probe queries and a meta-classifier over those vectors.

mod meta;
mod shadow;
mod task;
mod variants;
mod vector;

pub use meta::{run_attack, train_meta, MetaClassifier, MetaKind, Prediction};
pub use shadow::{generate_shadow_datasets, train_shadow_ensemble, train_shadow_models, ShadowConfig, ShadowEnsemble, ShadowMember};
pub use task::{GraphTask, TabularTask, Task, TrainRecipe};
pub use variants::{
    dominance, fine_grained_attack, model_update_attack, white_box_attack, white_box_pairs, white_box_vector, Dominance, FineGrainedPrediction, UpdateVerdict,
    FINE_GRAINED_RATIOS,
};
pub use vector::{build_attack_vector, read_vectors, write_vectors, AttackVector, QueryError, QueryInterface};

use thiserror::Error;

use crate::data::DataError;
use crate::models::ModelError;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("attack configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("attack vector has length {got}, meta-classifier expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("meta-classifier training needs at least two labels")]
    SingleClass,
    #[error("{failed} of {total} shadow trainings failed (limit 5%)")]
    TooManyFailures { failed: usize, total: usize },
}
