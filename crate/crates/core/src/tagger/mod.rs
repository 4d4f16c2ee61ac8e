//! Linear-chain sequence labeling for the three labeling granularities.
//!
//! Emission scores come from sparse feature templates (plus optional
//! dense vectors); the chain layer is a standard first-order CRF with
//! exact Viterbi decoding and forward-backward marginals.

pub mod crf;
pub mod features;
pub mod io;
mod model;
mod train;

pub use features::{featurize, DenseFeatureTable, FeatureTemplates, FeatureVector};
pub use io::{read_model, write_model};
pub use model::{ChainModel, EmissionScorer, TagOutput, Variant};
pub use train::{
    examples_for_variant, mean_nll, train, train_examples, train_with_dense, TrainConfig, Trainer, TrainingExample,
};
