//! Named-entity labeling for morphologically rich languages.
//!
//! Entities are labeled at one of three granularities (one label per
//! token, one multi-label per token, or one label per morpheme) and the
//! token multi-labels can prune a morphological lattice before
//! disambiguation. Evaluation compares mentions by surface form so the
//! granularities can be scored against each other.

pub mod corpus_io;
pub mod domain;
pub mod error;
pub mod eval;
pub mod labeling;
pub mod lattice;
pub mod md;
pub mod synthetic;
pub mod tagger;

pub use error::{Error, Result};
