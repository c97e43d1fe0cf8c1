//! Topic models for rating mature content in narrative text.
//!
//! The crate covers the whole pipeline: text preprocessing ([`corpus`]),
//! collapsed-Gibbs LDA ([`lda`]) and its partially-labeled variant
//! ([`plda`]), crowd annotation handling ([`annotations`]), threshold
//! classification and grid search ([`evaluation`]), rating regression
//! ([`regression`]) and planted-topic synthetic corpora ([`synthgen`]).

pub mod annotations;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod lda;
pub mod matrix;
pub mod plda;
pub mod regression;
pub mod synthgen;

pub use error::{Error, Result};
pub use matrix::Matrix;
