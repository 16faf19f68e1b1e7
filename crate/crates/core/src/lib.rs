//! Binary intent classification for social-media posts.
//!
//! Two feature extraction routes are provided:
//!
//! * [`lexicon`]: percentages of tokens that fall into psycholinguistic word
//!   categories, ranked by the gap between per-class means.
//! * [`terms`]: tf-idf weighted bag of terms, reduced by a chi-squared
//!   term/class dependence score.
//!
//! Either route feeds optional [`models::pca`] and one of four classifiers
//! (linear SVM, naive Bayes, decision tree, kNN). [`evaluate`] runs
//! stratified cross-validation and computes precision, recall, F-measure,
//! accuracy and Cohen's kappa. [`pipeline`] wires the pieces together and
//! [`cli`] exposes them as the `intentkit` command.

pub mod assets;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod lexicon;
pub mod matrix;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod synth;
pub mod terms;

pub use error::{Error, Result};
