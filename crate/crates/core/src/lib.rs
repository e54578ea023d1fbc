//! Lexicon induction from sentences paired with tree-structured meanings.

pub mod active;
pub mod candidates;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod learner;
pub mod meaning;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use meaning::{
    count_interpretations, iso_equal, occurrences, parse_term, parse_term_with, render_term,
    Embedding, Forest, Functor, ParseOptions,
};
