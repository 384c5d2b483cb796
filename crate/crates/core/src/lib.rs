//! Multilingual ad-hoc retrieval toolkit.
//!
//! Sparse (BM25) and late-interaction dense ranking over passage windows with
//! MaxP aggregation, multilingual training-triple scheduling, and evaluation
//! over merged multilingual judgments including per-language bias statistics.

pub mod cli;
pub mod dense;
pub mod error;
pub mod eval;
pub mod mixer;
pub mod sparse;
pub mod text;

pub use error::{Error, Result};
