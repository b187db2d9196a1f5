//! Line-level logic-error localization for paired code and pseudocode.
//!
//! The crate covers the whole pipeline: corpus handling, tokenization, the
//! code/pseudocode token graph, alignment scoring, the neural localizer,
//! spectrum-based baselines, mutation-based dataset forging and evaluation.

pub mod align;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod forge;
pub mod graph;
pub mod lexer;
pub mod math;
pub mod model;
pub mod ranking;
pub mod sbfl;

pub use error::{Error, Result};
