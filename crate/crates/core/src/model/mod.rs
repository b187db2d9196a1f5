//! Neural line localizer.
//!
//! Pipeline per program: token embeddings, a per-line BiLSTM over each stream,
//! one graph-attention layer over the code/pseudocode token graph, a second
//! per-line BiLSTM, mean pooling into line embeddings, and an MLP whose
//! logits are weighted by per-line alignment before a softmax over lines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::align::AlignmentVector;
use crate::error::{Error, Result};

pub mod gat;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod network;
pub mod params;
pub mod train;

pub use gat::{gat_forward, gat_forward_with_attention, GraphState};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use loss::{align_loss, ce_loss, predict_lines, LinePrediction};
pub use network::{encode_lines, Example, LineEmbedding};
pub use params::{load_params, load_params_expecting, save_params, Dims, ModelParams};
pub use train::{train, EpochLog, TrainConfig, TrainOutcome};

/// How alignment scores turn into per-line logit weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    /// `w_i = 1 - a_i`: well-aligned lines are damped.
    #[default]
    Inverted,
    /// `w_i = a_i`.
    Literal,
    /// `w_i = 1`.
    None,
}

/// Which form of the alignment vector feeds the weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignInput {
    #[default]
    Raw,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignWeighting {
    pub mode: AlignMode,
    #[serde(default)]
    pub input: AlignInput,
}

impl AlignWeighting {
    pub fn new(mode: AlignMode, input: AlignInput) -> Self {
        AlignWeighting { mode, input }
    }

    pub fn weights(&self, align: &AlignmentVector) -> Vec<f64> {
        let source = match self.input {
            AlignInput::Raw => &align.raw,
            AlignInput::Softmax => &align.normalized,
        };
        match self.mode {
            AlignMode::Inverted => source.iter().map(|a| 1.0 - a).collect(),
            AlignMode::Literal => source.clone(),
            AlignMode::None => vec![1.0; source.len()],
        }
    }
}

impl fmt::Display for AlignMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlignMode::Inverted => "inverted",
            AlignMode::Literal => "literal",
            AlignMode::None => "none",
        })
    }
}

impl FromStr for AlignMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inverted" => Ok(AlignMode::Inverted),
            "literal" => Ok(AlignMode::Literal),
            "none" => Ok(AlignMode::None),
            other => Err(Error::InvalidArgument(format!("unknown align mode {other:?}"))),
        }
    }
}

impl fmt::Display for AlignInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlignInput::Raw => "raw",
            AlignInput::Softmax => "softmax",
        })
    }
}

impl FromStr for AlignInput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(AlignInput::Raw),
            "softmax" => Ok(AlignInput::Softmax),
            other => Err(Error::InvalidArgument(format!("unknown align input {other:?}"))),
        }
    }
}
