//! Line scoring, the two loss terms and their gradient w.r.t. the weighted
//! logits.

use serde::{Deserialize, Serialize};

use super::network::{mlp_logit, LineEmbedding};
use super::params::ModelParams;
use crate::align::AlignmentVector;
use crate::error::{Error, Result};
use crate::math::softmax;
use crate::ranking::RankingResult;

/// Probabilities are clamped to at least this before logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinePrediction {
    pub probs: Vec<f64>,
    pub logits: Vec<f64>,
    pub weights: Vec<f64>,
    pub predicted: usize,
}

impl LinePrediction {
    /// Softmax of `weights ⊙ logits`.
    pub fn from_logits(logits: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::InvalidArgument("cannot score a program with no lines".into()));
        }
        if logits.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} logits but {} alignment weights",
                logits.len(),
                weights.len()
            )));
        }
        let scaled: Vec<f64> = logits.iter().zip(&weights).map(|(l, w)| w * l).collect();
        let probs = softmax(&scaled);
        let predicted = argmax(&probs);
        Ok(LinePrediction {
            probs,
            logits,
            weights,
            predicted,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn ranking(&self) -> RankingResult {
        RankingResult::from_scores(self.probs.clone())
    }
}

/// First index of the maximum.
fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

pub fn predict_lines(s: &LineEmbedding, align: &AlignmentVector, params: &ModelParams) -> Result<LinePrediction> {
    if s.n_lines() != align.len() {
        return Err(Error::InvalidArgument(format!(
            "{} line embeddings but {} alignment scores",
            s.n_lines(),
            align.len()
        )));
    }
    let logits = (0..s.n_lines()).map(|i| mlp_logit(params, s.line(i))).collect();
    LinePrediction::from_logits(logits, params.align.weights(align))
}

fn check_truth(truth: &[usize], len: usize) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::InvalidArgument("truth set is empty".into()));
    }
    if let Some(&bad) = truth.iter().find(|&&t| t >= len) {
        return Err(Error::InvalidArgument(format!("truth line {bad} out of range for {len} lines")));
    }
    Ok(())
}

/// Cross-entropy against a target uniform over `truth`.
pub fn ce_loss(pred: &LinePrediction, truth: &[usize]) -> Result<f64> {
    check_truth(truth, pred.len())?;
    let y = 1.0 / truth.len() as f64;
    Ok(-truth.iter().map(|&t| y * pred.probs[t].max(PROB_FLOOR).ln()).sum::<f64>())
}

/// Expected normalized alignment under the predicted distribution.
pub fn align_loss(pred: &LinePrediction, align: &AlignmentVector) -> f64 {
    assert_eq!(pred.len(), align.len(), "prediction and alignment lengths differ");
    pred.probs.iter().zip(&align.normalized).map(|(p, a)| p * a).sum()
}

/// Gradient of `(1-λ)·CE + λ·align` w.r.t. the pre-softmax scores `w ⊙ logits`.
///
/// Truth lines whose probability sits below the clamp floor contribute a
/// constant to the loss and hence no gradient.
pub(crate) fn d_scores(probs: &[f64], truth: &[usize], align_norm: &[f64], lambda: f64) -> Vec<f64> {
    let y = 1.0 / truth.len() as f64;
    let mut active_mass = 0.0;
    let mut grad = vec![0.0; probs.len()];
    for &t in truth {
        if probs[t] >= PROB_FLOOR {
            active_mass += y;
            grad[t] -= y;
        }
    }
    let expected: f64 = probs.iter().zip(align_norm).map(|(p, a)| p * a).sum();
    for i in 0..probs.len() {
        let ce = active_mass * probs[i] + grad[i];
        let al = probs[i] * (align_norm[i] - expected);
        grad[i] = (1.0 - lambda) * ce + lambda * al;
    }
    grad
}
