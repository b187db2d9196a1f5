//! Seeded plain-SGD training with a linearly ramped alignment-loss weight.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::LinePrediction;
use super::network::{loss_and_grad, predict_example, Example};
use super::params::{Dims, ModelParams};
use super::AlignWeighting;
use crate::align::AlignSource;
use crate::corpus::{Corpus, FoldSplit, Program};
use crate::error::{Error, Result};
use crate::eval::topk_hit;
use crate::lexer::build_vocab;

/// Cut-offs reported for held-out programs during training.
pub const LOG_KS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Ceiling of the alignment-loss weight, reached at the last epoch.
    pub lambda_max: f64,
    /// Global gradient-norm clip.
    pub clip: f64,
    pub dims: Dims,
    /// Tokens seen fewer times in the training split map to `<unk>`.
    pub min_count: usize,
    pub align: AlignWeighting,
    /// Examples per update; gradients are averaged within a batch.
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Epoch `e` uses learning rate `lr / (1 + lr_decay * e)`.
    #[serde(default)]
    pub lr_decay: f64,
}

fn default_batch() -> usize {
    1
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            lr: 0.05,
            seed: 0,
            lambda_max: 0.3,
            clip: 5.0,
            dims: Dims::default(),
            min_count: 1,
            align: AlignWeighting::default(),
            batch_size: 1,
            lr_decay: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.lambda_max) {
            return Err(Error::InvalidArgument(format!("lambda_max must lie in [0, 1), got {}", self.lambda_max)));
        }
        if !(self.clip > 0.0) {
            return Err(Error::InvalidArgument(format!("clip norm must be positive, got {}", self.clip)));
        }
        if !(self.lr_decay >= 0.0 && self.lr_decay.is_finite()) {
            return Err(Error::InvalidArgument(format!("lr decay must be non-negative, got {}", self.lr_decay)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr / (1.0 + self.lr_decay * epoch as f64)
    }

    /// Alignment-loss weight used during `epoch` (0-based).
    pub fn lambda_at(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return 0.0;
        }
        self.lambda_max * epoch.min(self.epochs - 1) as f64 / (self.epochs - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lambda: f64,
    pub mean_loss: f64,
    pub mean_ce: f64,
    pub mean_align: f64,
    /// Held-out top-1/5/10 accuracy, when a held-out fold was given.
    pub heldout_topk: Option<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
}

fn check_labeled(program: &Program) -> Result<()> {
    if program.is_clean() {
        return Err(Error::validation(&program.problem_id, "training programs must carry at least one error line"));
    }
    Ok(())
}

fn global_norm(grad: &[f64]) -> f64 {
    grad.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Trains on `corpus`, leaving out fold `holdout.1` of `holdout.0` when given
/// and reporting top-k accuracy on it after every epoch.
pub fn train(
    corpus: &Corpus,
    holdout: Option<(&FoldSplit, usize)>,
    cfg: &TrainConfig,
    source: &AlignSource,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (held_idx, train_idx) = match holdout {
        Some((folds, fold)) => {
            if fold >= folds.n_folds() {
                return Err(Error::InvalidArgument(format!(
                    "fold {fold} out of range for {} folds",
                    folds.n_folds()
                )));
            }
            folds.partition(corpus, fold)?
        }
        None => (Vec::new(), (0..corpus.len()).collect()),
    };
    if train_idx.is_empty() {
        return Err(Error::InvalidArgument("no training programs".into()));
    }
    let train_set = corpus.subset(&train_idx);
    for p in &train_set.programs {
        check_labeled(p)?;
    }
    let vocab = build_vocab(&train_set, cfg.min_count);
    let mut params = ModelParams::init(cfg.dims, vocab, cfg.align, cfg.seed);
    let examples = train_set
        .programs
        .iter()
        .map(|p| Example::from_source(p, &params.vocab, source))
        .collect::<Result<Vec<_>>>()?;
    let held = held_idx
        .iter()
        .map(|&i| Example::from_source(&corpus.programs[i], &params.vocab, source))
        .collect::<Result<Vec<_>>>()?;
    for ex in &held {
        if ex.truth.is_empty() {
            return Err(Error::validation(&ex.problem_id, "held-out programs must carry at least one error line"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grad = vec![0.0; params.len()];
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lambda = cfg.lambda_at(epoch);
        let lr = cfg.lr_at(epoch);
        order.shuffle(&mut rng);
        let (mut sum_loss, mut sum_ce, mut sum_align) = (0.0, 0.0, 0.0);
        for batch in order.chunks(cfg.batch_size) {
            grad.fill(0.0);
            for &i in batch {
                let ex = &examples[i];
                let parts = loss_and_grad(&params, ex, lambda, &mut grad)?;
                if !parts.total.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        problem_id: ex.problem_id.clone(),
                        epoch,
                        loss: parts.total,
                    });
                }
                sum_loss += parts.total;
                sum_ce += parts.ce;
                sum_align += parts.align;
            }
            let norm = global_norm(&grad) / batch.len() as f64;
            if !norm.is_finite() {
                return Err(Error::NonFiniteLoss {
                    problem_id: examples[batch[0]].problem_id.clone(),
                    epoch,
                    loss: f64::NAN,
                });
            }
            let scale = if norm > cfg.clip { cfg.clip / norm } else { 1.0 };
            let step = lr * scale / batch.len() as f64;
            for (p, g) in params.data.iter_mut().zip(&grad) {
                *p -= step * g;
            }
        }
        let n = examples.len() as f64;
        let heldout_topk = if held.is_empty() {
            None
        } else {
            Some(heldout_accuracy(&params, &held)?)
        };
        let entry = EpochLog {
            epoch,
            lambda,
            mean_loss: sum_loss / n,
            mean_ce: sum_ce / n,
            mean_align: sum_align / n,
            heldout_topk,
        };
        log::debug!(
            "epoch {} lambda {:.3} loss {:.4} ce {:.4} heldout {:?}",
            epoch,
            lambda,
            entry.mean_loss,
            entry.mean_ce,
            entry.heldout_topk
        );
        log.push(entry);
    }
    Ok(TrainOutcome { params, log })
}

fn heldout_accuracy(params: &ModelParams, held: &[Example]) -> Result<[f64; 3]> {
    let mut hits = [0usize; 3];
    for ex in held {
        let ranking = predict_example(params, ex)?.ranking();
        for (h, &k) in hits.iter_mut().zip(&LOG_KS) {
            *h += topk_hit(&ranking, &ex.truth, k) as usize;
        }
    }
    Ok(hits.map(|h| h as f64 / held.len() as f64))
}

/// Line probabilities for a single program.
pub fn localize(params: &ModelParams, program: &Program, source: &AlignSource) -> Result<LinePrediction> {
    let mut ex = Example::from_source(program, &params.vocab, source)?;
    ex.truth.clear();
    predict_example(params, &ex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{split_folds, synth_corpus, CorpusKind, LineRange};
    use crate::forge::{forge_corpus, ForgeKind, TypeMix};

    fn small_corpus(n: usize, seed: u64) -> Corpus {
        let clean = synth_corpus(n, LineRange::new(8, 12).unwrap(), seed).unwrap();
        forge_corpus(&clean, ForgeKind::Single, &TypeMix::uniform(), seed).unwrap()
    }

    fn tiny_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            lr: 0.1,
            dims: Dims::uniform(6),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn lambda_ramps_linearly() {
        let cfg = TrainConfig {
            epochs: 4,
            lambda_max: 0.3,
            ..TrainConfig::default()
        };
        let l: Vec<f64> = (0..4).map(|e| cfg.lambda_at(e)).collect();
        assert_eq!(l[0], 0.0);
        assert!((l[3] - 0.3).abs() < 1e-15);
        assert!(l.windows(2).all(|w| w[0] <= w[1]));
        let off = TrainConfig {
            lambda_max: 0.0,
            ..cfg
        };
        assert!((0..4).all(|e| off.lambda_at(e) == 0.0));
    }

    #[test]
    fn config_validation() {
        let bad_lr = TrainConfig {
            lr: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad_lr.validate().is_err());
        let bad_lambda = TrainConfig {
            lambda_max: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad_lambda.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn clean_programs_rejected() {
        let clean = synth_corpus(3, LineRange::new(6, 8).unwrap(), 1).unwrap();
        assert_eq!(clean.kind, CorpusKind::Clean);
        let err = train(&clean, None, &tiny_cfg(1), &AlignSource::default()).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = small_corpus(8, 3);
        let a = train(&corpus, None, &tiny_cfg(2), &AlignSource::default()).unwrap();
        let b = train(&corpus, None, &tiny_cfg(2), &AlignSource::default()).unwrap();
        assert!(a.params.data.iter().zip(&b.params.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(a.log, b.log);
        assert!(a.params.is_finite());
    }

    #[test]
    fn memorizes_a_small_corpus() {
        let corpus = small_corpus(10, 5);
        let cfg = TrainConfig {
            epochs: 1000,
            lr: 0.5,
            lr_decay: 0.02,
            lambda_max: 0.0,
            dims: Dims::uniform(8),
            batch_size: 10,
            ..TrainConfig::default()
        };
        let out = train(&corpus, None, &cfg, &AlignSource::default()).unwrap();
        let losses: Vec<f64> = out.log.iter().map(|e| e.mean_ce).collect();
        assert!(*losses.last().unwrap() < 0.05, "{losses:?}");
        assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
    }

    #[test]
    fn heldout_fold_is_reported() {
        let corpus = small_corpus(10, 7);
        let folds = split_folds(&corpus, 5, 1).unwrap();
        let out = train(&corpus, Some((&folds, 0)), &tiny_cfg(1), &AlignSource::default()).unwrap();
        let top = out.log[0].heldout_topk.unwrap();
        assert!(top[0] <= top[1] && top[1] <= top[2]);
    }
}
