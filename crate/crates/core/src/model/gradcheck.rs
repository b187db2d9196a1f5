//! Analytic gradient versus central finite differences.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{loss, loss_and_grad, Example};
use super::params::ModelParams;
use crate::align::{score_program, LexicalScorer};
use crate::corpus::Program;
use crate::error::{Error, Result};

/// Relative errors are measured against `max(|analytic|, |numeric|, REL_FLOOR)`
/// so that near-zero gradients compare on an absolute scale.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    pub lambda: f64,
    pub coords: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            epsilon: 1e-5,
            lambda: 0.3,
            coords: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coords_checked: usize,
    /// (parameter index, analytic, numeric) of the worst coordinate.
    pub worst: (usize, f64, f64),
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Parameter indices that can influence the loss of `ex`: every tensor except
/// the embedding rows of tokens absent from the example.
fn active_coordinates(params: &ModelParams, ex: &Example) -> Vec<usize> {
    let d = params.dims.d_emb;
    let ids: BTreeSet<usize> = ex.ids.iter().copied().collect();
    let emb = params.layout.embedding.clone();
    let mut coords: Vec<usize> = ids.iter().flat_map(|&id| emb.start + id * d..emb.start + (id + 1) * d).collect();
    coords.extend(emb.end..params.len());
    coords
}

/// Checks the gradient of the total loss on `ex` over a seeded sample of
/// coordinates (all of them when fewer than `opts.coords` are active).
pub fn gradient_check_example(params: &ModelParams, ex: &Example, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", opts.epsilon)));
    }
    let mut grad = vec![0.0; params.len()];
    loss_and_grad(params, ex, opts.lambda, &mut grad)?;
    let active = active_coordinates(params, ex);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut chosen: Vec<usize> = if active.len() <= opts.coords {
        active
    } else {
        sample(&mut rng, active.len(), opts.coords).into_iter().map(|i| active[i]).collect()
    };
    chosen.sort_unstable();
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        coords_checked: chosen.len(),
        worst: (0, 0.0, 0.0),
    };
    for &idx in &chosen {
        let original = probe.data[idx];
        probe.data[idx] = original + opts.epsilon;
        let up = loss(&probe, ex, opts.lambda)?.total;
        probe.data[idx] = original - opts.epsilon;
        let down = loss(&probe, ex, opts.lambda)?.total;
        probe.data[idx] = original;
        let numeric = (up - down) / (2.0 * opts.epsilon);
        let err = relative_error(grad[idx], numeric);
        if err >= report.max_rel_error {
            report.max_rel_error = err;
            report.worst = (idx, grad[idx], numeric);
        }
    }
    Ok(report)
}

/// Gradient check on a labeled program with lexical alignment scores.
pub fn gradient_check(params: &ModelParams, program: &Program, epsilon: f64) -> Result<GradCheckReport> {
    let ex = Example::new(program, &params.vocab, score_program(program, &LexicalScorer))?;
    if ex.truth.is_empty() {
        return Err(Error::validation(&program.problem_id, "gradient check needs a labeled error line"));
    }
    gradient_check_example(
        params,
        &ex,
        &GradCheckOptions {
            epsilon,
            ..GradCheckOptions::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ErrorType;
    use crate::lexer::{build_vocab, Vocabulary};
    use crate::model::{AlignMode, AlignInput, AlignWeighting, Dims};

    fn three_liner() -> Program {
        Program {
            problem_id: "g3".into(),
            source_lines: vec!["int n = 3;".into(), "for (int i = 0; i < n; i++) n += i;".into(), "}".into()],
            pseudo_lines: vec![Some("set n to 3".into()), Some("for i = 0 to n exclusive add i to n".into()), None],
            error_lines: vec![1],
            error_types: vec![ErrorType::LoopCondition],
        }
    }

    fn vocab(p: &Program) -> Vocabulary {
        build_vocab(&crate::corpus::Corpus::infer(vec![p.clone()]).unwrap(), 1)
    }

    #[test]
    fn tiny_model_passes() {
        let p = three_liner();
        for mode in [AlignMode::Inverted, AlignMode::Literal, AlignMode::None] {
            let align = AlignWeighting::new(mode, AlignInput::Raw);
            let params = ModelParams::init(Dims::uniform(4), vocab(&p), align, 11);
            let report = gradient_check(&params, &p, 1e-5).unwrap();
            assert!(report.coords_checked >= 200);
            assert!(report.max_rel_error < 1e-4, "{mode}: {report:?}");
        }
    }

    #[test]
    fn halving_epsilon_does_not_blow_up() {
        let p = three_liner();
        let params = ModelParams::init(Dims::uniform(4), vocab(&p), AlignWeighting::default(), 2);
        let a = gradient_check(&params, &p, 2e-5).unwrap().max_rel_error;
        let b = gradient_check(&params, &p, 1e-5).unwrap().max_rel_error;
        assert!(b <= 4.0 * a.max(1e-9), "{a} {b}");
    }

    #[test]
    fn stationary_at_clamped_optimum() {
        let p = three_liner();
        let mut params = ModelParams::init(Dims::uniform(4), vocab(&p), AlignWeighting::new(AlignMode::None, AlignInput::Raw), 3);
        let ex = Example::new(&p, &params.vocab, score_program(&p, &LexicalScorer)).unwrap();
        // push the output bias and weights so line 1 dominates completely
        let mut grad = vec![0.0; params.len()];
        for _ in 0..400 {
            grad.fill(0.0);
            loss_and_grad(&params, &ex, 0.0, &mut grad).unwrap();
            for (x, g) in params.data.iter_mut().zip(&grad) {
                *x -= 2.0 * g;
            }
        }
        grad.fill(0.0);
        let parts = loss_and_grad(&params, &ex, 0.0, &mut grad).unwrap();
        assert!(parts.ce < 1e-3, "{parts:?}");
        assert!(grad.iter().all(|g| g.is_finite()));
        let norm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-2, "{norm}");
    }
}
