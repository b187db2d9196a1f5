//! Single-direction LSTM over a short sequence with explicit backward pass.
//!
//! Gate order in the weight matrix rows is input, forget, cell, output. The
//! weight matrix has shape `(4h, in + h)` and acts on `[x_t; h_{t-1}]`.

use crate::math::{matvec_acc, matvec_t_acc, outer_acc, sigmoid};

/// Borrowed view of one direction's weights.
#[derive(Clone, Copy)]
pub struct LstmWeights<'a> {
    pub w: &'a [f64],
    pub b: &'a [f64],
    pub input: usize,
    pub hidden: usize,
}

/// Everything the backward pass needs from a forward run.
#[derive(Debug, Clone, Default)]
pub struct LstmTrace {
    steps: usize,
    /// `[x_t; h_{t-1}]` per step, `(steps, in + h)`.
    concat: Vec<f64>,
    /// Post-activation gates per step, `(steps, 4h)`.
    gates: Vec<f64>,
    /// Cell state per step, `(steps, h)`.
    cell: Vec<f64>,
    /// `tanh(c_t)` per step.
    cell_tanh: Vec<f64>,
    /// Hidden output per step, `(steps, h)`.
    pub hidden: Vec<f64>,
}

impl LstmTrace {
    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// Runs the LSTM over `inputs` (row-major `(steps, in)`), in reverse order when
/// `reverse` is set. Output row `t` always corresponds to input row `t`.
pub fn forward(weights: LstmWeights<'_>, inputs: &[f64], reverse: bool) -> LstmTrace {
    let (n_in, h) = (weights.input, weights.hidden);
    let steps = inputs.len() / n_in;
    let width = n_in + h;
    let mut trace = LstmTrace {
        steps,
        concat: vec![0.0; steps * width],
        gates: vec![0.0; steps * 4 * h],
        cell: vec![0.0; steps * h],
        cell_tanh: vec![0.0; steps * h],
        hidden: vec![0.0; steps * h],
    };
    let mut prev: Option<usize> = None;
    for k in 0..steps {
        let t = if reverse { steps - 1 - k } else { k };
        {
            let concat = &mut trace.concat[t * width..(t + 1) * width];
            concat[..n_in].copy_from_slice(&inputs[t * n_in..(t + 1) * n_in]);
            match prev {
                Some(p) => concat[n_in..].copy_from_slice(&trace.hidden[p * h..(p + 1) * h]),
                None => concat[n_in..].fill(0.0),
            }
        }
        let gates = &mut trace.gates[t * 4 * h..(t + 1) * 4 * h];
        gates.copy_from_slice(weights.b);
        matvec_acc(weights.w, &trace.concat[t * width..(t + 1) * width], gates);
        for j in 0..h {
            gates[j] = sigmoid(gates[j]);
            gates[h + j] = sigmoid(gates[h + j]);
            gates[2 * h + j] = gates[2 * h + j].tanh();
            gates[3 * h + j] = sigmoid(gates[3 * h + j]);
        }
        for j in 0..h {
            let c_prev = prev.map_or(0.0, |p| trace.cell[p * h + j]);
            let c = gates[h + j] * c_prev + gates[j] * gates[2 * h + j];
            let tc = c.tanh();
            trace.cell[t * h + j] = c;
            trace.cell_tanh[t * h + j] = tc;
            trace.hidden[t * h + j] = gates[3 * h + j] * tc;
        }
        prev = Some(t);
    }
    trace
}

/// Back-propagates `d_hidden` (gradient w.r.t. every output row) through the
/// run recorded in `trace`. Accumulates weight gradients into `dw`/`db` and
/// input gradients into `d_inputs`.
pub fn backward(
    weights: LstmWeights<'_>,
    trace: &LstmTrace,
    reverse: bool,
    d_hidden: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    d_inputs: &mut [f64],
) {
    let (n_in, h) = (weights.input, weights.hidden);
    let steps = trace.steps;
    let width = n_in + h;
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut d_pre = vec![0.0; 4 * h];
    let mut d_concat = vec![0.0; width];
    // Walk in the opposite order to the forward pass.
    for k in (0..steps).rev() {
        let t = if reverse { steps - 1 - k } else { k };
        let prev = if k == 0 {
            None
        } else if reverse {
            Some(t + 1)
        } else {
            Some(t - 1)
        };
        let gates = &trace.gates[t * 4 * h..(t + 1) * 4 * h];
        for j in 0..h {
            let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let tc = trace.cell_tanh[t * h + j];
            let dh = d_hidden[t * h + j] + dh_next[j];
            let d_o = dh * tc;
            let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
            let c_prev = prev.map_or(0.0, |p| trace.cell[p * h + j]);
            d_pre[j] = dc * g * i * (1.0 - i);
            d_pre[h + j] = dc * c_prev * f * (1.0 - f);
            d_pre[2 * h + j] = dc * i * (1.0 - g * g);
            d_pre[3 * h + j] = d_o * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        let concat = &trace.concat[t * width..(t + 1) * width];
        outer_acc(&d_pre, concat, dw);
        for (b, d) in db.iter_mut().zip(&d_pre) {
            *b += d;
        }
        d_concat.fill(0.0);
        matvec_t_acc(weights.w, &d_pre, &mut d_concat);
        for (dst, src) in d_inputs[t * n_in..(t + 1) * n_in].iter_mut().zip(&d_concat[..n_in]) {
            *dst += src;
        }
        dh_next.copy_from_slice(&d_concat[n_in..]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect()
    }

    fn objective(w: &[f64], b: &[f64], x: &[f64], proj: &[f64], n_in: usize, h: usize, reverse: bool) -> f64 {
        let trace = forward(LstmWeights { w, b, input: n_in, hidden: h }, x, reverse);
        trace.hidden.iter().zip(proj).map(|(a, p)| a * p).sum()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (n_in, h, steps) = (3, 4, 5);
        let w = random(4 * h * (n_in + h), &mut rng);
        let b = random(4 * h, &mut rng);
        let x = random(steps * n_in, &mut rng);
        let proj = random(steps * h, &mut rng);
        for reverse in [false, true] {
            let weights = LstmWeights { w: &w, b: &b, input: n_in, hidden: h };
            let trace = forward(weights, &x, reverse);
            let mut dw = vec![0.0; w.len()];
            let mut db = vec![0.0; b.len()];
            let mut dx = vec![0.0; x.len()];
            backward(weights, &trace, reverse, &proj, &mut dw, &mut db, &mut dx);
            let eps = 1e-6;
            let check = |analytic: f64, plus: f64, minus: f64| {
                let numeric = (plus - minus) / (2.0 * eps);
                assert!((analytic - numeric).abs() < 1e-7, "{analytic} vs {numeric}");
            };
            for idx in (0..w.len()).step_by(7) {
                let mut wp = w.clone();
                wp[idx] += eps;
                let mut wm = w.clone();
                wm[idx] -= eps;
                check(dw[idx], objective(&wp, &b, &x, &proj, n_in, h, reverse), objective(&wm, &b, &x, &proj, n_in, h, reverse));
            }
            for idx in 0..b.len() {
                let mut bp = b.clone();
                bp[idx] += eps;
                let mut bm = b.clone();
                bm[idx] -= eps;
                check(db[idx], objective(&w, &bp, &x, &proj, n_in, h, reverse), objective(&w, &bm, &x, &proj, n_in, h, reverse));
            }
            for idx in 0..x.len() {
                let mut xp = x.clone();
                xp[idx] += eps;
                let mut xm = x.clone();
                xm[idx] -= eps;
                check(dx[idx], objective(&w, &b, &xp, &proj, n_in, h, reverse), objective(&w, &b, &xm, &proj, n_in, h, reverse));
            }
        }
    }

    #[test]
    fn reverse_run_sees_future_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n_in, h) = (2, 3);
        let w = random(4 * h * (n_in + h), &mut rng);
        let b = random(4 * h, &mut rng);
        let x = random(3 * n_in, &mut rng);
        let weights = LstmWeights { w: &w, b: &b, input: n_in, hidden: h };
        let fwd = forward(weights, &x, false);
        let bwd = forward(weights, &x, true);
        // the last forward step and the first backward step both see one input only
        let single_last = forward(weights, &x[2 * n_in..], false);
        assert_eq!(&bwd.hidden[2 * h..], &single_last.hidden[..]);
        let single_first = forward(weights, &x[..n_in], true);
        assert_eq!(&fwd.hidden[..h], &single_first.hidden[..]);
    }

    #[test]
    fn empty_sequence() {
        let w = vec![0.0; 4 * 2 * 3];
        let b = vec![0.0; 8];
        let trace = forward(LstmWeights { w: &w, b: &b, input: 1, hidden: 2 }, &[], false);
        assert_eq!(trace.steps(), 0);
        assert!(trace.hidden.is_empty());
    }
}
