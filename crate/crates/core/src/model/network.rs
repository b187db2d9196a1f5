//! Full forward pass with cached intermediates, and the matching backward
//! pass over the flat parameter vector.

use std::ops::Range;

use super::gat::{self, GatTrace, GatWeights, GraphState};
use super::loss::{align_loss, ce_loss, d_scores, LinePrediction};
use super::lstm::{self, LstmTrace, LstmWeights};
use super::params::{LstmSlots, ModelParams};
use crate::align::{AlignSource, AlignmentVector};
use crate::corpus::Program;
use crate::error::{Error, Result};
use crate::graph::{build_graph, CpGraph};
use crate::lexer::Vocabulary;
use crate::math::{dot, matvec_acc, matvec_t_acc, outer_acc};

/// Per-line vectors `s_i`: code half followed by pseudocode half.
#[derive(Debug, Clone, PartialEq)]
pub struct LineEmbedding {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl LineEmbedding {
    pub fn n_lines(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn line(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// A program prepared for the network: token ids, graph, alignment and labels.
#[derive(Debug, Clone)]
pub struct Example {
    pub problem_id: String,
    pub ids: Vec<usize>,
    pub graph: CpGraph,
    pub align: AlignmentVector,
    pub truth: Vec<usize>,
}

impl Example {
    pub fn new(program: &Program, vocab: &Vocabulary, align: AlignmentVector) -> Result<Self> {
        if align.len() != program.len() {
            return Err(Error::LengthMismatch {
                problem_id: program.problem_id.clone(),
                expected: program.len(),
                found: align.len(),
            });
        }
        let graph = build_graph(program);
        let ids = graph.nodes.iter().map(|t| vocab.encode(&t.text)).collect();
        Ok(Example {
            problem_id: program.problem_id.clone(),
            ids,
            graph,
            align,
            truth: program.error_lines.clone(),
        })
    }

    pub fn from_source(program: &Program, vocab: &Vocabulary, source: &AlignSource) -> Result<Self> {
        Self::new(program, vocab, source.for_program(program)?)
    }

    pub fn n_lines(&self) -> usize {
        self.graph.n_lines()
    }
}

/// Contiguous token run of one line in one stream (0 = code, 1 = pseudo).
#[derive(Debug, Clone)]
struct Segment {
    range: Range<usize>,
    stream: usize,
}

fn segments(graph: &CpGraph) -> Vec<Segment> {
    let mut out = Vec::new();
    for l in 0..graph.n_lines() {
        for (stream, range) in [(0, graph.code_line(l)), (1, graph.pseudo_line(l))] {
            if !range.is_empty() {
                out.push(Segment { range, stream });
            }
        }
    }
    out
}

fn lstm_weights<'a>(params: &'a ModelParams, slot: &LstmSlots) -> LstmWeights<'a> {
    LstmWeights {
        w: &params.data[slot.w.clone()],
        b: &params.data[slot.b.clone()],
        input: slot.input,
        hidden: slot.hidden,
    }
}

/// Two disjoint mutable views into `grad`; `a` must precede `b`.
fn pair_mut(grad: &mut [f64], a: Range<usize>, b: Range<usize>) -> (&mut [f64], &mut [f64]) {
    assert!(a.end <= b.start);
    let (left, right) = grad.split_at_mut(b.start);
    (&mut left[a], &mut right[..b.len()])
}

fn bilstm_forward(
    params: &ModelParams,
    stage: usize,
    segs: &[Segment],
    input: &[f64],
    n_nodes: usize,
) -> (Vec<f64>, Vec<[LstmTrace; 2]>) {
    let h = params.dims.d_h;
    let d_in = params.layout.lstm[stage][0][0].input;
    let mut out = vec![0.0; n_nodes * 2 * h];
    let mut traces = Vec::with_capacity(segs.len());
    for seg in segs {
        let x = &input[seg.range.start * d_in..seg.range.end * d_in];
        let run = |dir: usize| {
            let slot = &params.layout.lstm[stage][seg.stream][dir];
            lstm::forward(lstm_weights(params, slot), x, dir == 1)
        };
        let pair = [run(0), run(1)];
        for (dir, trace) in pair.iter().enumerate() {
            for (k, node) in seg.range.clone().enumerate() {
                let dst = node * 2 * h + dir * h;
                out[dst..dst + h].copy_from_slice(&trace.hidden[k * h..(k + 1) * h]);
            }
        }
        traces.push(pair);
    }
    (out, traces)
}

fn bilstm_backward(
    params: &ModelParams,
    stage: usize,
    segs: &[Segment],
    traces: &[[LstmTrace; 2]],
    d_out: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    let h = params.dims.d_h;
    let d_in = params.layout.lstm[stage][0][0].input;
    let n_nodes = d_out.len() / (2 * h);
    let mut d_input = vec![0.0; n_nodes * d_in];
    let mut d_hidden = Vec::new();
    for (seg, pair) in segs.iter().zip(traces) {
        for (dir, trace) in pair.iter().enumerate() {
            d_hidden.clear();
            for node in seg.range.clone() {
                let src = node * 2 * h + dir * h;
                d_hidden.extend_from_slice(&d_out[src..src + h]);
            }
            let slot = &params.layout.lstm[stage][seg.stream][dir];
            let (dw, db) = pair_mut(grad, slot.w.clone(), slot.b.clone());
            lstm::backward(
                lstm_weights(params, slot),
                trace,
                dir == 1,
                &d_hidden,
                dw,
                db,
                &mut d_input[seg.range.start * d_in..seg.range.end * d_in],
            );
        }
    }
    d_input
}

/// Every intermediate needed by the backward pass.
pub struct Forward {
    segs: Vec<Segment>,
    emb: Vec<f64>,
    stage1: Vec<[LstmTrace; 2]>,
    h1: GraphState,
    gat: GatTrace,
    stage2: Vec<[LstmTrace; 2]>,
    pub lines: LineEmbedding,
    mlp_hidden: Vec<f64>,
    pub prediction: LinePrediction,
}

fn pool(graph: &CpGraph, h2: &[f64], width: usize) -> LineEmbedding {
    let l = graph.n_lines();
    let dim = 2 * width;
    let mut data = vec![0.0; l * dim];
    for line in 0..l {
        for (half, range) in [graph.code_line(line), graph.pseudo_line(line)].into_iter().enumerate() {
            if range.is_empty() {
                continue;
            }
            let scale = 1.0 / range.len() as f64;
            let dst = &mut data[line * dim + half * width..line * dim + (half + 1) * width];
            for node in range {
                for (d, v) in dst.iter_mut().zip(&h2[node * width..(node + 1) * width]) {
                    *d += v * scale;
                }
            }
        }
    }
    LineEmbedding { dim, data }
}

fn mlp_hidden(params: &ModelParams, s: &[f64]) -> Vec<f64> {
    let mut hidden = params.data[params.layout.mlp_b1.clone()].to_vec();
    matvec_acc(&params.data[params.layout.mlp_w1.clone()], s, &mut hidden);
    for v in &mut hidden {
        *v = v.tanh();
    }
    hidden
}

fn mlp_out(params: &ModelParams, hidden: &[f64]) -> f64 {
    dot(&params.data[params.layout.mlp_w2.clone()], hidden) + params.data[params.layout.mlp_b2.start]
}

/// Scalar MLP score of one line embedding.
pub(crate) fn mlp_logit(params: &ModelParams, s: &[f64]) -> f64 {
    mlp_out(params, &mlp_hidden(params, s))
}

struct Encoded {
    segs: Vec<Segment>,
    emb: Vec<f64>,
    stage1: Vec<[LstmTrace; 2]>,
    h1: GraphState,
    gat: GatTrace,
    stage2: Vec<[LstmTrace; 2]>,
    lines: LineEmbedding,
}

fn encode(params: &ModelParams, graph: &CpGraph, ids: &[usize]) -> Encoded {
    let n = graph.n_nodes();
    let d_emb = params.dims.d_emb;
    let segs = segments(graph);
    let mut emb = Vec::with_capacity(n * d_emb);
    for &id in ids {
        emb.extend_from_slice(params.embedding_row(id));
    }
    let (h1, stage1) = bilstm_forward(params, 0, &segs, &emb, n);
    let h1 = GraphState::new(params.dims.d_token(), h1);
    let gat = gat::forward(GatWeights::from_params(params), &h1, graph);
    let (h2, stage2) = bilstm_forward(params, 1, &segs, &gat.output.data, n);
    let lines = pool(graph, &h2, params.dims.d_token());
    Encoded {
        segs,
        emb,
        stage1,
        h1,
        gat,
        stage2,
        lines,
    }
}

/// Line embeddings of `program` under `params`. Tokens missing from the
/// vocabulary map to the unknown id.
pub fn encode_lines(program: &Program, graph: &CpGraph, params: &ModelParams) -> LineEmbedding {
    debug_assert_eq!(graph.n_lines(), program.len());
    let ids: Vec<usize> = graph.nodes.iter().map(|t| params.vocab.encode(&t.text)).collect();
    encode(params, graph, &ids).lines
}

pub fn forward(params: &ModelParams, ex: &Example) -> Result<Forward> {
    let enc = encode(params, &ex.graph, &ex.ids);
    let l = enc.lines.n_lines();
    let d_mlp = params.dims.d_mlp;
    let mut hidden = Vec::with_capacity(l * d_mlp);
    let mut logits = Vec::with_capacity(l);
    for i in 0..l {
        let hid = mlp_hidden(params, enc.lines.line(i));
        logits.push(mlp_out(params, &hid));
        hidden.extend(hid);
    }
    let prediction = LinePrediction::from_logits(logits, params.align.weights(&ex.align))?;
    Ok(Forward {
        segs: enc.segs,
        emb: enc.emb,
        stage1: enc.stage1,
        h1: enc.h1,
        gat: enc.gat,
        stage2: enc.stage2,
        lines: enc.lines,
        mlp_hidden: hidden,
        prediction,
    })
}

/// Inference only: the line probabilities for one example.
pub fn predict_example(params: &ModelParams, ex: &Example) -> Result<LinePrediction> {
    Ok(forward(params, ex)?.prediction)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub ce: f64,
    pub align: f64,
    pub total: f64,
}

fn loss_parts(pred: &LinePrediction, ex: &Example, lambda: f64) -> Result<LossParts> {
    let ce = ce_loss(pred, &ex.truth)?;
    let align = align_loss(pred, &ex.align);
    Ok(LossParts {
        ce,
        align,
        total: (1.0 - lambda) * ce + lambda * align,
    })
}

pub fn loss(params: &ModelParams, ex: &Example, lambda: f64) -> Result<LossParts> {
    loss_parts(&forward(params, ex)?.prediction, ex, lambda)
}

/// Computes the loss and accumulates its gradient into `grad` (same layout
/// as `params.data`).
pub fn loss_and_grad(params: &ModelParams, ex: &Example, lambda: f64, grad: &mut [f64]) -> Result<LossParts> {
    assert_eq!(grad.len(), params.data.len(), "gradient buffer must match parameters");
    let fwd = forward(params, ex)?;
    let parts = loss_parts(&fwd.prediction, ex, lambda)?;
    let layout = &params.layout;
    let dims = &params.dims;
    let pred = &fwd.prediction;
    let d_score = d_scores(&pred.probs, &ex.truth, &ex.align.normalized, lambda);

    let l = pred.len();
    let d_mlp = dims.d_mlp;
    let d_line = dims.d_line();
    let mut d_lines = vec![0.0; l * d_line];
    let w1 = &params.data[layout.mlp_w1.clone()];
    let w2 = &params.data[layout.mlp_w2.clone()];
    let mut d_pre = vec![0.0; d_mlp];
    for i in 0..l {
        let d_logit = pred.weights[i] * d_score[i];
        if d_logit == 0.0 {
            continue;
        }
        let hidden = &fwd.mlp_hidden[i * d_mlp..(i + 1) * d_mlp];
        grad[layout.mlp_b2.start] += d_logit;
        for (g, h) in grad[layout.mlp_w2.clone()].iter_mut().zip(hidden) {
            *g += d_logit * h;
        }
        for k in 0..d_mlp {
            d_pre[k] = d_logit * w2[k] * (1.0 - hidden[k] * hidden[k]);
        }
        let (dw1, db1) = pair_mut(grad, layout.mlp_w1.clone(), layout.mlp_b1.clone());
        outer_acc(&d_pre, fwd.lines.line(i), dw1);
        for (g, d) in db1.iter_mut().zip(&d_pre) {
            *g += d;
        }
        matvec_t_acc(w1, &d_pre, &mut d_lines[i * d_line..(i + 1) * d_line]);
    }

    let width = dims.d_token();
    let n = ex.graph.n_nodes();
    let mut d_h2 = vec![0.0; n * width];
    for line in 0..l {
        for (half, range) in [ex.graph.code_line(line), ex.graph.pseudo_line(line)].into_iter().enumerate() {
            if range.is_empty() {
                continue;
            }
            let scale = 1.0 / range.len() as f64;
            let src = &d_lines[line * d_line + half * width..line * d_line + (half + 1) * width];
            for node in range {
                for (d, s) in d_h2[node * width..(node + 1) * width].iter_mut().zip(src) {
                    *d += s * scale;
                }
            }
        }
    }

    let d_gat_out = bilstm_backward(params, 1, &fwd.segs, &fwd.stage2, &d_h2, grad);
    let d_h1 = {
        let (dw, da) = pair_mut(grad, layout.gat_w.clone(), layout.gat_a.clone());
        gat::backward(GatWeights::from_params(params), &fwd.h1, &ex.graph, &fwd.gat, &d_gat_out, dw, da)
    };
    let d_emb = bilstm_backward(params, 0, &fwd.segs, &fwd.stage1, &d_h1, grad);
    debug_assert_eq!(d_emb.len(), fwd.emb.len());
    let d = dims.d_emb;
    for (node, &id) in ex.ids.iter().enumerate() {
        let start = layout.embedding.start + id * d;
        for (g, v) in grad[start..start + d].iter_mut().zip(&d_emb[node * d..(node + 1) * d]) {
            *g += v;
        }
    }
    Ok(parts)
}
