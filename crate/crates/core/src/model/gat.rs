//! Single-head graph attention layer.
//!
//! ```text
//! z_i   = W h_i
//! e_ij  = LeakyReLU(a · [z_i ; z_j])          for j in N(i)
//! α_ij  = softmax over j in N(i) of e_ij
//! h'_i  = ELU(Σ_j α_ij z_j)
//! ```
//!
//! `N(i)` is the set of distinct graph neighbours of `i`, self included.

use super::params::ModelParams;
use crate::graph::CpGraph;
use crate::math::{dot, matvec_acc, matvec_t_acc, outer_acc};

/// Per-node hidden vectors of uniform width.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl GraphState {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "state data must be a whole number of rows");
        GraphState { dim, data }
    }

    pub fn zeros(n_nodes: usize, dim: usize) -> Self {
        GraphState::new(dim, vec![0.0; n_nodes * dim])
    }

    pub fn n_nodes(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows reordered so that new row `i` is old row `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> GraphState {
        let mut data = Vec::with_capacity(self.data.len());
        for &old in perm {
            data.extend_from_slice(self.node(old));
        }
        GraphState::new(self.dim, data)
    }
}

/// Borrowed attention weights: `w` is `(d_out, d_in)`, `a` is `2 * d_out`.
#[derive(Clone, Copy)]
pub struct GatWeights<'a> {
    pub w: &'a [f64],
    pub a: &'a [f64],
    pub d_in: usize,
    pub d_out: usize,
    pub slope: f64,
}

impl<'a> GatWeights<'a> {
    pub fn from_params(params: &'a ModelParams) -> Self {
        GatWeights {
            w: &params.data[params.layout.gat_w.clone()],
            a: &params.data[params.layout.gat_a.clone()],
            d_in: params.dims.d_token(),
            d_out: params.dims.d_gat,
            slope: params.dims.leaky_slope,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GatTrace {
    z: Vec<f64>,
    /// Pre-activation attention logits, aligned with `graph.attention_neighbors`.
    logits: Vec<Vec<f64>>,
    pub attention: Vec<Vec<f64>>,
    aggregate: Vec<f64>,
    pub output: GraphState,
}

#[inline]
fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

#[inline]
fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

pub fn forward(weights: GatWeights<'_>, state: &GraphState, graph: &CpGraph) -> GatTrace {
    let n = state.n_nodes();
    let d = weights.d_out;
    assert_eq!(state.dim, weights.d_in, "state width must match the layer input");
    assert_eq!(n, graph.n_nodes(), "state must cover every graph node");
    let mut z = vec![0.0; n * d];
    for i in 0..n {
        matvec_acc(weights.w, state.node(i), &mut z[i * d..(i + 1) * d]);
    }
    let (a_src, a_dst) = weights.a.split_at(d);
    let src: Vec<f64> = (0..n).map(|i| dot(a_src, &z[i * d..(i + 1) * d])).collect();
    let dst: Vec<f64> = (0..n).map(|i| dot(a_dst, &z[i * d..(i + 1) * d])).collect();

    let mut logits = Vec::with_capacity(n);
    let mut attention = Vec::with_capacity(n);
    let mut aggregate = vec![0.0; n * d];
    let mut output = vec![0.0; n * d];
    for i in 0..n {
        let nbrs = graph.attention_neighbors(i);
        let pre: Vec<f64> = nbrs.iter().map(|&j| src[i] + dst[j]).collect();
        let e: Vec<f64> = pre.iter().map(|&x| leaky(x, weights.slope)).collect();
        let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = e.iter().map(|&x| (x - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let alpha: Vec<f64> = exps.iter().map(|x| x / sum).collect();
        let agg = &mut aggregate[i * d..(i + 1) * d];
        for (&j, &a) in nbrs.iter().zip(&alpha) {
            for (acc, zj) in agg.iter_mut().zip(&z[j * d..(j + 1) * d]) {
                *acc += a * zj;
            }
        }
        for (o, &x) in output[i * d..(i + 1) * d].iter_mut().zip(agg.iter()) {
            *o = elu(x);
        }
        logits.push(pre);
        attention.push(alpha);
    }
    GatTrace {
        z,
        logits,
        attention,
        aggregate,
        output: GraphState::new(d, output),
    }
}

/// Returns the gradient w.r.t. the input state and accumulates weight
/// gradients into `dw` / `da`.
pub fn backward(
    weights: GatWeights<'_>,
    state: &GraphState,
    graph: &CpGraph,
    trace: &GatTrace,
    d_output: &[f64],
    dw: &mut [f64],
    da: &mut [f64],
) -> Vec<f64> {
    let n = state.n_nodes();
    let d = weights.d_out;
    let z = &trace.z;
    let (a_src, a_dst) = weights.a.split_at(d);
    let mut dz = vec![0.0; n * d];
    let mut d_src = vec![0.0; n];
    let mut d_dst = vec![0.0; n];
    let mut d_agg = vec![0.0; d];
    for i in 0..n {
        for k in 0..d {
            let x = trace.aggregate[i * d + k];
            let deriv = if x > 0.0 { 1.0 } else { x.exp() };
            d_agg[k] = d_output[i * d + k] * deriv;
        }
        let nbrs = graph.attention_neighbors(i);
        let alpha = &trace.attention[i];
        let d_alpha: Vec<f64> = nbrs.iter().map(|&j| dot(&d_agg, &z[j * d..(j + 1) * d])).collect();
        let mean: f64 = alpha.iter().zip(&d_alpha).map(|(a, g)| a * g).sum();
        for (idx, &j) in nbrs.iter().enumerate() {
            for (dzj, g) in dz[j * d..(j + 1) * d].iter_mut().zip(&d_agg) {
                *dzj += alpha[idx] * g;
            }
            let de = alpha[idx] * (d_alpha[idx] - mean);
            let pre = trace.logits[i][idx];
            let dpre = if pre > 0.0 { de } else { weights.slope * de };
            d_src[i] += dpre;
            d_dst[j] += dpre;
        }
    }
    let (da_src, da_dst) = da.split_at_mut(d);
    for i in 0..n {
        let zi = &z[i * d..(i + 1) * d];
        let dzi = &mut dz[i * d..(i + 1) * d];
        for k in 0..d {
            da_src[k] += d_src[i] * zi[k];
            da_dst[k] += d_dst[i] * zi[k];
            dzi[k] += d_src[i] * a_src[k] + d_dst[i] * a_dst[k];
        }
    }
    let mut d_state = vec![0.0; n * weights.d_in];
    for i in 0..n {
        let dzi = &dz[i * d..(i + 1) * d];
        outer_acc(dzi, state.node(i), dw);
        matvec_t_acc(weights.w, dzi, &mut d_state[i * weights.d_in..(i + 1) * weights.d_in]);
    }
    d_state
}

/// Applies the graph attention layer of `params` to `state`.
pub fn gat_forward(state: &GraphState, graph: &CpGraph, params: &ModelParams) -> GraphState {
    forward(GatWeights::from_params(params), state, graph).output
}

/// Like [`gat_forward`], also returning each node's attention coefficients
/// aligned with [`CpGraph::attention_neighbors`].
pub fn gat_forward_with_attention(
    state: &GraphState,
    graph: &CpGraph,
    params: &ModelParams,
) -> (GraphState, Vec<Vec<f64>>) {
    let trace = forward(GatWeights::from_params(params), state, graph);
    (trace.output, trace.attention)
}
