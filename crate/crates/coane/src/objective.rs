//! The training objective: positive graph likelihood over top-k_p
//! co-occurrence neighbors, contextually negative sampling, attribute
//! reconstruction, their gradients, and the Adam update.
//!
//! Embeddings are not free parameters: gradients at the embedding level are
//! chained through the average pooling and the convolution into the filter
//! bank. Rows of Z outside the current batch are treated as constants (they
//! are stale by construction of the batch loop), so cross-node terms
//! propagate to both endpoints only when both are in the batch.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cooccur::{draw_negatives, top_kp_neighbors, CooccurrenceStats, SamplingMode};
use crate::encoder::{
    decode_forward, encode_node, CoaneModel, EmbeddingMatrix, SparseAttrs,
};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::rng::{stream, SALT_NEG_DRAW};
use crate::sampler::ContextCorpus;

#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    /// Multiplier on the positive graph likelihood; 1 normally, 0 to ablate.
    pub pos_weight: f64,
    /// Strength of the negative loss (a).
    pub neg_strength: f64,
    /// Weight of the attribute-reconstruction loss (gamma).
    pub attr_weight: f64,
    /// Negative samples per target node (k).
    pub negatives: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Optional per-tensor L2 gradient clip; off by default.
    pub clip: Option<f64>,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            pos_weight: 1.0,
            neg_strength: 1e-3,
            attr_weight: 1e5,
            negatives: 20,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub l_pos: f64,
    pub l_neg: f64,
    pub l_att: f64,
    pub l_obj: f64,
    /// Batch nodes whose negative draw came back short.
    pub short_lists: usize,
}

/// Gradients for every trainable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradients {
    pub theta: Vec<f64>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

impl ModelGradients {
    pub fn zeros_like(model: &CoaneModel) -> Self {
        Self {
            theta: vec![0.0; model.bank.weights.len()],
            w1: vec![0.0; model.decoder.w1.len()],
            b1: vec![0.0; model.decoder.b1.len()],
            w2: vec![0.0; model.decoder.w2.len()],
            b2: vec![0.0; model.decoder.b2.len()],
            w3: vec![0.0; model.decoder.w3.len()],
            b3: vec![0.0; model.decoder.b3.len()],
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += b;
            }
        }
    }

    pub fn tensors(&self) -> [&Vec<f64>; 7] {
        [
            &self.theta,
            &self.w1,
            &self.b1,
            &self.w2,
            &self.b2,
            &self.w3,
            &self.b3,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 7] {
        [
            &mut self.theta,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }

    pub fn tensor_names() -> [&'static str; 7] {
        ["theta", "w1", "b1", "w2", "b2", "w3", "b3"]
    }
}

/// Numerically stable ln(1 + e^x).
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log sigma(x) computed as -softplus(-x).
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradient buffer over the current batch's embedding rows.
pub struct BatchZGrad<'a> {
    dim: usize,
    index: &'a HashMap<NodeId, usize>,
    grad: Vec<f64>,
}

impl<'a> BatchZGrad<'a> {
    pub fn new(batch_len: usize, dim: usize, index: &'a HashMap<NodeId, usize>) -> Self {
        Self {
            dim,
            index,
            grad: vec![0.0; batch_len * dim],
        }
    }

    pub fn row(&self, v: NodeId) -> Option<&[f64]> {
        self.index
            .get(&v)
            .map(|&i| &self.grad[i * self.dim..(i + 1) * self.dim])
    }

    fn add(&mut self, v: NodeId, scale: f64, vec: &[f64]) {
        if let Some(&i) = self.index.get(&v) {
            let row = &mut self.grad[i * self.dim..(i + 1) * self.dim];
            for (g, x) in row.iter_mut().zip(vec) {
                *g += scale * x;
            }
        }
    }

    fn add_slice(&mut self, v: NodeId, offset: usize, scale: f64, vec: &[f64]) {
        if let Some(&i) = self.index.get(&v) {
            let row = &mut self.grad[i * self.dim + offset..i * self.dim + offset + vec.len()];
            for (g, x) in row.iter_mut().zip(vec) {
                *g += scale * x;
            }
        }
    }
}

/// Positive graph likelihood restricted to each batch node's top-k_p
/// co-occurrence neighbors: -sum w_ij log sigma(L_i . R_j). The gradient
/// with respect to the pair score is -w_ij (1 - sigma); it lands on the left
/// half of i and, when j is in the batch, the right half of j.
pub fn positive_loss(
    z: &EmbeddingMatrix,
    stats: &CooccurrenceStats,
    batch: &[NodeId],
    weight: f64,
    mut zgrad: Option<&mut BatchZGrad>,
) -> f64 {
    if weight == 0.0 {
        return 0.0;
    }
    let half = z.dim / 2;
    let mut loss = 0.0;
    for &i in batch {
        for (j, w0) in top_kp_neighbors(stats, i) {
            let w = weight * w0;
            let li = z.left(i);
            let rj = z.right(j);
            let s = dot(li, rj);
            loss += w * softplus(-s);
            if let Some(g) = zgrad.as_deref_mut() {
                let ds = -w * sigmoid(-s);
                g.add_slice(i, 0, ds, rj);
                g.add_slice(j, half, ds, li);
            }
        }
    }
    loss
}

/// Draw negatives for every batch node on per-(epoch, node) streams.
/// Returns the lists and how many came back short.
pub fn draw_batch_negatives(
    stats: &CooccurrenceStats,
    batch: &[NodeId],
    k: usize,
    mode: SamplingMode,
    seed: u64,
    epoch: u64,
) -> Result<(Vec<Vec<NodeId>>, usize)> {
    let mut lists = Vec::with_capacity(batch.len());
    let mut short = 0usize;
    for &v in batch {
        let mut rng = stream(seed, SALT_NEG_DRAW, &[epoch, v as u64]);
        let (negs, was_short) = draw_negatives(stats, v, k, mode, batch, &mut rng)?;
        if was_short {
            short += 1;
        }
        lists.push(negs);
    }
    Ok((lists, short))
}

/// Contextually negative sampling loss: a * (z_i . z_j)^2 summed over the
/// drawn negatives of every batch node.
pub fn negative_loss(
    z: &EmbeddingMatrix,
    batch: &[NodeId],
    negatives: &[Vec<NodeId>],
    a: f64,
    mut zgrad: Option<&mut BatchZGrad>,
) -> f64 {
    let mut loss = 0.0;
    for (bi, &i) in batch.iter().enumerate() {
        for &j in &negatives[bi] {
            let zi = z.row(i);
            let zj = z.row(j);
            let s = dot(zi, zj);
            loss += a * s * s;
            if let Some(g) = zgrad.as_deref_mut() {
                g.add(i, 2.0 * a * s, zj);
                g.add(j, 2.0 * a * s, zi);
            }
        }
    }
    loss
}

struct DecoderGrads {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w3: Vec<f64>,
    b3: Vec<f64>,
}

impl DecoderGrads {
    fn zeros(model: &CoaneModel) -> Self {
        Self {
            w1: vec![0.0; model.decoder.w1.len()],
            b1: vec![0.0; model.decoder.b1.len()],
            w2: vec![0.0; model.decoder.w2.len()],
            b2: vec![0.0; model.decoder.b2.len()],
            w3: vec![0.0; model.decoder.w3.len()],
            b3: vec![0.0; model.decoder.b3.len()],
        }
    }
}

/// Attribute preservation: gamma * mean over (batch x d) entries of the
/// squared reconstruction error, with standard backprop through the decoder.
/// The rectifier subgradient at 0 is taken as 0. Returns the loss; decoder
/// gradients and per-node embedding gradients are accumulated when requested.
#[allow(clippy::too_many_arguments)]
fn attribute_loss_impl(
    z: &EmbeddingMatrix,
    x: &[f64],
    d: usize,
    batch: &[NodeId],
    model: &CoaneModel,
    gamma: f64,
    mut grads: Option<(&mut BatchZGrad, &mut DecoderGrads)>,
    workers: usize,
) -> f64 {
    if batch.is_empty() || d == 0 {
        return 0.0;
    }
    let p = &model.decoder;
    let scale = 2.0 * gamma / (batch.len() as f64 * d as f64);
    let chunk = batch.len().div_ceil(workers.max(1));

    struct ChunkOut {
        loss: f64,
        zgrads: Vec<(NodeId, Vec<f64>)>,
        dec: Option<Box<DecoderGrads>>,
    }

    let want_grads = grads.is_some();
    let outs: Vec<ChunkOut> = batch
        .par_chunks(chunk)
        .map(|nodes| {
            let mut loss = 0.0;
            let mut zgrads = Vec::new();
            let mut dec = if want_grads {
                Some(Box::new(DecoderGrads {
                    w1: vec![0.0; p.w1.len()],
                    b1: vec![0.0; p.b1.len()],
                    w2: vec![0.0; p.w2.len()],
                    b2: vec![0.0; p.b2.len()],
                    w3: vec![0.0; p.w3.len()],
                    b3: vec![0.0; p.b3.len()],
                }))
            } else {
                None
            };
            for &v in nodes {
                let zv = z.row(v);
                let xv = &x[v as usize * d..(v as usize + 1) * d];
                let t = decode_forward(zv, p);
                let mut se = 0.0;
                for (xh, xt) in t.xhat.iter().zip(xv) {
                    let e = xh - xt;
                    se += e * e;
                }
                loss += se;
                let Some(dg) = dec.as_deref_mut() else { continue };
                // backprop: dL/dxhat = scale * (xhat - x)
                let dxhat: Vec<f64> = t.xhat.iter().zip(xv).map(|(a, b)| scale * (a - b)).collect();
                let mut da2 = vec![0.0; p.hidden2];
                for o in 0..p.out_dim {
                    let g = dxhat[o];
                    if g == 0.0 {
                        continue;
                    }
                    let wrow = &p.w3[o * p.hidden2..(o + 1) * p.hidden2];
                    let grow = &mut dg.w3[o * p.hidden2..(o + 1) * p.hidden2];
                    for k in 0..p.hidden2 {
                        grow[k] += g * t.a2[k];
                        da2[k] += g * wrow[k];
                    }
                    dg.b3[o] += g;
                }
                let du2: Vec<f64> = da2
                    .iter()
                    .zip(&t.u2)
                    .map(|(&g, &u)| if u > 0.0 { g } else { 0.0 })
                    .collect();
                let mut da1 = vec![0.0; p.hidden1];
                for i in 0..p.hidden2 {
                    let g = du2[i];
                    if g == 0.0 {
                        continue;
                    }
                    let wrow = &p.w2[i * p.hidden1..(i + 1) * p.hidden1];
                    let grow = &mut dg.w2[i * p.hidden1..(i + 1) * p.hidden1];
                    for k in 0..p.hidden1 {
                        grow[k] += g * t.a1[k];
                        da1[k] += g * wrow[k];
                    }
                    dg.b2[i] += g;
                }
                let du1: Vec<f64> = da1
                    .iter()
                    .zip(&t.u1)
                    .map(|(&g, &u)| if u > 0.0 { g } else { 0.0 })
                    .collect();
                let mut dz = vec![0.0; p.in_dim];
                for i in 0..p.hidden1 {
                    let g = du1[i];
                    if g == 0.0 {
                        continue;
                    }
                    let wrow = &p.w1[i * p.in_dim..(i + 1) * p.in_dim];
                    let grow = &mut dg.w1[i * p.in_dim..(i + 1) * p.in_dim];
                    for k in 0..p.in_dim {
                        grow[k] += g * zv[k];
                        dz[k] += g * wrow[k];
                    }
                    dg.b1[i] += g;
                }
                zgrads.push((v, dz));
            }
            ChunkOut { loss, zgrads, dec }
        })
        .collect();

    let mut loss = 0.0;
    for out in outs {
        loss += out.loss;
        if let Some((zg, dg)) = grads.as_mut() {
            for (v, dz) in &out.zgrads {
                zg.add(*v, 1.0, dz);
            }
            if let Some(local) = out.dec {
                for (dst, src) in [
                    (&mut dg.w1, &local.w1),
                    (&mut dg.b1, &local.b1),
                    (&mut dg.w2, &local.w2),
                    (&mut dg.b2, &local.b2),
                    (&mut dg.w3, &local.w3),
                    (&mut dg.b3, &local.b3),
                ] {
                    for (a, b) in dst.iter_mut().zip(src) {
                        *a += b;
                    }
                }
            }
        }
    }
    gamma * loss / (batch.len() as f64 * d as f64)
}

/// Attribute-preservation loss alone (no gradients).
pub fn attribute_loss(
    z: &EmbeddingMatrix,
    x: &[f64],
    d: usize,
    batch: &[NodeId],
    model: &CoaneModel,
    gamma: f64,
) -> f64 {
    attribute_loss_impl(z, x, d, batch, model, gamma, None, 1)
}

fn batch_index(batch: &[NodeId]) -> HashMap<NodeId, usize> {
    batch.iter().enumerate().map(|(i, &v)| (v, i)).collect()
}

/// Encode the batch rows with the current filters and write them into Z
/// (Algorithm-style embedding update before the loss).
pub fn encode_batch(
    batch: &[NodeId],
    corpus: &ContextCorpus,
    attrs: &SparseAttrs,
    model: &CoaneModel,
    z: &mut EmbeddingMatrix,
) -> Result<()> {
    let rows: Vec<Vec<f64>> = batch
        .par_iter()
        .map(|&v| encode_node(v, corpus, attrs, &model.bank))
        .collect::<Result<_>>()?;
    for (&v, row) in batch.iter().zip(rows) {
        z.row_mut(v).copy_from_slice(&row);
    }
    Ok(())
}

/// The loss of one batch step as a pure function of the model parameters:
/// batch rows re-encoded into a scratch copy of Z, all other rows constant,
/// negatives fixed by the caller. This is the function the gradient checker
/// differentiates.
#[allow(clippy::too_many_arguments)]
pub fn batch_loss(
    batch: &[NodeId],
    corpus: &ContextCorpus,
    attrs: &SparseAttrs,
    x: &[f64],
    d: usize,
    stats: &CooccurrenceStats,
    model: &CoaneModel,
    z_base: &EmbeddingMatrix,
    negatives: &[Vec<NodeId>],
    config: &LossConfig,
) -> Result<LossBreakdown> {
    let mut z = z_base.clone();
    encode_batch(batch, corpus, attrs, model, &mut z)?;
    let l_pos = positive_loss(&z, stats, batch, config.pos_weight, None);
    let l_neg = negative_loss(&z, batch, negatives, config.neg_strength, None);
    let l_att = attribute_loss_impl(&z, x, d, batch, model, config.attr_weight, None, 1);
    Ok(LossBreakdown {
        l_pos,
        l_neg,
        l_att,
        l_obj: l_pos + l_neg + l_att,
        short_lists: 0,
    })
}

/// One batch step: encode batch embeddings into Z, evaluate all three loss
/// terms, and chain embedding-level gradients through the pooling and the
/// convolution into the filter bank. Returns the loss breakdown and
/// per-tensor gradients.
#[allow(clippy::too_many_arguments)]
pub fn total_loss_and_gradients(
    batch: &[NodeId],
    corpus: &ContextCorpus,
    attrs: &SparseAttrs,
    x: &[f64],
    d: usize,
    stats: &CooccurrenceStats,
    model: &CoaneModel,
    z: &mut EmbeddingMatrix,
    negatives: &[Vec<NodeId>],
    short_lists: usize,
    config: &LossConfig,
    workers: usize,
) -> Result<(LossBreakdown, ModelGradients)> {
    encode_batch(batch, corpus, attrs, model, z)?;
    let index = batch_index(batch);
    let mut zgrad = BatchZGrad::new(batch.len(), z.dim, &index);
    let mut dec_grads = DecoderGrads::zeros(model);

    let l_pos = positive_loss(z, stats, batch, config.pos_weight, Some(&mut zgrad));
    let l_neg = negative_loss(z, batch, negatives, config.neg_strength, Some(&mut zgrad));
    let l_att = attribute_loss_impl(
        z,
        x,
        d,
        batch,
        model,
        config.attr_weight,
        Some((&mut zgrad, &mut dec_grads)),
        workers,
    );

    // chain zgrad through pooling (1/|context(v)| per window) and the
    // convolution (d r/d theta_j[s,a] = R[s,a]) into the filter bank
    let dp = model.bank.num_filters;
    let ad = model.bank.attr_dim;
    let chunk = batch.len().div_ceil(workers.max(1));
    let theta_parts: Vec<Vec<f64>> = batch
        .par_chunks(chunk)
        .map(|nodes| {
            let mut local = vec![0.0; model.bank.weights.len()];
            for &v in nodes {
                let gi = zgrad.row(v).unwrap();
                let m = corpus.counts[v as usize] as f64;
                if m == 0.0 {
                    continue;
                }
                let scaled: Vec<f64> = gi.iter().map(|g| g / m).collect();
                for w in &corpus.windows[v as usize] {
                    for (s, slot) in w.slots.iter().enumerate() {
                        let Some(u) = slot else { continue };
                        for &(a, xval) in attrs.row(*u) {
                            let base = (s * ad + a as usize) * dp;
                            let dst = &mut local[base..base + dp];
                            for (t, g) in dst.iter_mut().zip(&scaled) {
                                *t += xval * g;
                            }
                        }
                    }
                }
            }
            local
        })
        .collect();

    let mut grads = ModelGradients {
        theta: vec![0.0; model.bank.weights.len()],
        w1: dec_grads.w1,
        b1: dec_grads.b1,
        w2: dec_grads.w2,
        b2: dec_grads.b2,
        w3: dec_grads.w3,
        b3: dec_grads.b3,
    };
    for part in theta_parts {
        for (a, b) in grads.theta.iter_mut().zip(part) {
            *a += b;
        }
    }

    Ok((
        LossBreakdown {
            l_pos,
            l_neg,
            l_att,
            l_obj: l_pos + l_neg + l_att,
            short_lists,
        },
        grads,
    ))
}

/// Bias-corrected first/second-moment state for one tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn zeros(len: usize) -> Self {
        Self {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One Adam update on a tensor. A non-finite gradient aborts with a
/// diagnostic naming the tensor. The optional clip rescales the gradient to
/// the configured L2 norm before the moment update.
pub fn adam_step(
    name: &str,
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    config: &LossConfig,
) -> Result<()> {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            tensor: name.to_string(),
        });
    }
    let mut scale = 1.0;
    if let Some(clip) = config.clip {
        let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > clip {
            scale = clip / norm;
        }
    }
    state.step += 1;
    let bc1 = 1.0 - config.beta1.powi(state.step as i32);
    let bc2 = 1.0 - config.beta2.powi(state.step as i32);
    for i in 0..params.len() {
        let g = grads[i] * scale;
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    Ok(())
}

/// The unadjusted full graph likelihood (reference only; training uses the
/// top-k_p positive term). Negative log of
/// prod sigma(L_i.R_j)^(D_ij) * sigma(1 - L_i.R_j)^(I[E_ij = 0]).
pub fn full_graph_log_likelihood(
    z: &EmbeddingMatrix,
    stats: &CooccurrenceStats,
    graph: &crate::graph::AttributedGraph,
) -> f64 {
    let n = z.n();
    let mut nll = 0.0;
    for i in 0..n as NodeId {
        for j in 0..n as NodeId {
            if i == j {
                continue;
            }
            let s = dot(z.left(i), z.right(j));
            let d_ij = stats.d[i as usize]
                .binary_search_by_key(&j, |&(c, _)| c)
                .map(|k| stats.d[i as usize][k].1)
                .unwrap_or(0.0);
            if d_ij > 0.0 {
                nll -= d_ij * log_sigmoid(s);
            }
            if !graph.has_edge(i, j) {
                nll -= log_sigmoid(1.0 - s);
            }
        }
    }
    nll
}
