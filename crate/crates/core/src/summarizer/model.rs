//! Graph-augmented encoder / attention decoder.
//!
//! Row-vector convention throughout: `y = x · W`. GRU weight blocks are laid
//! out as `[update | reset | candidate]` along the column axis:
//!
//! ```text
//! z  = σ(x·Wz + h·Uz + bz)
//! r  = σ(x·Wr + h·Ur + br)
//! n  = tanh(x·Wn + (r ⊙ h)·Un + bn)
//! h' = (1 - z) ⊙ n + z ⊙ h
//! ```
//!
//! The graph branch runs `k` hops of `N ← relu(Â·N·Wg + N)` over the AST
//! node embeddings, with `Â` the row-normalized undirected adjacency plus
//! self loops. Each decoder step attends over encoder states and final node
//! states with dot-product attention, combines `[s; c_tok; c_ast]` through
//! `tanh(·Wc)` and projects to the output vocabulary.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::tensor::*;
use crate::code::CodeGraph;
use crate::corpus::{Vocab, BOS, EOS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("token id {id} out of range for vocabulary of size {size}")]
    VocabOverflow { id: u32, size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub d: usize,
    pub hops: usize,
    pub v_in: usize,
    pub v_out: usize,
}

pub const PARAM_NAMES: [&str; 12] = [
    "emb_in", "emb_out", "enc_w", "enc_u", "enc_b", "gnn_w", "dec_w", "dec_u", "dec_b", "comb_w", "out_w", "out_b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub emb_in: Tensor,
    pub emb_out: Tensor,
    pub enc_w: Tensor,
    pub enc_u: Tensor,
    pub enc_b: Tensor,
    pub gnn_w: Tensor,
    pub dec_w: Tensor,
    pub dec_u: Tensor,
    pub dec_b: Tensor,
    pub comb_w: Tensor,
    pub out_w: Tensor,
    pub out_b: Tensor,
}

impl Params {
    pub fn zeros(dims: ModelDims) -> Self {
        let ModelDims { d, v_in, v_out, .. } = dims;
        Params {
            emb_in: Tensor::zeros(v_in, d),
            emb_out: Tensor::zeros(v_out, d),
            enc_w: Tensor::zeros(d, 3 * d),
            enc_u: Tensor::zeros(d, 3 * d),
            enc_b: Tensor::zeros(1, 3 * d),
            gnn_w: Tensor::zeros(d, d),
            dec_w: Tensor::zeros(d, 3 * d),
            dec_u: Tensor::zeros(d, 3 * d),
            dec_b: Tensor::zeros(1, 3 * d),
            comb_w: Tensor::zeros(3 * d, d),
            out_w: Tensor::zeros(d, v_out),
            out_b: Tensor::zeros(1, v_out),
        }
    }

    /// Uniform `±1/sqrt(fan_in)` weights, zero biases.
    pub fn random(dims: ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ModelDims { d, v_in, v_out, .. } = dims;
        let s = 1.0 / (d as f64).sqrt();
        let sc = 1.0 / ((3 * d) as f64).sqrt();
        Params {
            emb_in: Tensor::uniform(v_in, d, 1.0, &mut rng),
            emb_out: Tensor::uniform(v_out, d, 1.0, &mut rng),
            enc_w: Tensor::uniform(d, 3 * d, s, &mut rng),
            enc_u: Tensor::uniform(d, 3 * d, s, &mut rng),
            enc_b: Tensor::zeros(1, 3 * d),
            gnn_w: Tensor::uniform(d, d, s, &mut rng),
            dec_w: Tensor::uniform(d, 3 * d, s, &mut rng),
            dec_u: Tensor::uniform(d, 3 * d, s, &mut rng),
            dec_b: Tensor::zeros(1, 3 * d),
            comb_w: Tensor::uniform(3 * d, d, sc, &mut rng),
            out_w: Tensor::uniform(d, v_out, s, &mut rng),
            out_b: Tensor::zeros(1, v_out),
        }
    }

    pub fn tensors(&self) -> [&Tensor; 12] {
        [
            &self.emb_in,
            &self.emb_out,
            &self.enc_w,
            &self.enc_u,
            &self.enc_b,
            &self.gnn_w,
            &self.dec_w,
            &self.dec_u,
            &self.dec_b,
            &self.comb_w,
            &self.out_w,
            &self.out_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 12] {
        [
            &mut self.emb_in,
            &mut self.emb_out,
            &mut self.enc_w,
            &mut self.enc_u,
            &mut self.enc_b,
            &mut self.gnn_w,
            &mut self.dec_w,
            &mut self.dec_u,
            &mut self.dec_b,
            &mut self.comb_w,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn expected_shapes(dims: ModelDims) -> [(usize, usize); 12] {
        let z = Params::zeros(dims);
        z.tensors().map(|t| (t.rows, t.cols))
    }

    pub fn dims(&self, hops: usize) -> ModelDims {
        ModelDims {
            d: self.gnn_w.rows,
            hops,
            v_in: self.emb_in.rows,
            v_out: self.emb_out.rows,
        }
    }

    pub fn validate(&self, dims: ModelDims) -> Result<(), ModelError> {
        for ((name, t), shape) in PARAM_NAMES.iter().zip(self.tensors()).zip(Params::expected_shapes(dims)) {
            if (t.rows, t.cols) != shape || t.data.len() != t.rows * t.cols {
                return Err(ModelError::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    t.rows, t.cols, shape.0, shape.1
                )));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn snap_f32(&mut self) {
        for t in self.tensors_mut() {
            t.snap_f32();
        }
    }
}

/// A code graph mapped to vocabulary ids, with the normalized adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInput {
    pub code_ids: Vec<u32>,
    pub ast_ids: Vec<u32>,
    /// Row-normalized `(A + I)` as neighbor lists.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

/// Row-normalized adjacency with self loops; edges are treated as undirected.
pub fn normalized_adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<(usize, f64)>> {
    let mut nbrs: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for &(p, c) in edges {
        if p < n && c < n && p != c {
            nbrs[p].push(c);
            nbrs[c].push(p);
        }
    }
    nbrs.into_iter()
        .map(|mut list| {
            list.sort_unstable();
            list.dedup();
            let w = 1.0 / list.len() as f64;
            list.into_iter().map(|j| (j, w)).collect()
        })
        .collect()
}

impl EncodedInput {
    pub fn from_graph(graph: &CodeGraph, vocab: &Vocab) -> Self {
        let ast_ids = if graph.degraded { Vec::new() } else { vocab.encode(&graph.ast_tokens) };
        let adjacency = normalized_adjacency(ast_ids.len(), if graph.degraded { &[] } else { &graph.edges });
        EncodedInput {
            code_ids: vocab.encode(&graph.code_tokens),
            ast_ids,
            adjacency,
        }
    }

    pub fn check(&self, v_in: usize) -> Result<(), ModelError> {
        for &id in self.code_ids.iter().chain(&self.ast_ids) {
            if id as usize >= v_in {
                return Err(ModelError::VocabOverflow { id, size: v_in });
            }
        }
        if self.adjacency.len() != self.ast_ids.len() {
            return Err(ModelError::DimensionMismatch("adjacency does not match node count".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct GruCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    rh: Vec<f64>,
}

fn gru_step(x: &[f64], h: &[f64], w: &Tensor, u: &Tensor, b: &Tensor) -> (Vec<f64>, GruCache) {
    let d = h.len();
    let a = vec_mat(x, w);
    let uzr = vec_mat_cols(h, u, 0, 2 * d);
    let bias = b.row(0);
    let z: Vec<f64> = (0..d).map(|i| sigmoid(a[i] + uzr[i] + bias[i])).collect();
    let r: Vec<f64> = (0..d).map(|i| sigmoid(a[d + i] + uzr[d + i] + bias[d + i])).collect();
    let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
    let un = vec_mat_cols(&rh, u, 2 * d, 3 * d);
    let n: Vec<f64> = (0..d).map(|i| (a[2 * d + i] + un[i] + bias[2 * d + i]).tanh()).collect();
    let h_new: Vec<f64> = (0..d).map(|i| (1.0 - z[i]) * n[i] + z[i] * h[i]).collect();
    (
        h_new,
        GruCache {
            x: x.to_vec(),
            h_prev: h.to_vec(),
            z,
            r,
            n,
            rh,
        },
    )
}

/// Backprop one GRU step. Returns `(dx, dh_prev)`.
fn gru_backward(
    c: &GruCache,
    dh_new: &[f64],
    u: &Tensor,
    w: &Tensor,
    dw: &mut Tensor,
    du: &mut Tensor,
    db: &mut Tensor,
) -> (Vec<f64>, Vec<f64>) {
    let d = dh_new.len();
    let mut dpre = vec![0.0; 3 * d];
    let mut dh_prev: Vec<f64> = (0..d).map(|i| dh_new[i] * c.z[i]).collect();
    for i in 0..d {
        let dn = dh_new[i] * (1.0 - c.z[i]);
        let dz = dh_new[i] * (c.h_prev[i] - c.n[i]);
        dpre[2 * d + i] = dn * (1.0 - c.n[i] * c.n[i]);
        dpre[i] = dz * c.z[i] * (1.0 - c.z[i]);
    }
    let drh = vec_mat_t_cols(&dpre[2 * d..], u, 2 * d, 3 * d);
    for i in 0..d {
        let dr = drh[i] * c.h_prev[i];
        dh_prev[i] += drh[i] * c.r[i];
        dpre[d + i] = dr * c.r[i] * (1.0 - c.r[i]);
    }
    add_outer_cols(du, &c.rh, &dpre[2 * d..], 2 * d);
    add_outer_cols(du, &c.h_prev, &dpre[..2 * d], 0);
    add_into(&mut dh_prev, &vec_mat_t_cols(&dpre[..2 * d], u, 0, 2 * d));
    add_outer(dw, &c.x, &dpre);
    add_into(&mut db.data, &dpre);
    (vec_mat_t(&dpre, w), dh_prev)
}

/// Attention of `query` over `keys` (which double as values).
fn attend(keys: &[Vec<f64>], query: &[f64]) -> (Vec<f64>, Vec<f64>) {
    if keys.is_empty() {
        return (Vec::new(), vec![0.0; query.len()]);
    }
    let scores: Vec<f64> = keys.iter().map(|k| dot(k, query)).collect();
    let alpha = softmax(&scores);
    let mut ctx = vec![0.0; query.len()];
    for (a, k) in alpha.iter().zip(keys) {
        for (c, kv) in ctx.iter_mut().zip(k) {
            *c += a * kv;
        }
    }
    (alpha, ctx)
}

fn attend_backward(keys: &[Vec<f64>], query: &[f64], alpha: &[f64], dctx: &[f64], dkeys: &mut [Vec<f64>], dquery: &mut [f64]) {
    if keys.is_empty() {
        return;
    }
    let dalpha: Vec<f64> = keys.iter().map(|k| dot(k, dctx)).collect();
    let mean: f64 = alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
    for t in 0..keys.len() {
        let de = alpha[t] * (dalpha[t] - mean);
        for i in 0..query.len() {
            dkeys[t][i] += alpha[t] * dctx[i] + de * query[i];
            dquery[i] += de * keys[t][i];
        }
    }
}

/// Encoder output shared by every decoder step.
#[derive(Debug, Clone)]
pub struct Encoded {
    states: Vec<Vec<f64>>,
    enc_caches: Vec<GruCache>,
    /// Node states after each hop; `layers[0]` are the embeddings.
    layers: Vec<Vec<Vec<f64>>>,
    /// Pre-activation of each hop (`Â·N·Wg + N`) and the aggregate `Â·N`.
    hop_pre: Vec<Vec<Vec<f64>>>,
    hop_agg: Vec<Vec<Vec<f64>>>,
    final_state: Vec<f64>,
}

impl Encoded {
    fn nodes(&self) -> &[Vec<f64>] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn encode(p: &Params, hops: usize, input: &EncodedInput) -> Encoded {
    let d = p.gnn_w.rows;
    let mut h = vec![0.0; d];
    let mut states = Vec::with_capacity(input.code_ids.len());
    let mut enc_caches = Vec::with_capacity(input.code_ids.len());
    for &id in &input.code_ids {
        let (h_new, cache) = gru_step(p.emb_in.row(id as usize), &h, &p.enc_w, &p.enc_u, &p.enc_b);
        h = h_new;
        states.push(h.clone());
        enc_caches.push(cache);
    }

    let mut layers = vec![input.ast_ids.iter().map(|&id| p.emb_in.row(id as usize).to_vec()).collect::<Vec<_>>()];
    let mut hop_pre = Vec::new();
    let mut hop_agg = Vec::new();
    if !input.ast_ids.is_empty() {
        for _ in 0..hops {
            let cur = layers.last().unwrap();
            let agg: Vec<Vec<f64>> = input
                .adjacency
                .iter()
                .map(|nbrs| {
                    let mut m = vec![0.0; d];
                    for &(j, w) in nbrs {
                        for (mv, cv) in m.iter_mut().zip(&cur[j]) {
                            *mv += w * cv;
                        }
                    }
                    m
                })
                .collect();
            let pre: Vec<Vec<f64>> = agg
                .iter()
                .zip(cur)
                .map(|(m, n)| {
                    let mut v = vec_mat(m, &p.gnn_w);
                    add_into(&mut v, n);
                    v
                })
                .collect();
            let next: Vec<Vec<f64>> = pre.iter().map(|v| v.iter().map(|x| x.max(0.0)).collect()).collect();
            hop_agg.push(agg);
            hop_pre.push(pre);
            layers.push(next);
        }
    }

    Encoded {
        final_state: h,
        states,
        enc_caches,
        layers,
        hop_pre,
        hop_agg,
    }
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: Vec<f64>,
    pub logits: Vec<f64>,
    pub token_attention: Vec<f64>,
    pub node_attention: Vec<f64>,
    cache: StepCache,
}

#[derive(Debug, Clone)]
struct StepCache {
    gru: GruCache,
    combined: Vec<f64>,
    hidden: Vec<f64>,
}

/// One decoder step from state `prev` consuming output token `token`.
pub fn decoder_step(p: &Params, enc: &Encoded, prev: &[f64], token: u32) -> StepOutput {
    let d = prev.len();
    let (s, gru) = gru_step(p.emb_out.row(token as usize), prev, &p.dec_w, &p.dec_u, &p.dec_b);
    let (token_attention, c_tok) = attend(&enc.states, &s);
    let (node_attention, c_ast) = attend(enc.nodes(), &s);
    let mut combined = Vec::with_capacity(3 * d);
    combined.extend_from_slice(&s);
    combined.extend_from_slice(&c_tok);
    combined.extend_from_slice(&c_ast);
    let hidden: Vec<f64> = vec_mat(&combined, &p.comb_w).into_iter().map(f64::tanh).collect();
    let mut logits = vec_mat(&hidden, &p.out_w);
    add_into(&mut logits, p.out_b.row(0));
    StepOutput {
        state: s,
        logits,
        token_attention,
        node_attention,
        cache: StepCache { gru, combined, hidden },
    }
}

/// Teacher-forced pass: one step per prefix token.
pub fn run_decoder(p: &Params, enc: &Encoded, prefix: &[u32]) -> Vec<StepOutput> {
    let mut s = enc.final_state.clone();
    let mut out = Vec::with_capacity(prefix.len());
    for &tok in prefix {
        let step = decoder_step(p, enc, &s, tok);
        s = step.state.clone();
        out.push(step);
    }
    out
}

/// Summed cross-entropy of `targets` under teacher forcing on `inputs`, plus
/// the gradient of that sum scaled by `scale` accumulated into `grads`.
pub fn loss_and_grad(p: &Params, hops: usize, input: &EncodedInput, inputs: &[u32], targets: &[u32], scale: f64, grads: &mut Params) -> f64 {
    debug_assert_eq!(inputs.len(), targets.len());
    let d = p.gnn_w.rows;
    let enc = encode(p, hops, input);
    let steps = run_decoder(p, &enc, inputs);

    let mut loss = 0.0;
    let mut d_states = vec![vec![0.0; d]; enc.states.len()];
    let n_nodes = enc.nodes().len();
    let mut d_nodes = vec![vec![0.0; d]; n_nodes];
    let mut ds_next = vec![0.0; d];

    for (j, step) in steps.iter().enumerate().rev() {
        let target = targets[j] as usize;
        loss += log_sum_exp(&step.logits) - step.logits[target];

        let mut dlogits = softmax(&step.logits);
        dlogits[target] -= 1.0;
        dlogits.iter_mut().for_each(|g| *g *= scale);
        add_outer(&mut grads.out_w, &step.cache.hidden, &dlogits);
        add_into(&mut grads.out_b.data, &dlogits);
        let dhidden = vec_mat_t(&dlogits, &p.out_w);
        let dpre: Vec<f64> = dhidden.iter().zip(&step.cache.hidden).map(|(g, h)| g * (1.0 - h * h)).collect();
        add_outer(&mut grads.comb_w, &step.cache.combined, &dpre);
        let dcomb = vec_mat_t(&dpre, &p.comb_w);

        let mut ds: Vec<f64> = dcomb[..d].to_vec();
        add_into(&mut ds, &ds_next);
        attend_backward(&enc.states, &step.state, &step.token_attention, &dcomb[d..2 * d], &mut d_states, &mut ds);
        attend_backward(enc.nodes(), &step.state, &step.node_attention, &dcomb[2 * d..], &mut d_nodes, &mut ds);

        let (dx, dprev) = gru_backward(&step.cache.gru, &ds, &p.dec_u, &p.dec_w, &mut grads.dec_w, &mut grads.dec_u, &mut grads.dec_b);
        add_into(grads.emb_out.row_mut(inputs[j] as usize), &dx);
        ds_next = dprev;
    }

    // Decoder init is the encoder's final state.
    let mut dh = ds_next;
    for t in (0..enc.states.len()).rev() {
        add_into(&mut dh, &d_states[t]);
        let (dx, dprev) = gru_backward(&enc.enc_caches[t], &dh, &p.enc_u, &p.enc_w, &mut grads.enc_w, &mut grads.enc_u, &mut grads.enc_b);
        add_into(grads.emb_in.row_mut(input.code_ids[t] as usize), &dx);
        dh = dprev;
    }

    let mut dn = d_nodes;
    for hop in (0..enc.hop_pre.len()).rev() {
        let pre = &enc.hop_pre[hop];
        let agg = &enc.hop_agg[hop];
        let dp: Vec<Vec<f64>> = dn
            .iter()
            .zip(pre)
            .map(|(g, p)| g.iter().zip(p).map(|(g, p)| if *p > 0.0 { *g } else { 0.0 }).collect())
            .collect();
        let mut dprev = dp.clone();
        for (i, dpi) in dp.iter().enumerate() {
            add_outer(&mut grads.gnn_w, &agg[i], dpi);
            let dm = vec_mat_t(dpi, &p.gnn_w);
            for &(j, w) in &input.adjacency[i] {
                for (a, b) in dprev[j].iter_mut().zip(&dm) {
                    *a += w * b;
                }
            }
        }
        dn = dprev;
    }
    for (i, g) in dn.iter().enumerate() {
        add_into(grads.emb_in.row_mut(input.ast_ids[i] as usize), g);
    }

    loss
}

/// Decoder inputs and targets for a target sequence: `<s> y…` / `y… </s>`.
pub fn teacher_forcing(target: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let mut inputs = vec![BOS];
    inputs.extend_from_slice(target);
    let mut targets = target.to_vec();
    targets.push(EOS);
    (inputs, targets)
}

/// Trained model, vocabularies and preprocessing limits.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarizerModel {
    pub hops: usize,
    pub t_max: usize,
    pub a_max: usize,
    pub params: Params,
    pub input_vocab: Vocab,
    pub output_vocab: Vocab,
}

impl SummarizerModel {
    pub fn new(d: usize, hops: usize, input_vocab: Vocab, output_vocab: Vocab, seed: u64) -> Self {
        let dims = ModelDims {
            d,
            hops,
            v_in: input_vocab.len(),
            v_out: output_vocab.len(),
        };
        SummarizerModel {
            hops,
            t_max: crate::code::DEFAULT_T_MAX,
            a_max: crate::code::DEFAULT_A_MAX,
            params: Params::random(dims, seed),
            input_vocab,
            output_vocab,
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            d: self.params.gnn_w.rows,
            hops: self.hops,
            v_in: self.input_vocab.len(),
            v_out: self.output_vocab.len(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.params.validate(self.dims())
    }

    pub fn encode_graph(&self, graph: &CodeGraph) -> EncodedInput {
        EncodedInput::from_graph(graph, &self.input_vocab)
    }

    /// Logits `[prefix.len() × V_out]` for a teacher-forced prefix.
    pub fn forward_ids(&self, input: &EncodedInput, prefix: &[u32]) -> Result<Vec<Vec<f64>>, ModelError> {
        self.validate()?;
        input.check(self.input_vocab.len())?;
        if let Some(&id) = prefix.iter().find(|&&t| t as usize >= self.output_vocab.len()) {
            return Err(ModelError::VocabOverflow {
                id,
                size: self.output_vocab.len(),
            });
        }
        let enc = encode(&self.params, self.hops, input);
        Ok(run_decoder(&self.params, &enc, prefix).into_iter().map(|s| s.logits).collect())
    }

    pub fn forward(&self, graph: &CodeGraph, prefix: &[u32]) -> Result<Vec<Vec<f64>>, ModelError> {
        self.forward_ids(&self.encode_graph(graph), prefix)
    }

    /// Per-step outputs including attention weights.
    pub fn trace(&self, graph: &CodeGraph, prefix: &[u32]) -> Vec<StepOutput> {
        let input = self.encode_graph(graph);
        let enc = encode(&self.params, self.hops, &input);
        run_decoder(&self.params, &enc, prefix)
    }

    pub fn greedy_decode_ids(&self, input: &EncodedInput, max_len: usize) -> Vec<u32> {
        let enc = encode(&self.params, self.hops, input);
        let mut s = enc.final_state.clone();
        let mut tok = BOS;
        let mut out = Vec::new();
        while out.len() < max_len {
            let step = decoder_step(&self.params, &enc, &s, tok);
            let best = argmax(&step.logits) as u32;
            if best == EOS {
                break;
            }
            out.push(best);
            s = step.state;
            tok = best;
        }
        out
    }

    pub fn greedy_decode(&self, graph: &CodeGraph, max_len: usize) -> Vec<String> {
        let ids = self.greedy_decode_ids(&self.encode_graph(graph), max_len);
        ids.into_iter().map(|id| self.output_vocab.token(id).to_string()).collect()
    }
}

/// First index of the maximum.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
