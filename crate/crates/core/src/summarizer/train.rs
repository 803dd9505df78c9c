use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{argmax, encode, loss_and_grad, run_decoder, teacher_forcing, EncodedInput, Params, SummarizerModel};
use crate::code::{build_code_graph, DEFAULT_A_MAX, DEFAULT_T_MAX};
use crate::corpus::{build_vocab, CorpusSplit, TrainingPair, Vocab};

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub seed: u64,
    pub d: usize,
    pub hops: usize,
    pub v_in_max: usize,
    pub v_out_max: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 100,
            batch_size: 30,
            patience: 15,
            learning_rate: 1e-3,
            grad_clip: 5.0,
            seed: 1,
            d: 64,
            hops: 2,
            v_in_max: 10_000,
            v_out_max: 10_000,
        }
    }
}

impl TrainingConfig {
    fn check(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.grad_clip > 0.0) {
            return bad("grad_clip must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-token training cross-entropy.
    pub train_loss: f64,
    pub valid_loss: f64,
    pub valid_token_accuracy: f64,
    pub valid_sequence_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub config: TrainingConfig,
    pub vocab_in: usize,
    pub vocab_out: usize,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// A pair ready for the model: encoded graph plus decoder inputs/targets.
#[derive(Debug, Clone)]
pub struct Example {
    pub input: EncodedInput,
    pub inputs: Vec<u32>,
    pub targets: Vec<u32>,
}

pub fn prepare(pairs: &[TrainingPair], vin: &Vocab, vout: &Vocab) -> Vec<Example> {
    pairs
        .iter()
        .map(|p| {
            let g = build_code_graph(&p.source, DEFAULT_T_MAX, DEFAULT_A_MAX);
            let (inputs, targets) = teacher_forcing(&vout.encode(&p.target));
            Example {
                input: EncodedInput::from_graph(&g, vin),
                inputs,
                targets,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub token_accuracy: f64,
    pub sequence_accuracy: f64,
}

/// Teacher-forced loss and argmax accuracy, averaged per token.
pub fn evaluate(params: &Params, hops: usize, examples: &[Example]) -> Evaluation {
    let (mut loss, mut correct, mut tokens, mut exact) = (0.0, 0usize, 0usize, 0usize);
    for ex in examples {
        let enc = encode(params, hops, &ex.input);
        let mut all = true;
        for (step, &t) in run_decoder(params, &enc, &ex.inputs).iter().zip(&ex.targets) {
            loss += super::tensor::log_sum_exp(&step.logits) - step.logits[t as usize];
            if argmax(&step.logits) == t as usize {
                correct += 1;
            } else {
                all = false;
            }
            tokens += 1;
        }
        exact += all as usize;
    }
    let tokens = tokens.max(1) as f64;
    Evaluation {
        loss: loss / tokens,
        token_accuracy: correct as f64 / tokens,
        sequence_accuracy: exact as f64 / examples.len().max(1) as f64,
    }
}

/// Adaptive-moment optimizer over the full parameter set.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Params,
    v: Params,
}

impl Adam {
    pub fn new(like: &Params, lr: f64) -> Self {
        let mut m = like.clone();
        for t in m.tensors_mut() {
            t.fill(0.0);
        }
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            v: m.clone(),
            m,
        }
    }

    pub fn update(&mut self, params: &mut Params, grads: &Params) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = b1 * m.data[i] + (1.0 - b1) * gi;
                v.data[i] = b2 * v.data[i] + (1.0 - b2) * gi * gi;
                p.data[i] -= lr * (m.data[i] / c1) / ((v.data[i] / c2).sqrt() + eps);
            }
        }
    }
}

/// Scale `grads` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut Params, max_norm: f64) -> f64 {
    let norm = grads
        .tensors()
        .iter()
        .flat_map(|t| t.data.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for t in grads.tensors_mut() {
            t.data.iter_mut().for_each(|g| *g *= s);
        }
    }
    norm
}

/// Mean per-token loss over a batch and its gradient.
pub fn batch_gradient(params: &Params, hops: usize, batch: &[&Example]) -> (f64, Params) {
    let n_tokens: usize = batch.iter().map(|e| e.targets.len()).sum();
    let scale = 1.0 / n_tokens.max(1) as f64;
    let mut grads = params.clone();
    for t in grads.tensors_mut() {
        t.fill(0.0);
    }
    let mut loss = 0.0;
    for ex in batch {
        loss += loss_and_grad(params, hops, &ex.input, &ex.inputs, &ex.targets, scale, &mut grads);
    }
    (loss * scale, grads)
}

/// Improvement is higher validation accuracy, or equal accuracy with lower
/// validation loss.
fn improves(e: &Evaluation, best: &Option<Evaluation>) -> bool {
    match best {
        None => true,
        Some(b) => e.token_accuracy > b.token_accuracy || (e.token_accuracy == b.token_accuracy && e.loss < b.loss),
    }
}

pub fn train(split: &CorpusSplit, config: &TrainingConfig) -> Result<(SummarizerModel, TrainingReport), TrainError> {
    config.check()?;
    if split.train.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    if split.valid.is_empty() {
        return Err(TrainError::EmptySplit("valid"));
    }
    let (vin, vout) = build_vocab(&split.train, config.v_in_max, config.v_out_max);
    let mut model = SummarizerModel::new(config.d, config.hops, vin, vout, config.seed);
    let train_set = prepare(&split.train, &model.input_vocab, &model.output_vocab);
    let valid_set = prepare(&split.valid, &model.input_vocab, &model.output_vocab);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut adam = Adam::new(&model.params, config.learning_rate);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut records = Vec::new();
    let mut best: Option<Evaluation> = None;
    let mut best_params = model.params.clone();
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut token_sum) = (0.0, 0usize);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, mut grads) = batch_gradient(&model.params, config.hops, &batch);
            if !loss.is_finite() || !grads.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b });
            }
            let n: usize = batch.iter().map(|e| e.targets.len()).sum();
            loss_sum += loss * n as f64;
            token_sum += n;
            clip_global_norm(&mut grads, config.grad_clip);
            adam.update(&mut model.params, &grads);
            if !model.params.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b });
            }
        }
        let eval = evaluate(&model.params, config.hops, &valid_set);
        records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / token_sum.max(1) as f64,
            valid_loss: eval.loss,
            valid_token_accuracy: eval.token_accuracy,
            valid_sequence_accuracy: eval.sequence_accuracy,
        });
        if improves(&eval, &best) {
            best = Some(eval);
            best_params = model.params.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > config.patience {
                stopped_early = true;
                break;
            }
        }
    }

    model.params = best_params;
    model.params.snap_f32();
    let report = TrainingReport {
        config: config.clone(),
        vocab_in: model.input_vocab.len(),
        vocab_out: model.output_vocab.len(),
        epochs: records,
        best_epoch,
        stopped_early,
    };
    Ok((model, report))
}
