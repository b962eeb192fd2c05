//! The baseline CNN as four named, individually transferable layers:
//! E (embedding), C (convolution), H (fully connected hidden), O (output).

use std::fmt;

use rand::rngs::StdRng;

use crate::error::{Error, Result};
use crate::kernel::{
    apply_dropout, conv_over_time, conv_over_time_backward, matvec_affine, matvec_affine_backward,
    max_over_time, max_over_time_backward, softmax_xent, DropoutMask,
};
use crate::rng::seeded;
use crate::tensor::{ActivationKind, DenseTensor, ParamTensor, Scalar};
use crate::text::{EmbeddingTable, EncodedSentence, Vocabulary};
use crate::transfer::TransferPlan;

/// Weight-init half-width for conv, hidden, and output weights.
const WEIGHT_INIT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Embedding dimension.
    pub d: usize,
    /// Filter heights, one conv block per entry.
    pub region_sizes: Vec<usize>,
    /// Filters per region size.
    pub feature_maps: usize,
    /// Width of the fully connected hidden layer.
    pub hidden_units: usize,
    pub num_classes: usize,
    pub conv_activation: ActivationKind,
    pub hidden_activation: ActivationKind,
    pub dropout_rate: f64,
    /// Max l2 norm per H/O weight row, enforced after each optimizer step.
    pub l2_cap: f64,
    /// Apply dropout to the pooled feature vector (before H).
    pub dropout_pooled: bool,
    /// Apply dropout to the H-layer output (before O).
    pub dropout_hidden: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: 300,
            region_sizes: vec![3, 4, 5],
            feature_maps: 100,
            hidden_units: 100,
            num_classes: 2,
            conv_activation: ActivationKind::ReLU,
            hidden_activation: ActivationKind::Iden,
            dropout_rate: 0.6,
            l2_cap: 3.0,
            dropout_pooled: true,
            dropout_hidden: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::InvalidConfig("d must be ≥ 1".into()));
        }
        if self.region_sizes.is_empty() || self.region_sizes.iter().any(|r| *r < 1) {
            return Err(Error::InvalidConfig("region_sizes must be non-empty, all ≥ 1".into()));
        }
        if self.feature_maps < 1 || self.hidden_units < 1 {
            return Err(Error::InvalidConfig("feature_maps and hidden_units must be ≥ 1".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig("num_classes must be ≥ 2".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.l2_cap <= 0.0 {
            return Err(Error::InvalidConfig("l2_cap must be > 0".into()));
        }
        Ok(())
    }

    /// Length of the concatenated pooled feature vector.
    pub fn pooled_len(&self) -> usize {
        self.feature_maps * self.region_sizes.len()
    }

    /// Largest filter height; every encoded sentence must reach this length.
    pub fn min_sentence_len(&self) -> usize {
        self.region_sizes.iter().copied().max().unwrap_or(1)
    }

    /// Trainable-parameter count under a plan. The E and O layers are always
    /// excluded from the tally; C and H contribute their full size unless
    /// frozen.
    pub fn param_count(&self, plan: &TransferPlan) -> u64 {
        use crate::transfer::LayerMode::Frozen;
        let mut total = 0u64;
        if plan.c != Frozen {
            for h in &self.region_sizes {
                total += (h * self.d * self.feature_maps + self.feature_maps) as u64;
            }
        }
        if plan.h != Frozen {
            total += (self.pooled_len() * self.hidden_units + self.hidden_units) as u64;
        }
        total
    }
}

/// The four transferable layers, in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LayerId {
    E,
    C,
    H,
    O,
}

impl LayerId {
    pub const ALL: [LayerId; 4] = [LayerId::E, LayerId::C, LayerId::H, LayerId::O];
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LayerId::E => "E",
            LayerId::C => "C",
            LayerId::H => "H",
            LayerId::O => "O",
        };
        f.write_str(s)
    }
}

/// One convolution block: filters `[F×h×d]` plus bias `[F]`.
#[derive(Debug, Clone)]
pub struct ConvLayer<S> {
    pub filters: ParamTensor<S>,
    pub bias: ParamTensor<S>,
}

#[derive(Debug, Clone)]
pub struct CnnModel<S> {
    pub config: ModelConfig,
    pub embeddings: EmbeddingTable<S>,
    /// One block per region size, same order as `config.region_sizes`.
    pub conv: Vec<ConvLayer<S>>,
    pub hidden_w: ParamTensor<S>,
    pub hidden_b: ParamTensor<S>,
    pub output_w: ParamTensor<S>,
    pub output_b: ParamTensor<S>,
}

pub(crate) fn fresh_conv_layer<S: Scalar>(
    index: usize,
    h: usize,
    cfg: &ModelConfig,
    rng: &mut StdRng,
) -> ConvLayer<S> {
    let mut filters = DenseTensor::zeros(&[cfg.feature_maps, h, cfg.d]);
    filters.fill_uniform(-WEIGHT_INIT, WEIGHT_INIT, rng);
    ConvLayer {
        filters: ParamTensor::new(format!("C.filters.{index}"), filters, true),
        bias: ParamTensor::zeros(format!("C.bias.{index}"), &[cfg.feature_maps], true),
    }
}

pub(crate) fn fresh_affine<S: Scalar>(
    w_name: &str,
    b_name: &str,
    rows: usize,
    cols: usize,
    rng: &mut StdRng,
) -> (ParamTensor<S>, ParamTensor<S>) {
    let mut w = DenseTensor::zeros(&[rows, cols]);
    w.fill_uniform(-WEIGHT_INIT, WEIGHT_INIT, rng);
    (
        ParamTensor::new(w_name, w, true),
        ParamTensor::zeros(b_name, &[rows], true),
    )
}

impl<S: Scalar> CnnModel<S> {
    /// All-Fresh initialization. Draw order is fixed (E, then each conv
    /// block, then H, then O) so two models from one seed are bit-identical.
    pub fn init_random(config: ModelConfig, vocab: &Vocabulary, rng: &mut StdRng) -> Result<Self> {
        config.validate()?;
        let embeddings = EmbeddingTable::random(vocab.size(), config.d, rng);
        let conv = config
            .region_sizes
            .iter()
            .enumerate()
            .map(|(i, h)| fresh_conv_layer(i, *h, &config, rng))
            .collect();
        let (hidden_w, hidden_b) = fresh_affine("H.weight", "H.bias", config.hidden_units, config.pooled_len(), rng);
        let (output_w, output_b) = fresh_affine("O.weight", "O.bias", config.num_classes, config.hidden_units, rng);
        Ok(CnnModel {
            config,
            embeddings,
            conv,
            hidden_w,
            hidden_b,
            output_w,
            output_b,
        })
    }

    /// Tensors in canonical order (embeddings, conv blocks, hidden, output).
    pub fn tensors(&self) -> Vec<&ParamTensor<S>> {
        let mut out = vec![&self.embeddings.matrix];
        for block in &self.conv {
            out.push(&block.filters);
            out.push(&block.bias);
        }
        out.extend([&self.hidden_w, &self.hidden_b, &self.output_w, &self.output_b]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        let mut out: Vec<&mut ParamTensor<S>> = vec![&mut self.embeddings.matrix];
        for block in &mut self.conv {
            out.push(&mut block.filters);
            out.push(&mut block.bias);
        }
        out.push(&mut self.hidden_w);
        out.push(&mut self.hidden_b);
        out.push(&mut self.output_w);
        out.push(&mut self.output_b);
        out
    }

    pub fn layer_of(name: &str) -> LayerId {
        match name.as_bytes().first() {
            Some(b'E') => LayerId::E,
            Some(b'C') => LayerId::C,
            Some(b'H') => LayerId::H,
            _ => LayerId::O,
        }
    }

    /// Sets every tensor's trainable flag from the plan (Fresh and FineTune
    /// train, Frozen does not). Clears any per-row embedding mask.
    pub fn apply_plan_flags(&mut self, plan: &TransferPlan) {
        use crate::transfer::LayerMode::Frozen;
        self.embeddings.matrix.trainable = plan.e != Frozen;
        self.embeddings.trainable_rows = None;
        for block in &mut self.conv {
            block.filters.trainable = plan.c != Frozen;
            block.bias.trainable = plan.c != Frozen;
        }
        self.hidden_w.trainable = plan.h != Frozen;
        self.hidden_b.trainable = plan.h != Frozen;
        self.output_w.trainable = plan.o != Frozen;
        self.output_b.trainable = plan.o != Frozen;
    }

    fn embed(&self, enc: &EncodedSentence) -> DenseTensor<S> {
        let d = self.config.d;
        let mut sentence = DenseTensor::zeros(&[enc.token_ids.len(), d]);
        for (p, id) in enc.token_ids.iter().enumerate() {
            let src = self.embeddings.matrix.value.row(*id as usize);
            sentence.row_mut(p).copy_from_slice(src);
        }
        sentence
    }

    fn forward_example(
        &self,
        enc: &EncodedSentence,
        training: bool,
        dropout_rate: f64,
        rng: &mut StdRng,
    ) -> Result<(S, Vec<S>, Tape<S>)> {
        let cfg = &self.config;
        let sentence = self.embed(enc);
        let mut pooled = Vec::with_capacity(cfg.pooled_len());
        let mut conv_pre = Vec::with_capacity(self.conv.len());
        let mut argmaxes = Vec::with_capacity(self.conv.len());
        for block in &self.conv {
            let pre = conv_over_time(&block.filters, &block.bias, &sentence)?;
            let mut post = pre.clone();
            for v in post.data_mut() {
                *v = cfg.conv_activation.apply(*v);
            }
            let (maxed, argmax) = max_over_time(&post)?;
            pooled.extend(maxed);
            conv_pre.push(pre);
            argmaxes.push(argmax);
        }
        let pooled_rate = if cfg.dropout_pooled { dropout_rate } else { 0.0 };
        let (pooled_do, pooled_mask) = apply_dropout(&pooled, pooled_rate, rng, training)?;
        let hidden_pre = matvec_affine(&self.hidden_w, &self.hidden_b, &pooled_do)?;
        let hidden_post: Vec<S> = hidden_pre.iter().map(|v| cfg.hidden_activation.apply(*v)).collect();
        let hidden_rate = if cfg.dropout_hidden { dropout_rate } else { 0.0 };
        let (hidden_do, hidden_mask) = apply_dropout(&hidden_post, hidden_rate, rng, training)?;
        let logits = matvec_affine(&self.output_w, &self.output_b, &hidden_do)?;
        let (loss, probs) = softmax_xent(&logits, enc.label)?;
        let tape = Tape {
            sentence,
            conv_pre,
            argmaxes,
            pooled_do,
            pooled_mask,
            hidden_pre,
            hidden_do,
            hidden_mask,
        };
        Ok((loss, probs, tape))
    }

    /// Forward pass over a batch. Returns the mean loss and per-example
    /// probability vectors. `training` controls dropout; evaluation passes
    /// are deterministic.
    pub fn forward(&self, batch: &[EncodedSentence], training: bool, rng: &mut StdRng) -> Result<(S, Vec<Vec<S>>)> {
        self.forward_with_rate(batch, training, self.config.dropout_rate, rng)
    }

    pub fn forward_with_rate(
        &self,
        batch: &[EncodedSentence],
        training: bool,
        dropout_rate: f64,
        rng: &mut StdRng,
    ) -> Result<(S, Vec<Vec<S>>)> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("forward"));
        }
        let mut total = S::zero();
        let mut all_probs = Vec::with_capacity(batch.len());
        for enc in batch {
            let (loss, probs, _) = self.forward_example(enc, training, dropout_rate, rng)?;
            total = total + loss;
            all_probs.push(probs);
        }
        Ok((total / S::from_f64(batch.len() as f64), all_probs))
    }

    /// Forward plus gradient accumulation for one batch. The per-example
    /// logit gradient is scaled by 1/batch so accumulated grads match the
    /// mean loss. Returns the mean loss.
    pub fn forward_backward(
        &mut self,
        batch: &[EncodedSentence],
        dropout_rate: f64,
        rng: &mut StdRng,
    ) -> Result<S> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("forward_backward"));
        }
        let inv_batch = S::from_f64(1.0 / batch.len() as f64);
        let mut total = S::zero();
        for enc in batch {
            let (loss, probs, tape) = self.forward_example(enc, true, dropout_rate, rng)?;
            total = total + loss;
            let mut d_logits: Vec<S> = probs.clone();
            d_logits[enc.label] = d_logits[enc.label] - S::one();
            for g in &mut d_logits {
                *g = *g * inv_batch;
            }
            self.backward_example(enc, &tape, &d_logits);
        }
        Ok(total * inv_batch)
    }

    fn backward_example(&mut self, enc: &EncodedSentence, tape: &Tape<S>, d_logits: &[S]) {
        let cfg = self.config.clone();
        let mut d_hidden_do = vec![S::zero(); cfg.hidden_units];
        matvec_affine_backward(
            &mut self.output_w,
            &mut self.output_b,
            &tape.hidden_do,
            d_logits,
            &mut d_hidden_do,
        );
        tape.hidden_mask.backward(&mut d_hidden_do);
        let d_hidden_pre: Vec<S> = d_hidden_do
            .iter()
            .zip(&tape.hidden_pre)
            .map(|(g, pre)| *g * cfg.hidden_activation.derivative(*pre))
            .collect();
        let mut d_pooled = vec![S::zero(); cfg.pooled_len()];
        matvec_affine_backward(
            &mut self.hidden_w,
            &mut self.hidden_b,
            &tape.pooled_do,
            &d_hidden_pre,
            &mut d_pooled,
        );
        tape.pooled_mask.backward(&mut d_pooled);
        let mut d_sentence = DenseTensor::zeros(tape.sentence.shape());
        for (r, block) in self.conv.iter_mut().enumerate() {
            let pre = &tape.conv_pre[r];
            let d_slice = &d_pooled[r * cfg.feature_maps..(r + 1) * cfg.feature_maps];
            let mut d_post = DenseTensor::zeros(pre.shape());
            max_over_time_backward(&tape.argmaxes[r], d_slice, &mut d_post);
            for (g, p) in d_post.data_mut().iter_mut().zip(pre.data()) {
                *g = *g * cfg.conv_activation.derivative(*p);
            }
            conv_over_time_backward(&mut block.filters, &mut block.bias, &tape.sentence, &d_post, &mut d_sentence);
        }
        for (p, id) in enc.token_ids.iter().enumerate() {
            let row = *id as usize;
            if !self.embeddings.row_trainable(row) {
                continue;
            }
            let src = d_sentence.row(p).to_vec();
            let dst = self.embeddings.matrix.grad.row_mut(row);
            for (g, v) in dst.iter_mut().zip(src) {
                *g = *g + v;
            }
        }
    }

    /// Class prediction: argmax of the evaluation-mode probabilities, ties
    /// broken to the lowest class index.
    pub fn predict(&self, enc: &EncodedSentence) -> Result<usize> {
        // Evaluation consumes no randomness; any generator works here.
        let mut rng = seeded(0);
        let (_, probs, _) = self.forward_example(enc, false, 0.0, &mut rng)?;
        Ok(argmax_lowest(&probs))
    }

    pub fn param_count(&self, plan: &TransferPlan) -> u64 {
        self.config.param_count(plan)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax_lowest<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-example intermediates needed by the backward pass.
struct Tape<S> {
    sentence: DenseTensor<S>,
    conv_pre: Vec<DenseTensor<S>>,
    argmaxes: Vec<Vec<usize>>,
    pooled_do: Vec<S>,
    pooled_mask: DropoutMask<S>,
    hidden_pre: Vec<S>,
    hidden_do: Vec<S>,
    hidden_mask: DropoutMask<S>,
}
