//! Parameter layout and forward computations of the pointer–generator
//! network.
//!
//! Two bidirectional LSTM encoders read the tag sequence and the framed
//! lemma. At each decoder step both encoders are attended with the
//! previous decoder state as query, and the two context vectors are
//! concatenated into `c_t`. The decoder LSTM consumes `[y_{t−1} ; c_t]`.
//! Output probabilities mix a generation softmax with a copy distribution
//! over lemma characters, weighted by a sigmoid gate
//! `α = σ(w_c·c_t + w_s·s_t + w_y·y_{t−1} + b)`.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::batch::{copyable, Batch};
use crate::nn::{
    dropout_var, Attention, BiLstm, Float, Init, LstmParams, Memory, NnError, ParamId, ParamSet,
    Tape, Var,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub char_vocab: usize,
    pub tag_vocab: usize,
    pub embedding: usize,
    pub hidden: usize,
    pub attention: usize,
}

impl ModelConfig {
    pub const DEFAULT_EMBEDDING: usize = 300;
    pub const DEFAULT_HIDDEN: usize = 100;

    /// Embeddings of 300, one hidden layer of 100 units, attention MLP of 100.
    pub fn standard(char_vocab: usize, tag_vocab: usize) -> Self {
        Self {
            char_vocab,
            tag_vocab,
            embedding: Self::DEFAULT_EMBEDDING,
            hidden: Self::DEFAULT_HIDDEN,
            attention: Self::DEFAULT_HIDDEN,
        }
    }

    /// Same layout with every width set to `size`.
    pub fn tiny(char_vocab: usize, tag_vocab: usize, size: usize) -> Self {
        Self {
            char_vocab,
            tag_vocab,
            embedding: size,
            hidden: size,
            attention: size,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let ok = self.char_vocab > crate::data::vocab::NUM_SPECIALS
            && self.tag_vocab >= crate::data::vocab::NUM_SPECIALS
            && self.embedding > 0
            && self.hidden > 0
            && self.attention > 0;
        if ok {
            Ok(())
        } else {
            Err(NnError::Contract(format!("invalid model configuration {self:?}")))
        }
    }

    /// Width of the concatenated context vector `c_t`.
    pub fn context_size(&self) -> usize {
        4 * self.hidden
    }
}

/// Parameter handles of one network, registered in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub config: ModelConfig,
    pub char_embedding: ParamId,
    pub tag_embedding: ParamId,
    pub tag_encoder: BiLstm,
    pub char_encoder: BiLstm,
    pub decoder: LstmParams,
    pub tag_attention: Attention,
    pub char_attention: Attention,
    pub out_w: ParamId,
    pub out_b: ParamId,
    pub gate_c: ParamId,
    pub gate_s: ParamId,
    pub gate_y: ParamId,
    pub gate_b: ParamId,
}

/// Dropout applied during training.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut dyn RngCore,
}

impl Dropout<'_> {
    fn apply<F: Float>(&mut self, tape: &mut Tape<F>, x: Var) -> Result<Var, NnError> {
        dropout_var(tape, x, self.rate, Some(&mut *self.rng))
    }
}

fn maybe_drop<F: Float>(
    dropout: &mut Option<&mut Dropout<'_>>,
    tape: &mut Tape<F>,
    x: Var,
) -> Result<Var, NnError> {
    match dropout {
        Some(d) => d.apply(tape, x),
        None => Ok(x),
    }
}

/// Encoder outputs of a batch, ready to be attended.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub tag_memory: Memory,
    pub char_memory: Memory,
    /// Lemma ids, batch-major `B × T`.
    pub copy_ids: Vec<usize>,
    pub copy_mask: Vec<bool>,
    pub batch: usize,
    pub lemma_steps: usize,
}

/// Result of the recurrent part of one decoder step.
#[derive(Debug, Clone, Copy)]
pub struct Recurrence {
    /// `[h | c]`, `B×2H`.
    pub state: Var,
    /// `B×4H`.
    pub context: Var,
    pub tag_weights: Var,
    pub char_weights: Var,
}

/// Output distributions of one or more stacked decoder steps.
#[derive(Debug, Clone, Copy)]
pub struct Head {
    pub p_mix: Var,
    pub p_dec: Var,
    pub p_copy: Var,
    pub alpha: Var,
}

impl Architecture {
    pub fn build<F: Float, R: Rng>(config: ModelConfig, params: &mut ParamSet<F>, rng: &mut R) -> Self {
        let (e, h, a) = (config.embedding, config.hidden, config.attention);
        let char_embedding = params.add("char_embedding", config.char_vocab, e, Init::Glorot, rng);
        let tag_embedding = params.add("tag_embedding", config.tag_vocab, e, Init::Glorot, rng);
        let tag_encoder = BiLstm::new(params, "tag_encoder", e, h, rng);
        let char_encoder = BiLstm::new(params, "char_encoder", e, h, rng);
        let decoder = LstmParams::new(params, "decoder", e + 4 * h, h, rng);
        let tag_attention = Attention::new(params, "tag_attention", h, 2 * h, a, rng);
        let char_attention = Attention::new(params, "char_attention", h, 2 * h, a, rng);
        let out_w = params.add("output.w", config.char_vocab, h, Init::Glorot, rng);
        let out_b = params.add("output.b", 1, config.char_vocab, Init::Zeros, rng);
        let gate_c = params.add("gate.w_c", 1, 4 * h, Init::Glorot, rng);
        let gate_s = params.add("gate.w_s", 1, h, Init::Glorot, rng);
        let gate_y = params.add("gate.w_y", 1, e, Init::Glorot, rng);
        let gate_b = params.add("gate.b", 1, 1, Init::Zeros, rng);
        Self {
            config,
            char_embedding,
            tag_embedding,
            tag_encoder,
            char_encoder,
            decoder,
            tag_attention,
            char_attention,
            out_w,
            out_b,
            gate_c,
            gate_s,
            gate_y,
            gate_b,
        }
    }

    /// Runs both encoders over the batch.
    pub fn encode<F: Float>(
        &self,
        tape: &mut Tape<F>,
        params: &ParamSet<F>,
        batch: &Batch,
        mut dropout: Option<&mut Dropout<'_>>,
    ) -> Result<Encoded, NnError> {
        if batch.lemma.lengths.contains(&0) || batch.tags.lengths.contains(&0) {
            return Err(NnError::Contract("empty lemma or tag sequence".into()));
        }
        let char_table = tape.param(params, self.char_embedding);
        let tag_table = tape.param(params, self.tag_embedding);
        let lemma_x = tape.gather(char_table, &batch.lemma.ids);
        let tag_x = tape.gather(tag_table, &batch.tags.ids);
        let h_char = self.char_encoder.run_stacked(tape, params, lemma_x, &batch.lemma.lengths);
        let h_tag = self.tag_encoder.run_stacked(tape, params, tag_x, &batch.tags.lengths);
        let h_char = maybe_drop(&mut dropout, tape, h_char)?;
        let h_tag = maybe_drop(&mut dropout, tape, h_tag)?;
        Ok(self.attach(tape, params, h_tag, h_char, batch))
    }

    /// Wraps already computed encoder states (`T·B×2H`, time-major).
    pub fn attach<F: Float>(
        &self,
        tape: &mut Tape<F>,
        params: &ParamSet<F>,
        h_tag: Var,
        h_char: Var,
        batch: &Batch,
    ) -> Encoded {
        let tag_memory = self.tag_attention.memory(tape, params, h_tag, &batch.tags.lengths);
        let char_memory = self.char_attention.memory(tape, params, h_char, &batch.lemma.lengths);
        let copy_ids = batch.lemma.batch_major();
        let copy_mask = copy_ids.iter().map(|&id| copyable(id)).collect();
        Encoded {
            tag_memory,
            char_memory,
            copy_ids,
            copy_mask,
            batch: batch.size,
            lemma_steps: batch.lemma.steps,
        }
    }

    /// Attends both encoders with the previous state and advances the
    /// decoder by one step. `y_prev` is the (possibly dropped-out)
    /// embedding of the previous output, `B×E`.
    pub fn recur<F: Float>(
        &self,
        tape: &mut Tape<F>,
        params: &ParamSet<F>,
        enc: &Encoded,
        state: Var,
        y_prev: Var,
    ) -> Recurrence {
        let query = tape.slice_cols(state, 0, self.config.hidden);
        let (tag_ctx, tag_weights) = self.tag_attention.attend(tape, params, &enc.tag_memory, query);
        let (char_ctx, char_weights) = self.char_attention.attend(tape, params, &enc.char_memory, query);
        let context = tape.concat_cols(&[tag_ctx, char_ctx]);
        let input = tape.concat_cols(&[y_prev, context]);
        let state = self.decoder.step(tape, params, input, state);
        Recurrence {
            state,
            context,
            tag_weights,
            char_weights,
        }
    }

    /// Output distributions for `steps` stacked decoder steps. Row
    /// `t·B + b` of every input belongs to step `t` of example `b`.
    #[allow(clippy::too_many_arguments)]
    pub fn head<F: Float>(
        &self,
        tape: &mut Tape<F>,
        params: &ParamSet<F>,
        enc: &Encoded,
        steps: usize,
        s: Var,
        context: Var,
        y_prev: Var,
        char_weights: Var,
        mut dropout: Option<&mut Dropout<'_>>,
    ) -> Result<Head, NnError> {
        let s_drop = maybe_drop(&mut dropout, tape, s)?;
        let out_w = tape.param(params, self.out_w);
        let out_b = tape.param(params, self.out_b);
        let logits = tape.linear(s_drop, out_w, out_b);
        let p_dec = tape.softmax(logits);

        let t_l = enc.lemma_steps;
        let mut ids = Vec::with_capacity(steps * enc.copy_ids.len());
        let mut mask = Vec::with_capacity(steps * enc.copy_ids.len());
        for _ in 0..steps {
            ids.extend_from_slice(&enc.copy_ids);
            mask.extend_from_slice(&enc.copy_mask);
        }
        debug_assert_eq!(ids.len(), steps * enc.batch * t_l);
        let p_copy = tape.copy_distribution(char_weights, &ids, &mask, self.config.char_vocab);

        let wc = tape.param(params, self.gate_c);
        let ws = tape.param(params, self.gate_s);
        let wy = tape.param(params, self.gate_y);
        let gb = tape.param(params, self.gate_b);
        let gc = tape.matmul_t(context, wc);
        let gs = tape.matmul_t(s, ws);
        let gy = tape.matmul_t(y_prev, wy);
        let g = tape.sum(&[gc, gs, gy]);
        let g = tape.add_row(g, gb);
        let alpha = tape.sigmoid(g);
        let p_mix = tape.mix(alpha, p_dec, p_copy);
        Ok(Head {
            p_mix,
            p_dec,
            p_copy,
            alpha,
        })
    }

    /// Teacher-forced negative log-likelihood, averaged over the batch.
    pub fn batch_loss<F: Float>(
        &self,
        tape: &mut Tape<F>,
        params: &ParamSet<F>,
        batch: &Batch,
        mut dropout: Option<&mut Dropout<'_>>,
    ) -> Result<Var, NnError> {
        if batch.form_in.lengths.contains(&0) {
            return Err(NnError::Contract("empty target sequence".into()));
        }
        let b = batch.size;
        let enc = self.encode(tape, params, batch, dropout.as_deref_mut())?;
        let table = tape.param(params, self.char_embedding);
        let y_all = tape.gather(table, &batch.form_in.ids);
        let y_all = maybe_drop(&mut dropout, tape, y_all)?;
        let mut state = tape.zeros(b, 2 * self.config.hidden);
        let steps = batch.form_in.steps;
        let (mut s_list, mut c_list, mut w_list) = (Vec::new(), Vec::new(), Vec::new());
        for t in 0..steps {
            let y_t = tape.slice_rows(y_all, t * b, b);
            let r = self.recur(tape, params, &enc, state, y_t);
            state = r.state;
            s_list.push(tape.slice_cols(state, 0, self.config.hidden));
            c_list.push(r.context);
            w_list.push(r.char_weights);
        }
        let s = tape.stack_rows(&s_list);
        let c = tape.stack_rows(&c_list);
        let w = tape.stack_rows(&w_list);
        let head = self.head(tape, params, &enc, steps, s, c, y_all, w, dropout)?;
        let inv = F::one() / F::from_f64_lossy(b as f64);
        let weights: Vec<F> = (0..steps)
            .flat_map(|t| batch.form_out.live(t))
            .map(|l| if l { inv } else { F::zero() })
            .collect();
        Ok(tape.nll(head.p_mix, &batch.form_out.ids, &weights))
    }
}
