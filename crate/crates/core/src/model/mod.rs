//! The dual-encoder pointer–generator inflection model.

pub mod batch;
pub mod network;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use batch::Batch;
pub use network::{Architecture, Dropout, Encoded, Head, ModelConfig, Recurrence};

use crate::data::vocab::{EncodedExample, UnkPolicy, Vocabulary, BOS, EOS, PAD, UNK};
use crate::nn::{Float, Matrix, NnError, ParamSet, Tape};

/// Extra output symbols allowed beyond the lemma length during decoding.
pub const MAX_EXTRA_SYMBOLS: usize = 25;

/// Network parameters together with the vocabulary they index.
#[derive(Debug, Clone)]
pub struct PointerGenerator<F> {
    pub arch: Architecture,
    pub params: ParamSet<F>,
    pub vocab: Vocabulary,
}

/// Encoder states of a single example.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderStates<F> {
    /// `|tags| × 2H`
    pub tag: Matrix<F>,
    /// `|lemma_ids| × 2H`
    pub char: Matrix<F>,
    pub tag_ids: Vec<usize>,
    pub lemma_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState<F> {
    pub h: Vec<F>,
    pub c: Vec<F>,
    /// Concatenated tag and character context of the last step.
    pub context: Vec<F>,
    /// Index of the last output symbol.
    pub y_prev: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<F> {
    pub p_mix: Vec<F>,
    pub p_dec: Vec<F>,
    pub p_copy: Vec<F>,
    pub alpha: F,
    pub tag_weights: Vec<F>,
    pub char_weights: Vec<F>,
    pub next_state: DecoderState<F>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub form: String,
    /// Decoding stopped at the length limit before producing EOS.
    pub truncated: bool,
}

/// Greedy choice over `p`, skipping PAD and BOS. Ties go to the lowest index.
pub fn argmax_symbol<F: Float>(p: &[F]) -> usize {
    let mut best = EOS;
    for (i, &v) in p.iter().enumerate() {
        if i == PAD || i == BOS {
            continue;
        }
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Copy distribution of a single step: each vocabulary entry receives the
/// attention weight of every lemma position holding it. Frame symbols are
/// excluded and the remaining mass renormalized.
pub fn copy_distribution<F: Float>(
    char_weights: &[F],
    lemma_ids: &[usize],
    vocab_size: usize,
) -> Result<Vec<F>, NnError> {
    if char_weights.len() != lemma_ids.len() {
        return Err(NnError::Contract(format!(
            "{} attention weights for {} lemma positions",
            char_weights.len(),
            lemma_ids.len()
        )));
    }
    if let Some(&bad) = lemma_ids.iter().find(|&&i| i >= vocab_size) {
        return Err(NnError::Contract(format!("lemma id {bad} outside vocabulary")));
    }
    let include: Vec<bool> = lemma_ids.iter().map(|&i| batch::copyable(i)).collect();
    if !include.iter().any(|&b| b) {
        return Err(NnError::Contract("lemma has no copyable position".into()));
    }
    let mut tape = Tape::new();
    let w = tape.input(Matrix::row_vector(char_weights.to_vec()));
    let p = tape.copy_distribution(w, lemma_ids, &include, vocab_size);
    Ok(tape.value(p).data().to_vec())
}

fn check_finite<F: Float>(what: &str, v: &[F]) -> Result<(), NnError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NnError::NonFinite(format!("{what} contains a non-finite value")))
    }
}

impl<F: Float> PointerGenerator<F> {
    /// Freshly initialized model whose vocabulary sizes come from `vocab`.
    /// `config`'s vocabulary sizes are overwritten.
    pub fn new(mut config: ModelConfig, vocab: Vocabulary, seed: u64) -> Result<Self, NnError> {
        config.char_vocab = vocab.char_size();
        config.tag_vocab = vocab.tag_size();
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let arch = Architecture::build(config, &mut params, &mut rng);
        Ok(Self { arch, params, vocab })
    }

    /// Model with the given configuration and parameter values (names and
    /// shapes must match the architecture exactly).
    pub fn from_parts(config: ModelConfig, vocab: Vocabulary, values: Vec<(String, Matrix<F>)>) -> Result<Self, NnError> {
        let mut model = Self::new(config, vocab, 0)?;
        let expected = model.params.shapes();
        if expected.len() != values.len() {
            return Err(NnError::Contract(format!(
                "expected {} parameter arrays, got {}",
                expected.len(),
                values.len()
            )));
        }
        for ((id, (name, shape)), (got_name, value)) in model
            .params
            .iter()
            .map(|(id, _)| id)
            .zip(expected)
            .collect::<Vec<_>>()
            .into_iter()
            .zip(values)
        {
            if name != got_name || shape != value.shape() {
                return Err(NnError::Contract(format!(
                    "parameter {got_name} {:?} does not match {name} {shape:?}",
                    value.shape()
                )));
            }
            *model.params.value_mut(id) = value;
        }
        Ok(model)
    }

    /// Overwrites every parameter with uniform noise in `±scale`. Useful to
    /// move away from the near-degenerate initial point, e.g. before a
    /// gradient check.
    pub fn randomize_params(&mut self, scale: f64, seed: u64) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in self.params.iter_mut() {
            for v in p.value.data_mut() {
                *v = F::from_f64_lossy(rng.gen_range(-scale..scale));
            }
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.arch.config
    }

    pub fn encode_example(&self, ex: &crate::data::InflectionExample) -> Result<EncodedExample, crate::data::vocab::VocabError> {
        crate::data::vocab::encode_example(ex, &self.vocab, UnkPolicy::Reject)
    }

    /// Encoder states of one example (no dropout).
    pub fn encode(&self, ex: &EncodedExample) -> Result<EncoderStates<F>, NnError> {
        batch::validate(ex).map_err(NnError::Contract)?;
        let b = Batch::inputs(&[&ex.lemma_ids], &[&ex.tag_ids]);
        let mut tape = Tape::new();
        let enc = self.arch.encode(&mut tape, &self.params, &b, None)?;
        let tag = tape.value(enc.tag_memory.states).clone();
        let char = tape.value(enc.char_memory.states).clone();
        check_finite("encoder state", tag.data())?;
        check_finite("encoder state", char.data())?;
        Ok(EncoderStates {
            tag,
            char,
            tag_ids: ex.tag_ids.clone(),
            lemma_ids: ex.lemma_ids.clone(),
        })
    }

    pub fn initial_state(&self) -> DecoderState<F> {
        let h = self.config().hidden;
        DecoderState {
            h: vec![F::zero(); h],
            c: vec![F::zero(); h],
            context: vec![F::zero(); 4 * h],
            y_prev: BOS,
        }
    }

    /// One decoder step without dropout. The returned state's `y_prev` is
    /// the greedy choice; overwrite it to teacher-force.
    pub fn decode_step(&self, state: &DecoderState<F>, enc: &EncoderStates<F>) -> Result<StepOutput<F>, NnError> {
        let hsz = self.config().hidden;
        if state.h.len() != hsz || state.c.len() != hsz {
            return Err(NnError::Contract("decoder state has the wrong width".into()));
        }
        if enc.tag.rows() == 0 || enc.char.rows() == 0 {
            return Err(NnError::Contract("empty encoder states".into()));
        }
        if enc.char.rows() != enc.lemma_ids.len() || enc.tag.cols() != 2 * hsz || enc.char.cols() != 2 * hsz {
            return Err(NnError::Contract("encoder states do not match the model".into()));
        }
        if state.y_prev >= self.config().char_vocab {
            return Err(NnError::Contract(format!("symbol {} outside vocabulary", state.y_prev)));
        }
        let mut tape = Tape::new();
        let b = Batch::inputs(&[&enc.lemma_ids], &[&vec![UNK; enc.tag.rows()]]);
        let h_tag = tape.input(enc.tag.clone());
        let h_char = tape.input(enc.char.clone());
        let encoded = self.arch.attach(&mut tape, &self.params, h_tag, h_char, &b);
        let mut prev = state.h.clone();
        prev.extend_from_slice(&state.c);
        let prev = tape.input(Matrix::row_vector(prev));
        let table = tape.param(&self.params, self.arch.char_embedding);
        let y = tape.gather(table, &[state.y_prev]);
        let r = self.arch.recur(&mut tape, &self.params, &encoded, prev, y);
        let s = tape.slice_cols(r.state, 0, hsz);
        let head = self
            .arch
            .head(&mut tape, &self.params, &encoded, 1, s, r.context, y, r.char_weights, None)?;
        let get = |v| tape.value(v).data().to_vec();
        let out = StepOutput {
            p_mix: get(head.p_mix),
            p_dec: get(head.p_dec),
            p_copy: get(head.p_copy),
            alpha: tape.value(head.alpha).scalar(),
            tag_weights: get(r.tag_weights),
            char_weights: get(r.char_weights),
            next_state: DecoderState {
                h: tape.value(r.state).data()[..hsz].to_vec(),
                c: tape.value(r.state).data()[hsz..].to_vec(),
                context: get(r.context),
                y_prev: state.y_prev,
            },
        };
        let mut out = out;
        out.next_state.y_prev = argmax_symbol(&out.p_mix);
        check_finite("output distribution", &out.p_mix)?;
        check_finite("decoder state", &out.next_state.h)?;
        Ok(out)
    }

    /// Teacher-forced `−Σ_t ln p(form_t)` of one example, without dropout.
    pub fn sequence_nll(&self, ex: &EncodedExample) -> Result<F, NnError> {
        batch::validate(ex).map_err(NnError::Contract)?;
        let b = Batch::new(&[ex]);
        let mut tape = Tape::new();
        let loss = self.arch.batch_loss(&mut tape, &self.params, &b, None)?;
        Ok(tape.value(loss).scalar())
    }

    /// Greedy decoding of one input.
    pub fn predict<S: AsRef<str>>(&self, lemma: &str, tags: &[S]) -> Prediction {
        self.predict_batch(&[(lemma, tags)]).pop().expect("one prediction")
    }

    /// Greedy decoding of several inputs in one batched pass. Unknown
    /// symbols are mapped to UNK; an UNK output copies the most attended
    /// unknown lemma character.
    pub fn predict_batch<S: AsRef<str>>(&self, inputs: &[(&str, &[S])]) -> Vec<Prediction> {
        if inputs.is_empty() {
            return Vec::new();
        }
        let lemmas: Vec<Vec<char>> = inputs.iter().map(|(l, _)| l.chars().collect()).collect();
        let lemma_ids: Vec<Vec<usize>> = inputs
            .iter()
            .map(|(l, _)| self.vocab.encode_chars(l, UnkPolicy::Substitute).expect("UNK allowed"))
            .collect();
        let tag_ids: Vec<Vec<usize>> = inputs
            .iter()
            .map(|(_, t)| {
                let ids = self.vocab.encode_tags(t, UnkPolicy::Substitute).expect("UNK allowed");
                if ids.is_empty() {
                    vec![UNK]
                } else {
                    ids
                }
            })
            .collect();
        let l_refs: Vec<&[usize]> = lemma_ids.iter().map(Vec::as_slice).collect();
        let t_refs: Vec<&[usize]> = tag_ids.iter().map(Vec::as_slice).collect();
        let batch = Batch::inputs(&l_refs, &t_refs);
        let n = inputs.len();
        let hsz = self.config().hidden;
        let limits: Vec<usize> = lemmas.iter().map(|l| l.len() + MAX_EXTRA_SYMBOLS).collect();
        let max_steps = limits.iter().copied().max().unwrap_or(0);

        let mut tape = Tape::new();
        let enc = self
            .arch
            .encode(&mut tape, &self.params, &batch, None)
            .expect("validated inputs");
        let table = tape.param(&self.params, self.arch.char_embedding);
        let mut state = tape.zeros(n, 2 * hsz);
        let mut y = vec![BOS; n];
        let mut out: Vec<Prediction> = (0..n)
            .map(|_| Prediction {
                form: String::new(),
                truncated: false,
            })
            .collect();
        let mut produced = vec![0usize; n];
        let mut done = vec![false; n];
        for _ in 0..max_steps {
            if done.iter().all(|&d| d) {
                break;
            }
            let y_emb = tape.gather(table, &y);
            let r = self.arch.recur(&mut tape, &self.params, &enc, state, y_emb);
            state = r.state;
            let s = tape.slice_cols(state, 0, hsz);
            let head = self
                .arch
                .head(&mut tape, &self.params, &enc, 1, s, r.context, y_emb, r.char_weights, None)
                .expect("shapes are consistent");
            let p = tape.value(head.p_mix);
            let w = tape.value(r.char_weights);
            for b in 0..n {
                if done[b] {
                    y[b] = PAD;
                    continue;
                }
                let sym = argmax_symbol(p.row(b));
                y[b] = sym;
                if sym == EOS {
                    done[b] = true;
                    continue;
                }
                let ch = if sym == UNK {
                    unk_source(&lemma_ids[b], &lemmas[b], w.row(b))
                } else {
                    self.vocab.char_at(sym)
                };
                out[b].form.push(ch.unwrap_or(char::REPLACEMENT_CHARACTER));
                produced[b] += 1;
                if produced[b] >= limits[b] {
                    done[b] = true;
                    out[b].truncated = true;
                }
            }
        }
        out
    }
}

/// The lemma character at the most attended UNK position, if any.
fn unk_source<F: Float>(ids: &[usize], lemma: &[char], weights: &[F]) -> Option<char> {
    let mut best: Option<(usize, F)> = None;
    for (t, &id) in ids.iter().enumerate() {
        if id == UNK && best.is_none_or(|(_, w)| weights[t] > w) {
            best = Some((t, weights[t]));
        }
    }
    // Position t of the framed ids is character t − 1 of the lemma.
    best.and_then(|(t, _)| lemma.get(t - 1).copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_vocabulary, InflectionExample};

    fn toy() -> (PointerGenerator<f64>, EncodedExample) {
        let ex = InflectionExample::new("aba", ["V", "PST"], "abac").unwrap();
        let vocab = build_vocabulary(&[std::slice::from_ref(&ex)]);
        let m = PointerGenerator::new(ModelConfig::tiny(0, 0, 6), vocab, 3).unwrap();
        let enc = m.encode_example(&ex).unwrap();
        (m, enc)
    }

    #[test]
    fn copy_distribution_examples() {
        // framed "aba": BOS a b a EOS, with a = 4, b = 5
        let p = copy_distribution(&[0.0f64, 0.2, 0.5, 0.3, 0.0], &[BOS, 4, 5, 4, EOS], 6).unwrap();
        assert!((p[4] - 0.5).abs() < 1e-12 && (p[5] - 0.5).abs() < 1e-12);
        let p = copy_distribution(&[0.0, 0.0, 1.0, 0.0, 0.0], &[BOS, 4, 5, 4, EOS], 6).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(copy_distribution(&[1.0], &[4, 5], 6).is_err());
    }

    #[test]
    fn encoder_shapes_and_determinism() {
        let (m, ex) = toy();
        let s = m.encode(&ex).unwrap();
        assert_eq!(s.char.rows(), 5);
        assert_eq!(s.tag.rows(), 2);
        assert_eq!(s, m.encode(&ex).unwrap());
    }

    #[test]
    fn step_distributions_are_normalized() {
        let (m, ex) = toy();
        let enc = m.encode(&ex).unwrap();
        let out = m.decode_step(&m.initial_state(), &enc).unwrap();
        for p in [&out.p_mix, &out.p_dec, &out.p_copy] {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(out.alpha > 0.0 && out.alpha < 1.0);
    }

    #[test]
    fn step_nll_matches_sequence_nll() {
        let (m, ex) = toy();
        let enc = m.encode(&ex).unwrap();
        let mut state = m.initial_state();
        let mut total = 0.0;
        for w in ex.form_ids.windows(2) {
            state.y_prev = w[0];
            let out = m.decode_step(&state, &enc).unwrap();
            total -= out.p_mix[w[1]].ln();
            state = out.next_state;
        }
        let batched = m.sequence_nll(&ex).unwrap();
        assert!((total - batched).abs() < 1e-10, "{total} vs {batched}");
    }

    #[test]
    fn argmax_tie_breaks_low() {
        assert_eq!(argmax_symbol(&[0.9, 0.9, 0.1, 0.2, 0.2, 0.1]), 3);
        assert_eq!(argmax_symbol(&[0.5, 0.5, 0.0, 0.0]), EOS);
    }

    #[test]
    fn prediction_never_emits_frame_symbols() {
        let (m, _) = toy();
        let p = m.predict("abba", &["V", "PST"]);
        assert!(p.form.chars().count() <= 4 + MAX_EXTRA_SYMBOLS);
        assert!(p.form.chars().all(|c| m.vocab.char_index(c).is_some()));
        assert_eq!(p, m.predict("abba", &["V", "PST"]));
    }
}

impl PointerGenerator<f64> {
    /// Checks the batched training loss of `examples` against central
    /// differences evaluated in double-double precision.
    pub fn gradient_check(
        &mut self,
        examples: &[crate::data::InflectionExample],
        eps: f64,
        sampling: crate::nn::Sampling,
    ) -> Result<crate::nn::GradCheckReport, NnError> {
        let enc = examples
            .iter()
            .map(|e| self.encode_example(e).map_err(|err| NnError::Contract(err.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&EncodedExample> = enc.iter().collect();
        let batch = Batch::new(&refs);
        let arch = self.arch.clone();
        crate::nn::gradient_check_extended(
            &mut self.params,
            |tape, params| arch.batch_loss(tape, params, &batch, None),
            |tape, params| arch.batch_loss(tape, params, &batch, None),
            eps,
            sampling,
        )
    }
}

#[cfg(test)]
mod gradient_tests {
    use super::*;
    use crate::data::{build_vocabulary, InflectionExample};
    use crate::nn::Sampling;

    #[test]
    fn full_model_gradients_match_finite_differences() {
        let exs = vec![
            InflectionExample::new("tapar", ["V", "PST"], "tapé").unwrap(),
            InflectionExample::new("pat", ["N", "PL"], "pats").unwrap(),
        ];
        let vocab = build_vocabulary(&[&exs]);
        let mut m = PointerGenerator::<f64>::new(ModelConfig::tiny(0, 0, 8), vocab, 7).unwrap();
        m.randomize_params(0.5, 11);
        let report = m.gradient_check(&exs, 1e-5, Sampling::PerParam { max: 40, seed: 1 }).unwrap();
        assert!(report.max_relative_error < 1e-4, "{:#?}", report.per_param);
    }
}
