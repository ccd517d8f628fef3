//! Training loops, pretraining and fine-tuning, accuracy and checkpoints.

pub mod checkpoint;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::vocab::VocabError;
use crate::data::{InflectionExample, Vocabulary};
use crate::model::{Batch, Dropout, ModelConfig, PointerGenerator};
use crate::nn::{Adam, AdamConfig, Float, FloatMode, NnError, Tape};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, Provenance, Stage};

/// Epochs of source-language pretraining.
pub const PRETRAIN_EPOCHS: usize = 50;
/// Dropout during pretraining.
pub const PRETRAIN_DROPOUT: f64 = 0.3;
/// Epochs of target-language fine-tuning.
pub const FINETUNE_EPOCHS: usize = 300;
/// Dropout during fine-tuning.
pub const FINETUNE_DROPOUT: f64 = 0.5;
pub const DEFAULT_BATCH_SIZE: usize = 32;
/// Examples decoded per batched prediction pass.
const PREDICT_CHUNK: usize = 64;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error(
        "vocabulary does not cover the corpus (missing {}); rebuild the joint source+target vocabulary and pretrain again",
        .missing.iter().cloned().collect::<Vec<_>>().join(" ")
    )]
    VocabularyGap { missing: BTreeSet<String> },
    #[error("non-finite loss in epoch {epoch} at example {lemma}\t{form}\t{tags}")]
    NonFiniteLoss {
        epoch: usize,
        lemma: String,
        form: String,
        tags: String,
    },
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub float_mode: FloatMode,
    pub adam: AdamConfig,
}

impl TrainConfig {
    pub fn new(epochs: usize, dropout_rate: f64, seed: u64) -> Self {
        Self {
            epochs,
            dropout_rate,
            batch_size: DEFAULT_BATCH_SIZE,
            seed,
            float_mode: FloatMode::Fast,
            adam: AdamConfig::default(),
        }
    }

    pub fn pretrain(seed: u64) -> Self {
        Self::new(PRETRAIN_EPOCHS, PRETRAIN_DROPOUT, seed)
    }

    pub fn finetune(seed: u64) -> Self {
        Self::new(FINETUNE_EPOCHS, FINETUNE_DROPOUT, seed)
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout_rate = rate;
        self
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(TrainError::Config(format!(
                "dropout rate {} is outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// What a training run did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainStats {
    pub epochs: usize,
    pub updates: u64,
    /// Mean batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains `model` in place for exactly `config.epochs` shuffled passes with
/// one Adam update per mini-batch.
pub fn train<F: Float>(
    model: &mut PointerGenerator<F>,
    corpus: &[InflectionExample],
    config: &TrainConfig,
) -> Result<TrainStats, TrainError> {
    config.validate()?;
    if F::MODE != config.float_mode {
        return Err(TrainError::Config(format!(
            "model uses {} but the configuration asks for {}",
            F::MODE.dtype(),
            config.float_mode.dtype()
        )));
    }
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    check_coverage(&model.vocab, corpus)?;
    let encoded = corpus
        .iter()
        .map(|ex| model.encode_example(ex))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(config.adam, &model.params);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut stats = TrainStats::default();
    let arch = model.arch.clone();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let members: Vec<_> = chunk.iter().map(|&i| &encoded[i]).collect();
            let batch = Batch::new(&members);
            let mut tape = Tape::new();
            let mut dropout = Dropout {
                rate: config.dropout_rate,
                rng: &mut rng,
            };
            let loss = arch.batch_loss(&mut tape, &model.params, &batch, Some(&mut dropout))?;
            let value = tape.value(loss).scalar();
            if !value.is_finite() {
                let culprit = culprit(model, corpus, chunk);
                return Err(non_finite(epoch, &corpus[culprit]));
            }
            tape.backward(loss, &mut model.params)?;
            if let Err(e) = adam.step(&mut model.params) {
                return match e {
                    NnError::NonFiniteGradient { .. } => Err(non_finite(epoch, &corpus[culprit(model, corpus, chunk)])),
                    e => Err(e.into()),
                };
            }
            total += value.as_f64();
            batches += 1;
            stats.updates += 1;
        }
        stats.epoch_losses.push(total / batches as f64);
        stats.epochs += 1;
    }
    Ok(stats)
}

/// First example of a batch whose own loss is non-finite, else the first
/// example of the batch.
fn culprit<F: Float>(model: &PointerGenerator<F>, corpus: &[InflectionExample], chunk: &[usize]) -> usize {
    chunk
        .iter()
        .copied()
        .find(|&i| {
            model
                .encode_example(&corpus[i])
                .ok()
                .and_then(|ex| model.sequence_nll(&ex).ok())
                .is_none_or(|l| !l.is_finite())
        })
        .unwrap_or(chunk[0])
}

fn non_finite(epoch: usize, ex: &InflectionExample) -> TrainError {
    TrainError::NonFiniteLoss {
        epoch,
        lemma: ex.lemma.clone(),
        form: ex.form.clone(),
        tags: ex.tag_string(),
    }
}

fn check_coverage(vocab: &Vocabulary, corpus: &[InflectionExample]) -> Result<(), TrainError> {
    let missing = vocab.missing_symbols(corpus);
    if missing.is_empty() {
        Ok(())
    } else {
        Err(TrainError::VocabularyGap { missing })
    }
}

/// Fresh model trained on the source corpus; `vocab` should be the joint
/// source+target vocabulary so fine-tuning keeps every parameter shape.
pub fn pretrain<F: Float>(
    language: &str,
    corpus: &[InflectionExample],
    vocab: Vocabulary,
    model_config: ModelConfig,
    config: &TrainConfig,
) -> Result<(Checkpoint<F>, TrainStats), TrainError> {
    let mut model = PointerGenerator::new(model_config, vocab, config.seed)?;
    let stats = train(&mut model, corpus, config)?;
    let provenance = Provenance::new(language, Stage::Pretrain, config, stats.epochs);
    Ok((Checkpoint { model, provenance }, stats))
}

/// Copy of the pretrained model trained further on the target corpus.
pub fn finetune<F: Float>(
    checkpoint: &Checkpoint<F>,
    corpus: &[InflectionExample],
    config: &TrainConfig,
) -> Result<(PointerGenerator<F>, TrainStats), TrainError> {
    let mut model = checkpoint.model.clone();
    let stats = train(&mut model, corpus, config)?;
    debug_assert_eq!(model.params.shapes(), checkpoint.model.params.shapes());
    Ok((model, stats))
}

/// Greedy predictions for every example, in corpus order.
pub fn predict_all<F: Float>(model: &PointerGenerator<F>, corpus: &[InflectionExample]) -> Vec<String> {
    let mut out = Vec::with_capacity(corpus.len());
    for chunk in corpus.chunks(PREDICT_CHUNK) {
        let inputs: Vec<(&str, &[String])> = chunk.iter().map(|e| (e.lemma.as_str(), e.tags.as_slice())).collect();
        out.extend(model.predict_batch(&inputs).into_iter().map(|p| p.form));
    }
    out
}

/// Fraction of `predictions` equal to the gold forms.
pub fn exact_match(corpus: &[InflectionExample], predictions: &[String]) -> Result<f64, TrainError> {
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if corpus.len() != predictions.len() {
        return Err(TrainError::Config(format!(
            "{} predictions for {} examples",
            predictions.len(),
            corpus.len()
        )));
    }
    let correct = corpus.iter().zip(predictions).filter(|(e, p)| e.form == **p).count();
    Ok(correct as f64 / corpus.len() as f64)
}

/// Exact-match accuracy of greedy predictions.
pub fn evaluate_accuracy<F: Float>(model: &PointerGenerator<F>, corpus: &[InflectionExample]) -> Result<f64, TrainError> {
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    exact_match(corpus, &predict_all(model, corpus))
}

/// Accuracy as a percentage with one decimal, e.g. 0.856 → "85.6".
pub fn format_accuracy(fraction: f64) -> String {
    format!("{:.1}", fraction * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_vocabulary;

    fn toy() -> Vec<InflectionExample> {
        ["walk", "talk", "jump", "play", "kick"]
            .iter()
            .map(|l| InflectionExample::new(*l, ["V", "PST"], format!("{l}ed")).unwrap())
            .collect()
    }

    fn tiny_model(corpus: &[InflectionExample]) -> PointerGenerator<f32> {
        PointerGenerator::new(ModelConfig::tiny(0, 0, 6), build_vocabulary(&[corpus]), 3).unwrap()
    }

    #[test]
    fn rejects_bad_configs() {
        let corpus = toy();
        let mut m = tiny_model(&corpus);
        for cfg in [
            TrainConfig::new(0, 0.0, 0),
            TrainConfig::new(1, 1.0, 0),
            TrainConfig { batch_size: 0, ..TrainConfig::new(1, 0.0, 0) },
            TrainConfig { float_mode: FloatMode::Verify, ..TrainConfig::new(1, 0.0, 0) },
        ] {
            assert!(matches!(train(&mut m, &corpus, &cfg), Err(TrainError::Config(_))));
        }
        assert!(matches!(train(&mut m, &[], &TrainConfig::new(1, 0.0, 0)), Err(TrainError::EmptyCorpus)));
    }

    #[test]
    fn one_epoch_is_ceil_n_over_batch_updates() {
        let corpus = toy();
        let mut m = tiny_model(&corpus);
        let cfg = TrainConfig { batch_size: 2, ..TrainConfig::new(1, 0.3, 5) };
        let stats = train(&mut m, &corpus, &cfg).unwrap();
        assert_eq!(stats.updates, 3);
        assert_eq!(stats.epoch_losses.len(), 1);
    }

    #[test]
    fn same_seed_same_parameters() {
        let corpus = toy();
        let cfg = TrainConfig { batch_size: 2, ..TrainConfig::new(3, 0.5, 9) };
        let mut a = tiny_model(&corpus);
        let mut b = tiny_model(&corpus);
        train(&mut a, &corpus, &cfg).unwrap();
        train(&mut b, &corpus, &cfg).unwrap();
        assert!(a.params.bit_identical(&b.params));
        let mut c = tiny_model(&corpus);
        train(&mut c, &corpus, &TrainConfig { seed: 10, ..cfg }).unwrap();
        assert!(!a.params.bit_identical(&c.params));
    }

    #[test]
    fn vocabulary_gap_asks_for_rebuild() {
        let corpus = toy();
        let checkpoint = Checkpoint {
            model: tiny_model(&corpus),
            provenance: Provenance::new("eng", Stage::Pretrain, &TrainConfig::pretrain(0), 50),
        };
        let other = vec![InflectionExample::new("zz", ["N"], "zzq").unwrap()];
        let err = finetune(&checkpoint, &other, &TrainConfig::finetune(0)).unwrap_err();
        assert!(err.to_string().contains("rebuild the joint"), "{err}");
        assert!(err.to_string().contains('q'));
    }

    #[test]
    fn accuracy_counts_exact_matches() {
        let corpus = toy();
        let preds: Vec<String> = corpus.iter().map(|e| e.form.clone()).collect();
        assert_eq!(exact_match(&corpus, &preds).unwrap(), 1.0);
        let four = &corpus[..4];
        let half = vec!["walked".into(), "x".into(), "jumped".into(), "y".into()];
        assert_eq!(exact_match(four, &half).unwrap(), 0.5);
        assert!(exact_match(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_formatting() {
        assert_eq!(format_accuracy(0.856), "85.6");
        assert_eq!(format_accuracy(0.107), "10.7");
        assert_eq!(format_accuracy(1.0), "100.0");
    }
}
