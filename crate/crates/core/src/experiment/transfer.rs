//! Pretrained-versus-scratch comparison on one source/target pair.

use crate::data::{build_vocabulary, InflectionExample};
use crate::model::{ModelConfig, PointerGenerator};
use crate::nn::Float;
use crate::train::{
    evaluate_accuracy, finetune, pretrain, save_checkpoint, train, Checkpoint, Provenance, Stage, TrainConfig,
    TrainError,
};

/// Corpora and schedules of a transfer comparison. The seeds of the two
/// configs are replaced by each run's seed.
#[derive(Debug, Clone)]
pub struct TransferSetup<'a> {
    pub source: &'a str,
    pub source_train: &'a [InflectionExample],
    pub target_train: &'a [InflectionExample],
    pub target_dev: &'a [InflectionExample],
    pub model: ModelConfig,
    pub pretrain: TrainConfig,
    pub finetune: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRun {
    pub seed: u64,
    /// Dev accuracy after pretraining and fine-tuning.
    pub pretrained: f64,
    /// Dev accuracy of a randomly initialized model fine-tuned the same way.
    pub baseline: f64,
    /// Serialized fine-tuned checkpoints, for bit-level comparison.
    pub pretrained_checkpoint: Vec<u8>,
    pub baseline_checkpoint: Vec<u8>,
}

/// Both models share the joint source+target vocabulary and the seed, so
/// the only difference between them is the pretraining phase.
pub fn compare_transfer<F: Float>(setup: &TransferSetup, seed: u64) -> Result<TransferRun, TrainError> {
    let vocab = build_vocabulary(&[setup.source_train, setup.target_train]);
    let pretrain_config = TrainConfig { seed, ..setup.pretrain };
    let finetune_config = TrainConfig { seed, ..setup.finetune };

    let (source_model, _) = pretrain::<F>(setup.source, setup.source_train, vocab.clone(), setup.model, &pretrain_config)?;
    let (transferred, stats) = finetune(&source_model, setup.target_train, &finetune_config)?;

    let mut scratch = PointerGenerator::<F>::new(setup.model, vocab, seed)?;
    train(&mut scratch, setup.target_train, &finetune_config)?;

    let pack = |model: PointerGenerator<F>| {
        save_checkpoint(&Checkpoint {
            model,
            provenance: Provenance::new(setup.source, Stage::Finetune, &finetune_config, stats.epochs),
        })
    };
    Ok(TransferRun {
        seed,
        pretrained: evaluate_accuracy(&transferred, setup.target_dev)?,
        baseline: evaluate_accuracy(&scratch, setup.target_dev)?,
        pretrained_checkpoint: pack(transferred),
        baseline_checkpoint: pack(scratch),
    })
}

/// Mean pretrained and baseline accuracy over runs.
pub fn mean_accuracies(runs: &[TransferRun]) -> (f64, f64) {
    let n = runs.len().max(1) as f64;
    (
        runs.iter().map(|r| r.pretrained).sum::<f64>() / n,
        runs.iter().map(|r| r.baseline).sum::<f64>() / n,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::synthetic_corpus;

    #[test]
    fn tiny_comparison_is_deterministic() {
        let src = synthetic_corpus("hun", 20, 1).unwrap();
        let tgt = synthetic_corpus("eng", 20, 2).unwrap();
        let setup = TransferSetup {
            source: "hun",
            source_train: &src,
            target_train: &tgt[..10],
            target_dev: &tgt[10..],
            model: ModelConfig::tiny(0, 0, 8),
            pretrain: TrainConfig::new(1, 0.3, 0),
            finetune: TrainConfig::new(2, 0.5, 0),
        };
        let a = compare_transfer::<f32>(&setup, 3).unwrap();
        let b = compare_transfer::<f32>(&setup, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.pretrained_checkpoint, a.baseline_checkpoint);
        assert_eq!(mean_accuracies(&[a.clone(), a.clone()]), (a.pretrained, a.baseline));
    }
}
