//! Pretrains on 1,000 Hungarian examples, fine-tunes on 100 English ones
//! and compares dev accuracy with a model trained on English alone.
//!
//! cargo run --release --example transfer [-- <seeds> [<data-dir>]]
//!
//! Without a data directory, rule-generated corpora stand in for the
//! shared-task files.

use std::path::Path;
use std::time::Instant;

use morph_transfer::data::layout::load_split;
use morph_transfer::data::synthetic::synthetic_splits;
use morph_transfer::data::{InflectionExample, Split, Tier};
use morph_transfer::experiment::{compare_transfer, mean_accuracies, TransferSetup};
use morph_transfer::model::ModelConfig;
use morph_transfer::train::{format_accuracy, TrainConfig, FINETUNE_DROPOUT, FINETUNE_EPOCHS, PRETRAIN_DROPOUT};

type Splits = (Vec<InflectionExample>, Vec<InflectionExample>, Vec<InflectionExample>);

fn corpora(data_dir: Option<&str>) -> Result<Splits, Box<dyn std::error::Error>> {
    let mut splits = match data_dir {
        Some(dir) => {
            let dir = Path::new(dir);
            (
                load_split(dir, "hun", Split::Train(Tier::High))?,
                load_split(dir, "eng", Split::Train(Tier::Low))?,
                load_split(dir, "eng", Split::Dev)?,
            )
        }
        None => {
            let hun = synthetic_splits("hun", 1, Default::default()).expect("built-in grammar");
            let eng = synthetic_splits("eng", 1, Default::default()).expect("built-in grammar");
            (hun.train_high, eng.train_low, eng.dev)
        }
    };
    splits.0.truncate(1000);
    splits.1.truncate(100);
    Ok(splits)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds: u64 = args.first().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let (hun, eng, dev) = corpora(args.get(1).map(String::as_str))?;
    let setup = TransferSetup {
        source: "hun",
        source_train: &hun,
        target_train: &eng,
        target_dev: &dev,
        model: ModelConfig::standard(0, 0),
        pretrain: TrainConfig::new(10, PRETRAIN_DROPOUT, 0),
        finetune: TrainConfig::new(FINETUNE_EPOCHS, FINETUNE_DROPOUT, 0),
    };
    let mut runs = Vec::new();
    for seed in 1..=seeds {
        let start = Instant::now();
        let run = compare_transfer::<f32>(&setup, seed)?;
        println!(
            "seed {seed}: pretrained {} baseline {} ({:.0?})",
            format_accuracy(run.pretrained),
            format_accuracy(run.baseline),
            start.elapsed()
        );
        runs.push(run);
    }
    let (pretrained, baseline) = mean_accuracies(&runs);
    println!("mean: pretrained {} baseline {}", format_accuracy(pretrained), format_accuracy(baseline));
    Ok(())
}
