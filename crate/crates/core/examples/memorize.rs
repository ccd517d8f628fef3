//! Trains a full-size model on 50 examples and checks that it reproduces
//! every training form.
//!
//! cargo run --release --example memorize [-- <epochs>]

use std::time::Instant;

use morph_transfer::data::build_vocabulary;
use morph_transfer::data::synthetic::synthetic_corpus;
use morph_transfer::model::{ModelConfig, PointerGenerator};
use morph_transfer::train::{evaluate_accuracy, format_accuracy, train, TrainConfig, FINETUNE_DROPOUT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(300);
    let corpus = synthetic_corpus("spa", 50, 1).expect("built-in grammar");
    let vocab = build_vocabulary(&[&corpus]);
    let mut model = PointerGenerator::<f32>::new(ModelConfig::standard(0, 0), vocab, 1)?;
    let config = TrainConfig::new(epochs, FINETUNE_DROPOUT, 1);

    let start = Instant::now();
    let stats = train(&mut model, &corpus, &config)?;
    let accuracy = evaluate_accuracy(&model, &corpus)?;
    println!(
        "{} epochs, {} updates, final loss {:.4}, {:.1?}",
        stats.epochs,
        stats.updates,
        stats.epoch_losses.last().copied().unwrap_or(f64::NAN),
        start.elapsed()
    );
    println!("training accuracy {}%", format_accuracy(accuracy));
    for ex in corpus.iter().take(5) {
        println!("  {} {} -> {}", ex.lemma, ex.tag_string(), model.predict(&ex.lemma, &ex.tags).form);
    }
    Ok(())
}
