//! Saves a trained model, reloads it and checks that parameters and
//! predictions survive the round trip unchanged.
//!
//! cargo run --release --example checkpoint

use morph_transfer::data::build_vocabulary;
use morph_transfer::data::synthetic::synthetic_corpus;
use morph_transfer::model::ModelConfig;
use morph_transfer::train::{predict_all, pretrain, Checkpoint, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = synthetic_corpus("tur", 200, 1).expect("built-in grammar");
    let config = TrainConfig::new(3, 0.3, 7);
    let (checkpoint, _) = pretrain::<f32>("tur", &corpus, build_vocabulary(&[&corpus]), ModelConfig::tiny(0, 0, 32), &config)?;

    let dir = tempfile_dir()?;
    let path = dir.join("tur.minf");
    checkpoint.save(&path)?;
    let restored = Checkpoint::<f32>::load(&path)?;

    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());
    println!("provenance: {:?}", restored.provenance);
    println!(
        "parameters bit-identical: {}",
        restored.model.params.bit_identical(&checkpoint.model.params)
    );
    println!(
        "predictions identical: {}",
        predict_all(&restored.model, &corpus) == predict_all(&checkpoint.model, &corpus)
    );
    println!("64-bit load rejected: {}", Checkpoint::<f64>::load(&path).is_err());
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join("morph-checkpoint");
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
