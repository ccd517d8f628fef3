//! Runs a small source × target grid on synthetic data and prints the
//! accuracy and error tables.
//!
//! cargo run --release --example grid [-- <out-dir>]

use std::path::PathBuf;

use morph_transfer::data::synthetic::{write_synthetic_dataset, SplitSizes};
use morph_transfer::data::Tier;
use morph_transfer::experiment::{run_grid, ExperimentSpec};
use morph_transfer::model::ModelConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("morph-grid"));
    let data = out.join("data");
    let sizes = SplitSizes {
        low: 60,
        medium: 300,
        high: 300,
        dev: 75,
        test: 75,
    };
    for code in ["hun", "tur", "nav", "eng", "spa"] {
        write_synthetic_dataset(&data, code, 1, sizes)?;
    }
    let spec = ExperimentSpec {
        model: ModelConfig::tiny(0, 0, 32),
        pretrain_tier: Tier::Medium,
        pretrain_epochs: 5,
        finetune_epochs: 40,
        ..ExperimentSpec::new(&["hun", "tur", "nav"], &["eng", "spa"], &data, out.join("results"))
    };
    let outcome = run_grid(&spec)?;
    println!("Dev accuracy\n\n{}", outcome.dev.to_markdown());
    println!("Test accuracy\n\n{}", outcome.test.to_markdown());
    for (target, table) in &outcome.errors {
        println!("Errors for {}\n\n{}", target.to_uppercase(), table.to_markdown());
    }
    println!("artifacts in {}", spec.out_dir.display());
    Ok(())
}
