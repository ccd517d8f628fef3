//! Writes rule-generated corpora in the shared-task layout and shows a
//! few lines of each, along with the built-in error-analysis profiles.
//!
//! cargo run --release --example synthetic_data [-- <dir>]

use std::path::PathBuf;

use morph_transfer::data::layout::load_split;
use morph_transfer::data::profile::builtin_profile;
use morph_transfer::data::synthetic::{write_synthetic_dataset, SplitSizes, SYNTHETIC_LANGUAGES};
use morph_transfer::data::{Split, Tier};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("morph-data"));
    for code in SYNTHETIC_LANGUAGES {
        write_synthetic_dataset(&dir, code, 1, SplitSizes::default())?;
        let low = load_split(&dir, code, Split::Train(Tier::Low))?;
        println!("{code}: {} low-resource examples, e.g.", low.len());
        for ex in low.iter().take(3) {
            println!("  {}\t{}\t{}", ex.lemma, ex.form, ex.tag_string());
        }
    }
    println!("corpora written to {}", dir.display());
    for code in ["eng", "spa", "zul"] {
        if let Some(profile) = builtin_profile(code) {
            println!("\n{}", profile.to_text());
        }
    }
    Ok(())
}
