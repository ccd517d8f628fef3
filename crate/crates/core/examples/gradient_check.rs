//! Compares backpropagated gradients of a small model against central
//! differences evaluated in double-double precision.
//!
//! cargo run --release --example gradient_check [-- <hidden>]

use morph_transfer::data::{build_vocabulary, InflectionExample};
use morph_transfer::model::{ModelConfig, PointerGenerator};
use morph_transfer::nn::Sampling;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hidden = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(8);
    let examples = vec![
        InflectionExample::new("tap", ["V", "PL"], "taps")?,
        InflectionExample::new("pat", ["V", "PST"], "patted")?,
    ];
    let vocab = build_vocabulary(&[&examples]);
    let mut model = PointerGenerator::<f64>::new(ModelConfig::tiny(0, 0, hidden), vocab, 1)?;
    model.randomize_params(0.5, 2);
    let report = model.gradient_check(&examples, 1e-5, Sampling::All)?;
    println!("{:<28} {:>12} {:>14} {:>14}", "parameter", "rel. error", "analytic", "numeric");
    for p in &report.per_param {
        println!("{:<28} {:>12.2e} {:>14.6e} {:>14.6e}", p.name, p.relative_error, p.analytic, p.numeric);
    }
    println!("{} coordinates, max relative error {:.2e}", report.coordinates, report.max_relative_error);
    Ok(())
}
