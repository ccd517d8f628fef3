//! Classifies prediction errors and prints the per-label table.
//!
//! cargo run --release --example error_analysis [-- <predictions.tsv> <language>]
//!
//! Without arguments a handful of hand-written Spanish predictions is used.

use morph_transfer::data::profile::builtin_profile;
use morph_transfer::experiment::{analyze, pair_error_markdown, DEFAULT_WINDOW};
use morph_transfer::taxonomy::{align, classify, parse_predictions, segment, EditOp, PredictionRecord};

fn record(lemma: &str, gold: &str, predicted: &str) -> PredictionRecord {
    PredictionRecord {
        lemma: lemma.into(),
        gold: gold.into(),
        predicted: predicted.into(),
        tags: vec!["V".into()],
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (records, code) = match args.as_slice() {
        [path, code] => (parse_predictions(&std::fs::read_to_string(path)?)?, code.clone()),
        _ => (
            vec![
                record("verter", "vierto", "verto"),
                record("compilar", "compilan", "compillan"),
                record("irradiar", "irradiaseis", "irradiseis"),
                record("acondicionar", "acondicionaste", "aconcoonaste"),
                record("doler", "nos doliéramos", "doliéramos"),
                record("cantar", "cantaste", "cantaste"),
            ],
            "spa".to_owned(),
        ),
    };
    let profile = builtin_profile(&code).ok_or("no built-in profile for this language")?;

    for r in records.iter().take(6) {
        let seg = segment(&r.lemma, &r.gold);
        let (prefix, stem, suffix) = seg.parts(&r.gold);
        let ops: String = align(&r.gold, &r.predicted)
            .ops
            .iter()
            .map(|op| match op {
                EditOp::Match(_) => '.',
                EditOp::Substitute(..) => 's',
                EditOp::Delete(_) => 'd',
                EditOp::Insert(_) => 'i',
            })
            .collect();
        let labels = classify(&r.lemma, &r.gold, &r.predicted, &r.tags, &profile);
        println!("{} -> {} [{prefix}|{stem}|{suffix}] ops {ops} labels {labels:?}", r.predicted, r.gold);
    }
    println!();
    print!("{}", pair_error_markdown("example", &code, &analyze(&records, &profile, DEFAULT_WINDOW)));
    Ok(())
}
