use proptest::prelude::*;

use morph_transfer::data::build_vocabulary;
use morph_transfer::data::synthetic::synthetic_corpus;
use morph_transfer::experiment::{AccuracyMatrix, ErrorTable};
use morph_transfer::model::{ModelConfig, PointerGenerator};
use morph_transfer::taxonomy::{aggregate, parse_predictions, render_predictions, ErrorLabel, PredictionRecord};
use morph_transfer::train::{load_checkpoint, save_checkpoint, Checkpoint, Provenance, Stage, TrainConfig};

fn label() -> impl Strategy<Value = ErrorLabel> {
    (0..ErrorLabel::ALL.len()).prop_map(|i| ErrorLabel::ALL[i])
}

proptest! {
    #[test]
    fn accuracy_matrix_round_trips_at_one_decimal(values in prop::collection::vec(prop::option::of(0u32..=1000), 6)) {
        let sources: Vec<String> = ["eus", "hun", "qvh"].iter().map(|s| s.to_string()).collect();
        let targets: Vec<String> = ["eng", "zul"].iter().map(|s| s.to_string()).collect();
        let mut m = AccuracyMatrix::new(&sources, &targets);
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = v {
                m.set(&targets[i / 3], &sources[i % 3], f64::from(*v) / 1000.0);
            }
        }
        let back = AccuracyMatrix::from_csv(&m.to_csv()).unwrap();
        prop_assert_eq!(back.to_csv(), m.to_csv());
        for (key, v) in &m.cells {
            prop_assert!((back.cells[key] - v).abs() < 1e-9);
        }
    }

    #[test]
    fn error_table_round_trips(a in prop::collection::vec(prop::collection::vec(label(), 0..3), 0..30),
                               b in prop::collection::vec(prop::collection::vec(label(), 0..3), 0..30)) {
        let t = ErrorTable { columns: vec![("hun".into(), aggregate(&a)), ("nav".into(), aggregate(&b))] };
        let back = ErrorTable::from_csv(&t.to_csv()).unwrap();
        for ((_, x), (_, y)) in back.columns.iter().zip(&t.columns) {
            prop_assert_eq!(&x.counts, &y.counts);
        }
    }

    #[test]
    fn predictions_round_trip(rows in prop::collection::vec(("[a-zé]{1,8}", "[a-z ]{1,8}", "[a-z]{0,8}", prop::collection::vec("[A-Z0-9]{1,4}", 1..4)), 0..20)) {
        let records: Vec<PredictionRecord> = rows
            .into_iter()
            .map(|(lemma, gold, predicted, tags)| PredictionRecord { lemma, gold, predicted, tags })
            .filter(|r| !r.gold.trim().is_empty())
            .collect();
        prop_assert_eq!(parse_predictions(&render_predictions(&records)).unwrap(), records);
    }
}

#[test]
fn checkpoints_round_trip_in_both_widths() {
    let corpus = synthetic_corpus("nav", 20, 1).unwrap();
    let vocab = build_vocabulary(&[&corpus]);
    let config = TrainConfig::new(1, 0.3, 4);
    let f32_model = PointerGenerator::<f32>::new(ModelConfig::tiny(0, 0, 6), vocab.clone(), 4).unwrap();
    let f64_model = PointerGenerator::<f64>::new(ModelConfig::tiny(0, 0, 6), vocab, 4).unwrap();
    let provenance = Provenance::new("nav", Stage::Pretrain, &config, 1);

    let a = Checkpoint { model: f32_model, provenance: provenance.clone() };
    let bytes = save_checkpoint(&a);
    let back = load_checkpoint::<f32>(&bytes).unwrap();
    assert!(back.model.params.bit_identical(&a.model.params));
    assert_eq!(back.provenance, provenance);
    assert_eq!(save_checkpoint(&back), bytes);
    assert!(load_checkpoint::<f64>(&bytes).is_err());

    let b = Checkpoint { model: f64_model, provenance };
    let back = load_checkpoint::<f64>(&save_checkpoint(&b)).unwrap();
    assert!(back.model.params.bit_identical(&b.model.params));
}
