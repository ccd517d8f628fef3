//! Source × target transfer grids: pretrain each source once, fine-tune a
//! copy per target, evaluate, analyze errors and render tables.

pub mod tables;
pub mod transfer;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::layout::{find_corpus, load_profile, load_split, corpus_path};
use crate::data::{build_vocabulary, InflectionExample, LanguageProfile, Split, Tier};
use crate::model::{ModelConfig, PointerGenerator};
use crate::nn::{Float, FloatMode};
use crate::taxonomy::{aggregate, classify, render_predictions, skipped_rules, ErrorReport, PredictionRecord};
use crate::train::{
    exact_match, finetune, predict_all, pretrain, Checkpoint, Provenance, Stage, TrainConfig, FINETUNE_DROPOUT,
    FINETUNE_EPOCHS, PRETRAIN_DROPOUT, PRETRAIN_EPOCHS,
};
use crate::{Error, Result};

pub use tables::{AccuracyMatrix, ErrorTable, MISSING};
pub use transfer::{compare_transfer, mean_accuracies, TransferRun, TransferSetup};

/// Number of development examples analyzed per pair by default.
pub const DEFAULT_WINDOW: usize = 75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub pretrain_tier: Tier,
    pub finetune_tier: Tier,
    pub seeds: Vec<u64>,
    /// Leading development examples given to the error analysis.
    pub window: usize,
    pub model: ModelConfig,
    pub pretrain_epochs: usize,
    pub pretrain_dropout: f64,
    pub finetune_epochs: usize,
    pub finetune_dropout: f64,
    pub batch_size: usize,
    pub float_mode: FloatMode,
    /// Grid cells trained concurrently.
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn new(sources: &[&str], targets: &[&str], data_dir: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            sources: sources.iter().map(|s| s.to_string()).collect(),
            targets: targets.iter().map(|s| s.to_string()).collect(),
            data_dir: data_dir.into(),
            out_dir: out_dir.into(),
            pretrain_tier: Tier::High,
            finetune_tier: Tier::Low,
            seeds: vec![1],
            window: DEFAULT_WINDOW,
            model: ModelConfig::standard(0, 0),
            pretrain_epochs: PRETRAIN_EPOCHS,
            pretrain_dropout: PRETRAIN_DROPOUT,
            finetune_epochs: FINETUNE_EPOCHS,
            finetune_dropout: FINETUNE_DROPOUT,
            batch_size: crate::train::DEFAULT_BATCH_SIZE,
            float_mode: FloatMode::Fast,
            jobs: 1,
        }
    }

    fn train_config(&self, epochs: usize, dropout: f64, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            float_mode: self.float_mode,
            ..TrainConfig::new(epochs, dropout, seed)
        }
    }

    pub fn pretrain_config(&self, seed: u64) -> TrainConfig {
        self.train_config(self.pretrain_epochs, self.pretrain_dropout, seed)
    }

    pub fn finetune_config(&self, seed: u64) -> TrainConfig {
        self.train_config(self.finetune_epochs, self.finetune_dropout, seed)
    }

    /// Output directory of one seed: the grid root for a single seed,
    /// `seed-<n>/` below it otherwise.
    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        if self.seeds.len() == 1 {
            self.out_dir.clone()
        } else {
            self.out_dir.join(format!("seed-{seed}"))
        }
    }

    pub fn pair_dir(&self, seed: u64, source: &str, target: &str) -> PathBuf {
        self.seed_dir(seed).join(format!("{source}-{target}"))
    }

    pub fn pretrained_path(&self, seed: u64, source: &str) -> PathBuf {
        self.seed_dir(seed).join("pretrained").join(format!("{source}.minf"))
    }

    /// Every problem that would stop the grid, found before any training.
    pub fn check_inputs(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.sources.is_empty() || self.targets.is_empty() {
            problems.push("at least one source and one target are required".to_owned());
        }
        if self.seeds.is_empty() {
            problems.push("at least one seed is required".to_owned());
        }
        for s in &self.sources {
            if find_corpus(&self.data_dir, s, Split::Train(self.pretrain_tier)).is_none() {
                problems.push(format!("missing {}", corpus_path(&self.data_dir, s, Split::Train(self.pretrain_tier)).display()));
            }
        }
        for t in &self.targets {
            for split in [Split::Train(self.finetune_tier), Split::Dev, Split::Test] {
                if find_corpus(&self.data_dir, t, split).is_none() {
                    problems.push(format!("missing {}", corpus_path(&self.data_dir, t, split).display()));
                }
            }
            if let Err(e) = load_profile(&self.data_dir, t) {
                problems.push(format!("profile for {t}: {e}"));
            }
        }
        if let Err(e) = self.train_config(self.pretrain_epochs, self.pretrain_dropout, 0).validate() {
            problems.push(format!("pretraining: {e}"));
        }
        if let Err(e) = self.train_config(self.finetune_epochs, self.finetune_dropout, 0).validate() {
            problems.push(format!("fine-tuning: {e}"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(problems.join("; ")))
        }
    }
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub source: String,
    pub target: String,
    pub dev_accuracy: f64,
    pub test_accuracy: f64,
    pub seed: u64,
    pub epochs_pretrain: usize,
    pub epochs_finetune: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFailure {
    pub source: String,
    pub target: String,
    pub seed: u64,
    pub message: String,
}

/// Everything a grid produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridOutcome {
    pub metrics: Vec<Metrics>,
    /// Seed-averaged test accuracy.
    pub test: AccuracyMatrix,
    /// Seed-averaged development accuracy.
    pub dev: AccuracyMatrix,
    /// Per target, error counts of each source summed over seeds.
    pub errors: BTreeMap<String, ErrorTable>,
    pub failures: Vec<PairFailure>,
}

/// Target-side inputs shared by every source.
struct TargetData {
    code: String,
    train: Vec<InflectionExample>,
    dev: Vec<InflectionExample>,
    test: Vec<InflectionExample>,
    profile: LanguageProfile,
}

/// Runs the full grid and writes every artifact below `spec.out_dir`.
pub fn run_grid(spec: &ExperimentSpec) -> Result<GridOutcome> {
    match spec.float_mode {
        FloatMode::Fast => run_grid_as::<f32>(spec),
        FloatMode::Verify => run_grid_as::<f64>(spec),
    }
}

fn run_grid_as<F: Float>(spec: &ExperimentSpec) -> Result<GridOutcome> {
    spec.check_inputs()?;
    let sources = spec
        .sources
        .iter()
        .map(|s| load_split(&spec.data_dir, s, Split::Train(spec.pretrain_tier)))
        .collect::<Result<Vec<_>>>()?;
    let targets = spec
        .targets
        .iter()
        .map(|t| {
            Ok(TargetData {
                code: t.clone(),
                train: load_split(&spec.data_dir, t, Split::Train(spec.finetune_tier))?,
                dev: load_split(&spec.data_dir, t, Split::Dev)?,
                test: load_split(&spec.data_dir, t, Split::Test)?,
                profile: load_profile(&spec.data_dir, t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    write(&spec.out_dir.join("spec.json"), &serde_json::to_string_pretty(spec).expect("spec serializes"))?;

    let mut outcome = GridOutcome::default();
    let mut reports: BTreeMap<(String, String), ErrorReport> = BTreeMap::new();
    for &seed in &spec.seeds {
        // one pretrained model per source, over a vocabulary that also
        // covers every target so fine-tuning never changes shapes
        let pretrained = parallel_map(spec.sources.iter().zip(&sources).collect(), spec.jobs, |(code, corpus)| {
            pretrain_source::<F>(spec, seed, code, corpus, &targets)
        });
        let cells: Vec<(usize, usize)> = (0..sources.len()).flat_map(|s| (0..targets.len()).map(move |t| (s, t))).collect();
        let results = parallel_map(cells, spec.jobs, |(s, t)| {
            let checkpoint = pretrained[s].as_ref().map_err(|e| format!("pretraining failed: {e}"))?;
            run_pair(spec, seed, checkpoint, &targets[t]).map_err(|e| e.to_string())
        });
        for (i, result) in results.into_iter().enumerate() {
            let (source, target) = (&spec.sources[i / targets.len()], &spec.targets[i % targets.len()]);
            match result {
                Ok((metrics, report)) => {
                    let slot = reports.entry((target.clone(), source.clone())).or_default();
                    merge(slot, &report);
                    outcome.metrics.push(metrics);
                }
                Err(message) => outcome.failures.push(PairFailure {
                    source: source.clone(),
                    target: target.clone(),
                    seed,
                    message,
                }),
            }
        }
    }
    let (test, dev) = accuracy_matrices(&spec.sources, &spec.targets, &outcome.metrics);
    outcome.test = test;
    outcome.dev = dev;
    outcome.errors = error_tables(&spec.sources, &spec.targets, &reports);
    write_tables(&spec.out_dir, &outcome)?;
    Ok(outcome)
}

fn pretrain_source<F: Float>(
    spec: &ExperimentSpec,
    seed: u64,
    code: &str,
    corpus: &[InflectionExample],
    targets: &[TargetData],
) -> Result<Checkpoint<F>> {
    let mut corpora: Vec<&[InflectionExample]> = vec![corpus];
    corpora.extend(targets.iter().map(|t| t.train.as_slice()));
    let vocab = build_vocabulary(&corpora);
    let (checkpoint, _) = pretrain::<F>(code, corpus, vocab, spec.model, &spec.pretrain_config(seed))?;
    let path = spec.pretrained_path(seed, code);
    fs::create_dir_all(path.parent().expect("has parent")).map_err(|e| Error::io(&path, e))?;
    checkpoint.save(&path)?;
    Ok(checkpoint)
}

fn run_pair<F: Float>(
    spec: &ExperimentSpec,
    seed: u64,
    pretrained: &Checkpoint<F>,
    target: &TargetData,
) -> Result<(Metrics, ErrorReport)> {
    let source = &pretrained.provenance.language;
    let config = spec.finetune_config(seed);
    let (model, stats) = finetune(pretrained, &target.train, &config)?;
    let dir = spec.pair_dir(seed, source, &target.code);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let finetuned = Checkpoint {
        model,
        provenance: Provenance::new(&target.code, Stage::Finetune, &config, stats.epochs),
    };
    finetuned.save(&dir.join("checkpoint.minf"))?;

    let (dev_records, dev_accuracy) = evaluate_split(&finetuned.model, &target.dev)?;
    let (test_records, test_accuracy) = evaluate_split(&finetuned.model, &target.test)?;
    write(&dir.join("predictions-dev.tsv"), &render_predictions(&dev_records))?;
    write(&dir.join("predictions-test.tsv"), &render_predictions(&test_records))?;

    let report = analyze(&dev_records, &target.profile, spec.window);
    write(&dir.join("errors.csv"), &report.to_csv())?;
    write(&dir.join("errors.md"), &pair_error_markdown(source, &target.code, &report))?;

    let metrics = Metrics {
        source: source.clone(),
        target: target.code.clone(),
        dev_accuracy,
        test_accuracy,
        seed,
        epochs_pretrain: pretrained.provenance.epochs,
        epochs_finetune: stats.epochs,
    };
    write(&dir.join("metrics.json"), &serde_json::to_string_pretty(&metrics).expect("metrics serialize"))?;
    Ok((metrics, report))
}

/// Predictions and exact-match accuracy on one split.
pub fn evaluate_split<F: Float>(
    model: &PointerGenerator<F>,
    corpus: &[InflectionExample],
) -> Result<(Vec<PredictionRecord>, f64)> {
    let predictions = predict_all(model, corpus);
    let accuracy = exact_match(corpus, &predictions)?;
    let records = corpus
        .iter()
        .zip(predictions)
        .map(|(ex, predicted)| PredictionRecord {
            lemma: ex.lemma.clone(),
            gold: ex.form.clone(),
            predicted,
            tags: ex.tags.clone(),
        })
        .collect();
    Ok((records, accuracy))
}

/// Error report over the first `window` records.
pub fn analyze(records: &[PredictionRecord], profile: &LanguageProfile, window: usize) -> ErrorReport {
    let labels: Vec<_> = records
        .iter()
        .take(window)
        .map(|r| classify(&r.lemma, &r.gold, &r.predicted, &r.tags, profile))
        .collect();
    let mut report = aggregate(&labels);
    report.skipped_rules = skipped_rules(profile);
    report
}

fn merge(into: &mut ErrorReport, other: &ErrorReport) {
    for (&l, &c) in &other.counts {
        *into.counts.entry(l).or_insert(0) += c;
    }
    into.examples += other.examples;
    into.correct += other.correct;
    if into.skipped_rules.is_empty() {
        into.skipped_rules = other.skipped_rules.clone();
    }
}

/// Markdown error table of one pair, noting rules the profile disables.
pub fn pair_error_markdown(source: &str, target: &str, report: &ErrorReport) -> String {
    let table = ErrorTable {
        columns: vec![(source.to_owned(), report.clone())],
    };
    let mut out = format!(
        "# Errors of {} fine-tuned from {}\n\n{} examples analyzed, {} correct.\n\n",
        target.to_uppercase(),
        source.to_uppercase(),
        report.examples,
        report.correct
    );
    out.push_str(&table.to_markdown());
    if !report.skipped_rules.is_empty() {
        out.push_str("\nRules not applied:\n\n");
        for r in &report.skipped_rules {
            out.push_str(&format!("- {r}\n"));
        }
    }
    out
}

/// Seed-averaged (test, dev) accuracy matrices.
pub fn accuracy_matrices(sources: &[String], targets: &[String], metrics: &[Metrics]) -> (AccuracyMatrix, AccuracyMatrix) {
    let mut sums: BTreeMap<(String, String), (f64, f64, usize)> = BTreeMap::new();
    for m in metrics {
        let e = sums.entry((m.target.clone(), m.source.clone())).or_insert((0.0, 0.0, 0));
        e.0 += m.test_accuracy;
        e.1 += m.dev_accuracy;
        e.2 += 1;
    }
    let mut test = AccuracyMatrix::new(sources, targets);
    let mut dev = AccuracyMatrix::new(sources, targets);
    for ((t, s), (te, de, n)) in sums {
        test.set(&t, &s, te / n as f64);
        dev.set(&t, &s, de / n as f64);
    }
    (test, dev)
}

fn error_tables(
    sources: &[String],
    targets: &[String],
    reports: &BTreeMap<(String, String), ErrorReport>,
) -> BTreeMap<String, ErrorTable> {
    targets
        .iter()
        .map(|t| {
            let columns = sources
                .iter()
                .filter_map(|s| reports.get(&(t.clone(), s.clone())).map(|r| (s.clone(), r.clone())))
                .collect();
            (t.clone(), ErrorTable { columns })
        })
        .collect()
}

/// Writes the accuracy and error tables (and a failure list, if any) to
/// the grid root, overwriting earlier versions.
pub fn write_tables(out_dir: &Path, outcome: &GridOutcome) -> Result<()> {
    write(&out_dir.join("accuracy-test.csv"), &outcome.test.to_csv())?;
    write(&out_dir.join("accuracy-test.md"), &outcome.test.to_markdown())?;
    write(&out_dir.join("accuracy-dev.csv"), &outcome.dev.to_csv())?;
    write(&out_dir.join("accuracy-dev.md"), &outcome.dev.to_markdown())?;
    for (target, table) in &outcome.errors {
        write(&out_dir.join(format!("errors-{target}.csv")), &table.to_csv())?;
        write(&out_dir.join(format!("errors-{target}.md")), &table.to_markdown())?;
    }
    let failures = out_dir.join("failures.tsv");
    if outcome.failures.is_empty() {
        if failures.exists() {
            fs::remove_file(&failures).map_err(|e| Error::io(&failures, e))?;
        }
    } else {
        let text: String = outcome
            .failures
            .iter()
            .map(|f| format!("{}\t{}\t{}\t{}\n", f.source, f.target, f.seed, f.message.replace(['\t', '\n'], " ")))
            .collect();
        write(&failures, &text)?;
    }
    Ok(())
}

/// Rebuilds the grid tables from the per-pair files of a finished run.
pub fn collect_outcome(out_dir: &Path) -> Result<GridOutcome> {
    let spec_path = out_dir.join("spec.json");
    let text = fs::read_to_string(&spec_path).map_err(|e| Error::io(&spec_path, e))?;
    let mut spec: ExperimentSpec =
        serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", spec_path.display())))?;
    spec.out_dir = out_dir.to_owned();
    let mut outcome = GridOutcome::default();
    let mut reports: BTreeMap<(String, String), ErrorReport> = BTreeMap::new();
    for &seed in &spec.seeds {
        for s in &spec.sources {
            for t in &spec.targets {
                let dir = spec.pair_dir(seed, s, t);
                let metrics_path = dir.join("metrics.json");
                let Ok(text) = fs::read_to_string(&metrics_path) else {
                    continue;
                };
                let metrics: Metrics = serde_json::from_str(&text)
                    .map_err(|e| Error::Invalid(format!("{}: {e}", metrics_path.display())))?;
                outcome.metrics.push(metrics);
                let errors_path = dir.join("errors.csv");
                if let Ok(text) = fs::read_to_string(&errors_path) {
                    let report = ErrorReport::from_csv(&text)
                        .map_err(|e| Error::Invalid(format!("{}: {e}", errors_path.display())))?;
                    merge(reports.entry((t.clone(), s.clone())).or_default(), &report);
                }
            }
        }
    }
    let (test, dev) = accuracy_matrices(&spec.sources, &spec.targets, &outcome.metrics);
    outcome.test = test;
    outcome.dev = dev;
    outcome.errors = error_tables(&spec.sources, &spec.targets, &reports);
    Ok(outcome)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Applies `f` to every item on up to `jobs` threads; results keep the
/// input order.
pub fn parallel_map<T, R, G>(items: Vec<T>, jobs: usize, f: G) -> Vec<R>
where
    T: Send,
    R: Send,
    G: Fn(T) -> R + Sync + Send,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.into_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.into_par_iter().map(f).collect()),
        Err(_) => items.into_iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let out = parallel_map((0..20).collect(), 4, |x: i32| x * x);
        assert_eq!(out, (0..20).map(|x| x * x).collect::<Vec<_>>());
        assert!(parallel_map(Vec::<i32>::new(), 3, |x| x).is_empty());
    }

    #[test]
    fn missing_inputs_fail_fast() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec::new(&["hun"], &["eng"], dir.path(), dir.path().join("out"));
        let err = run_grid(&spec).unwrap_err().to_string();
        assert!(err.contains("hungarian-train-high") && err.contains("english-dev"), "{err}");
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn seed_directories() {
        let mut spec = ExperimentSpec::new(&["hun"], &["eng"], "d", "o");
        assert_eq!(spec.pair_dir(1, "hun", "eng"), Path::new("o/hun-eng"));
        spec.seeds = vec![1, 2];
        assert_eq!(spec.pair_dir(2, "hun", "eng"), Path::new("o/seed-2/hun-eng"));
        assert_eq!(spec.pretrained_path(2, "hun"), Path::new("o/seed-2/pretrained/hun.minf"));
    }
}
