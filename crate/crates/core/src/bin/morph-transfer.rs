use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use morph_transfer::data::layout::{load_profile, load_split, read_corpus};
use morph_transfer::data::synthetic::{write_synthetic_dataset, SplitSizes, SYNTHETIC_LANGUAGES};
use morph_transfer::data::{build_vocabulary, InflectionExample, Split, Tier};
use morph_transfer::experiment::{
    analyze, collect_outcome, evaluate_split, pair_error_markdown, run_grid, write_tables, ExperimentSpec,
    DEFAULT_WINDOW,
};
use morph_transfer::model::ModelConfig;
use morph_transfer::nn::{Float, FloatMode};
use morph_transfer::taxonomy::{parse_predictions, render_predictions};
use morph_transfer::train::{
    finetune, format_accuracy, pretrain, Checkpoint, CheckpointError, Provenance, Stage, TrainConfig,
    FINETUNE_DROPOUT, FINETUNE_EPOCHS, PRETRAIN_DROPOUT, PRETRAIN_EPOCHS,
};
use morph_transfer::{Error, Result};

#[derive(Parser)]
#[command(name = "morph-transfer", version, about = "Cross-lingual transfer for morphological inflection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pretrain a model on a source language.
    Train(TrainArgs),
    /// Continue training a checkpoint on a target language.
    Finetune(FinetuneArgs),
    /// Write predictions for a corpus.
    Predict(PredictArgs),
    /// Exact-match accuracy of a checkpoint on a corpus.
    Evaluate(EvaluateArgs),
    /// Classify the errors in a predictions file.
    AnalyzeErrors(AnalyzeArgs),
    /// Re-render the tables of a finished grid.
    Report(ReportArgs),
    /// Run a source × target transfer grid.
    Grid(GridArgs),
    /// Write rule-generated corpora in the shared-task layout.
    Synthesize(SynthesizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    TrainLow,
    TrainMedium,
    TrainHigh,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::TrainLow => Split::Train(Tier::Low),
            SplitArg::TrainMedium => Split::Train(Tier::Medium),
            SplitArg::TrainHigh => Split::Train(Tier::High),
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct ModelArgs {
    #[arg(long, default_value_t = ModelConfig::DEFAULT_EMBEDDING)]
    embedding: usize,
    #[arg(long, default_value_t = ModelConfig::DEFAULT_HIDDEN)]
    hidden: usize,
    /// Attention layer width (defaults to the hidden size).
    #[arg(long)]
    attention: Option<usize>,
    /// Train in 64-bit floats instead of 32-bit.
    #[arg(long)]
    verify: bool,
}

impl ModelArgs {
    fn config(&self) -> ModelConfig {
        ModelConfig {
            char_vocab: 0,
            tag_vocab: 0,
            embedding: self.embedding,
            hidden: self.hidden,
            attention: self.attention.unwrap_or(self.hidden),
        }
    }

    fn float_mode(&self) -> FloatMode {
        if self.verify {
            FloatMode::Verify
        } else {
            FloatMode::Fast
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    #[arg(long)]
    source: String,
    /// Target languages whose training symbols join the vocabulary.
    #[arg(long, value_delimiter = ',')]
    target: Vec<String>,
    #[arg(long, value_enum, default_value = "high")]
    tier: TierArg,
    /// Training tier of the targets added to the vocabulary.
    #[arg(long, value_enum, default_value = "low")]
    target_tier: TierArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = PRETRAIN_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = PRETRAIN_DROPOUT)]
    dropout: f64,
    #[arg(long, default_value_t = morph_transfer::train::DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[command(flatten)]
    model: ModelArgs,
    /// Checkpoint file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TierArg {
    Low,
    Medium,
    High,
}

impl From<TierArg> for Tier {
    fn from(t: TierArg) -> Tier {
        match t {
            TierArg::Low => Tier::Low,
            TierArg::Medium => Tier::Medium,
            TierArg::High => Tier::High,
        }
    }
}

#[derive(Args)]
struct FinetuneArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, value_enum, default_value = "low")]
    tier: TierArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = FINETUNE_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = FINETUNE_DROPOUT)]
    dropout: f64,
    #[arg(long, default_value_t = morph_transfer::train::DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus file (lemma, form, tags per line).
    #[arg(long, conflicts_with_all = ["data_dir", "target"])]
    input: Option<PathBuf>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_enum, default_value = "dev")]
    split: SplitArg,
}

impl CorpusArgs {
    fn load(&self) -> Result<Vec<InflectionExample>> {
        match (&self.input, &self.data_dir, &self.target) {
            (Some(path), _, _) => read_corpus(path),
            (None, Some(dir), Some(code)) => load_split(dir, code, self.split.into()),
            _ => Err(Error::Invalid("give --input, or --data-dir with --target".into())),
        }
    }
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Predictions TSV to write (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Predictions TSV (lemma, gold, predicted, tags).
    #[arg(long)]
    predictions: PathBuf,
    /// Language whose profile drives the analysis.
    #[arg(long)]
    target: String,
    /// Source language the model was transferred from, used as the
    /// column label.
    #[arg(long, default_value = "none")]
    source: String,
    /// Directory holding `profiles/<code>.profile`; built-in profiles are
    /// used when absent.
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Output directory for errors.csv and errors.md (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Grid output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    source: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    target: Vec<String>,
    /// Pretraining tier.
    #[arg(long, value_enum, default_value = "high")]
    tier: TierArg,
    #[arg(long, value_enum, default_value = "low")]
    finetune_tier: TierArg,
    /// One or more seeds; each runs the whole grid.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seed: Vec<u64>,
    /// Pretraining epochs.
    #[arg(long, default_value_t = PRETRAIN_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = FINETUNE_EPOCHS)]
    finetune_epochs: usize,
    /// Pretraining dropout.
    #[arg(long, default_value_t = PRETRAIN_DROPOUT)]
    dropout: f64,
    #[arg(long, default_value_t = FINETUNE_DROPOUT)]
    finetune_dropout: f64,
    #[arg(long, default_value_t = morph_transfer::train::DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Grid cells trained concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = SYNTHETIC_LANGUAGES.iter().map(|s| s.to_string()).collect::<Vec<_>>())]
    languages: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    low: usize,
    #[arg(long, default_value_t = 1000)]
    medium: usize,
    #[arg(long, default_value_t = 10000)]
    high: usize,
    #[arg(long, default_value_t = 1000)]
    dev: usize,
    #[arg(long, default_value_t = 1000)]
    test: usize,
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => match a.model.float_mode() {
            FloatMode::Fast => cmd_train::<f32>(&a),
            FloatMode::Verify => cmd_train::<f64>(&a),
        },
        Command::Finetune(a) => with_checkpoint(&a.checkpoint, Finetune(&a)),
        Command::Predict(a) => with_checkpoint(&a.checkpoint, Predict(&a)),
        Command::Evaluate(a) => with_checkpoint(&a.checkpoint, Evaluate(&a)),
        Command::AnalyzeErrors(a) => cmd_analyze(&a),
        Command::Report(a) => {
            let outcome = collect_outcome(&a.out)?;
            write_tables(&a.out, &outcome)?;
            print!("{}", outcome.test.to_markdown());
            Ok(())
        }
        Command::Grid(a) => cmd_grid(a),
        Command::Synthesize(a) => {
            let sizes = SplitSizes {
                low: a.low,
                medium: a.medium,
                high: a.high,
                dev: a.dev,
                test: a.test,
            };
            for code in &a.languages {
                write_synthetic_dataset(&a.data_dir, code, a.seed, sizes).map_err(|e| Error::io(&a.data_dir, e))?;
                println!("wrote {code} to {}", a.data_dir.display());
            }
            Ok(())
        }
    }
}

fn cmd_train<F: Float>(a: &TrainArgs) -> Result<()> {
    let corpus = load_split(&a.data_dir, &a.source, Split::Train(a.tier.into()))?;
    let targets = a
        .target
        .iter()
        .map(|t| load_split(&a.data_dir, t, Split::Train(a.target_tier.into())))
        .collect::<Result<Vec<_>>>()?;
    let mut corpora: Vec<&[InflectionExample]> = vec![&corpus];
    corpora.extend(targets.iter().map(Vec::as_slice));
    let config = TrainConfig {
        batch_size: a.batch_size,
        float_mode: F::MODE,
        ..TrainConfig::new(a.epochs, a.dropout, a.seed)
    };
    let (checkpoint, stats) = pretrain::<F>(&a.source, &corpus, build_vocabulary(&corpora), a.model.config(), &config)?;
    checkpoint.save(&a.out)?;
    println!(
        "trained {} for {} epochs ({} updates), final loss {:.4}; wrote {}",
        a.source,
        stats.epochs,
        stats.updates,
        stats.epoch_losses.last().copied().unwrap_or(f64::NAN),
        a.out.display()
    );
    Ok(())
}

/// An action that works with checkpoints of either float width.
trait CheckpointAction {
    fn apply<F: Float>(self, checkpoint: Checkpoint<F>) -> Result<()>;
}

fn with_checkpoint(path: &Path, action: impl CheckpointAction) -> Result<()> {
    match Checkpoint::<f32>::load(path) {
        Ok(c) => action.apply(c),
        Err(CheckpointError::Dtype { .. }) => action.apply(Checkpoint::<f64>::load(path)?),
        Err(e) => Err(e.into()),
    }
}

struct Finetune<'a>(&'a FinetuneArgs);

impl CheckpointAction for Finetune<'_> {
    fn apply<F: Float>(self, checkpoint: Checkpoint<F>) -> Result<()> {
        let a = self.0;
        let corpus = load_split(&a.data_dir, &a.target, Split::Train(a.tier.into()))?;
        let config = TrainConfig {
            batch_size: a.batch_size,
            float_mode: F::MODE,
            ..TrainConfig::new(a.epochs, a.dropout, a.seed)
        };
        let (model, stats) = finetune(&checkpoint, &corpus, &config)?;
        let out = Checkpoint {
            model,
            provenance: Provenance::new(&a.target, Stage::Finetune, &config, stats.epochs),
        };
        out.save(&a.out)?;
        println!(
            "fine-tuned {} on {} for {} epochs; wrote {}",
            checkpoint.provenance.language,
            a.target,
            stats.epochs,
            a.out.display()
        );
        Ok(())
    }
}

struct Predict<'a>(&'a PredictArgs);

impl CheckpointAction for Predict<'_> {
    fn apply<F: Float>(self, checkpoint: Checkpoint<F>) -> Result<()> {
        let a = self.0;
        let corpus = a.corpus.load()?;
        let (records, _) = evaluate_split(&checkpoint.model, &corpus)?;
        let text = render_predictions(&records);
        match &a.out {
            Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

struct Evaluate<'a>(&'a EvaluateArgs);

impl CheckpointAction for Evaluate<'_> {
    fn apply<F: Float>(self, checkpoint: Checkpoint<F>) -> Result<()> {
        let corpus = self.0.corpus.load()?;
        let (_, accuracy) = evaluate_split(&checkpoint.model, &corpus)?;
        println!("{}", format_accuracy(accuracy));
        Ok(())
    }
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let text = fs::read_to_string(&a.predictions).map_err(|e| Error::io(&a.predictions, e))?;
    let records =
        parse_predictions(&text).map_err(|e| Error::Invalid(format!("{}: {e}", a.predictions.display())))?;
    let profile = load_profile(&a.data_dir, &a.target)?;
    let report = analyze(&records, &profile, a.window);
    let markdown = pair_error_markdown(&a.source, &a.target, &report);
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let csv = dir.join("errors.csv");
            fs::write(&csv, report.to_csv()).map_err(|e| Error::io(&csv, e))?;
            let md = dir.join("errors.md");
            fs::write(&md, markdown).map_err(|e| Error::io(&md, e))?;
        }
        None => print!("{markdown}"),
    }
    Ok(())
}

fn cmd_grid(a: GridArgs) -> Result<()> {
    let sources: Vec<&str> = a.source.iter().map(String::as_str).collect();
    let targets: Vec<&str> = a.target.iter().map(String::as_str).collect();
    let spec = ExperimentSpec {
        pretrain_tier: a.tier.into(),
        finetune_tier: a.finetune_tier.into(),
        seeds: a.seed,
        window: a.window,
        model: a.model.config(),
        pretrain_epochs: a.epochs,
        pretrain_dropout: a.dropout,
        finetune_epochs: a.finetune_epochs,
        finetune_dropout: a.finetune_dropout,
        batch_size: a.batch_size,
        float_mode: a.model.float_mode(),
        jobs: a.jobs,
        ..ExperimentSpec::new(&sources, &targets, a.data_dir, a.out)
    };
    let outcome = run_grid(&spec)?;
    println!("Test accuracy\n\n{}", outcome.test.to_markdown());
    for f in &outcome.failures {
        eprintln!("failed {}-{} (seed {}): {}", f.source, f.target, f.seed, f.message);
    }
    println!("artifacts in {}", spec.out_dir.display());
    Ok(())
}
