//! Command-line entry points: convert, split, train, eval, sigtest, report.
//!
//! Exit codes: 0 success, 1 invalid usage or configuration, 2 runtime failure.
//!
//! A training output directory looks like
//!
//! ```text
//! <output>/experiment.json
//! <output>/runs/<seed>/checkpoint.bin | checkpoint.json
//! <output>/runs/<seed>/history.jsonl
//! <output>/runs/<seed>/metrics.json
//! <output>/runs/<seed>/predictions.jsonl      (written by eval)
//! <output>/runs/<seed>/test_metrics.json      (written by eval)
//! <output>/summary.json, summary.txt          (written by eval)
//! ```

mod config;

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{parse_config, ExperimentConfig, ModelKind, Precision, VectorFormat};

use crate::baselines::LrBundle;
use crate::corpus::{
    self, read_canonical, read_split, stratified_split, subsample_negatives, write_canonical, write_split,
    DatasetCard, LabeledSentence, SplitRatios, DEFAULT_SUBSAMPLE_SEED,
};
use crate::embeddings::{load_word2vec, ContextualVectors, EmbeddingMatrix};
use crate::eval::{
    aggregate, approx_randomization, evaluate, format_table, select_best_run, significance_marker, Metric,
    MetricsReport, PredictionRecord, PredictionSet, RepetitionSummary, RunScore, ART_ITERATIONS,
    DEFAULT_THRESHOLD, SWAP_FRACTION,
};
use crate::neuralnet::{
    infer, load_checkpoint, prepare_examples, save_checkpoint, train, Checkpoint, EpochRecord, Example, Real,
    TrainConfig,
};

pub const SENTENCES_FILE: &str = "sentences.jsonl";
pub const CARD_FILE: &str = "card.json";
pub const EXPERIMENT_FILE: &str = "experiment.json";
pub const RUNS_DIR: &str = "runs";
pub const NEURAL_CHECKPOINT: &str = "checkpoint.bin";
pub const LR_CHECKPOINT: &str = "checkpoint.json";
pub const HISTORY_FILE: &str = "history.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const TEST_METRICS_FILE: &str = "test_metrics.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SUMMARY_TABLE: &str = "summary.txt";

#[derive(Debug)]
pub enum CliError {
    Validation(Vec<String>),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(vec![msg.into()])
}

fn runtime(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "causaldet", version, about = "Causal sentence detection: corpora, training, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a source corpus into canonical sentences plus a dataset card.
    Convert(ConvertArgs),
    /// Stratified train/validation/test split of canonical sentences.
    Split(SplitArgs),
    /// Train every repetition of an experiment config.
    Train(TrainArgs),
    /// Score trained runs on the test split and aggregate.
    Eval(EvalArgs),
    /// Approximate randomization test between the best runs of two experiments.
    Sigtest(SigtestArgs),
    /// Table of evaluated experiments.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SourceKind {
    Semeval,
    Causaltb,
    Eventsl,
    Biocausal,
}

#[derive(clap::Args, Debug)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    kind: SourceKind,
    /// Source file or directory; repeat to merge several.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Output directory for sentences.jsonl and card.json.
    #[arg(long)]
    out: PathBuf,
    /// Keep all causal sentences and this many non-causal ones.
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SUBSAMPLE_SEED)]
    seed: u64,
    /// Dataset name recorded in the card (defaults to the source kind).
    #[arg(long)]
    name: Option<String>,
}

#[derive(clap::Args, Debug)]
struct SplitArgs {
    /// A converted directory or a canonical .jsonl file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SUBSAMPLE_SEED)]
    seed: u64,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.7,0.15,0.15")]
    ratios: String,
    /// Dataset name for the manifest (defaults to the card's name).
    #[arg(long)]
    name: Option<String>,
}

#[derive(clap::Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Repetitions trained in parallel (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
    /// Print every epoch to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(clap::Args, Debug)]
struct EvalArgs {
    /// Output directory of a train command.
    #[arg(long)]
    runs: PathBuf,
    /// Split directory (defaults to the experiment's dataset).
    #[arg(long)]
    split: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct SigtestArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value = "f1")]
    metric: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = ART_ITERATIONS)]
    iterations: usize,
    /// Also write the result as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct ReportArgs {
    /// Evaluated experiment directories.
    #[arg(required = true)]
    dirs: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Validation metrics of one repetition, as written to `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub model: ModelKind,
    /// Epoch whose parameters were kept (neural models only).
    pub best_epoch: Option<usize>,
    pub val_f1: f64,
    pub validation: MetricsReport,
}

/// Runs the command line in `args` (program name first) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Convert(a) => cmd_convert(a, out),
        Command::Split(a) => cmd_split(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Sigtest(a) => cmd_sigtest(a, out),
        Command::Report(a) => cmd_report(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Validation(msgs) => {
                    for m in msgs {
                        let _ = writeln!(err, "error: {m}");
                    }
                }
                CliError::Runtime(m) => {
                    let _ = writeln!(err, "error: {m}");
                }
            }
            e.exit_code()
        }
    }
}

fn say(out: &mut dyn Write, line: impl Display) -> CliResult<()> {
    writeln!(out, "{line}").map_err(runtime)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let bytes = std::fs::read(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn cmd_convert(a: ConvertArgs, out: &mut dyn Write) -> CliResult<()> {
    let missing: Vec<String> = a
        .inputs
        .iter()
        .filter(|p| !p.exists())
        .map(|p| format!("input {} does not exist", p.display()))
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Validation(missing));
    }
    let mut sents: Vec<LabeledSentence> = Vec::new();
    for input in &a.inputs {
        let parsed = match a.kind {
            SourceKind::Semeval => corpus::parse_semeval(input),
            SourceKind::Causaltb => corpus::parse_causal_timebank(input),
            SourceKind::Eventsl => corpus::parse_event_storyline(input),
            SourceKind::Biocausal => corpus::parse_biocausal(input),
        }
        .map_err(runtime)?;
        sents.extend(parsed);
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = sents.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(runtime(format!("duplicate sentence id {:?} across inputs", dup.id)));
    }
    let name = a.name.clone().unwrap_or_else(|| {
        match a.kind {
            SourceKind::Semeval => "semeval",
            SourceKind::Causaltb => "causaltb",
            SourceKind::Eventsl => "eventsl",
            SourceKind::Biocausal => "biocausal",
        }
        .to_string()
    });
    if let Some(target) = a.subsample {
        sents = subsample_negatives(&sents, target, a.seed).map_err(runtime)?;
    }
    let mut card = DatasetCard::from_sentences(name, &sents);
    if a.subsample.is_some() {
        card.subsample_target = a.subsample;
        card.subsample_seed = Some(a.seed);
    }
    create_dir(&a.out)?;
    write_canonical(&sents, a.out.join(SENTENCES_FILE)).map_err(runtime)?;
    write_json(&a.out.join(CARD_FILE), &card)?;
    say(out, format_args!("{} total, {} causal", card.total(), card.n_causal))
}

fn parse_ratios(s: &str) -> CliResult<SplitRatios> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(format!("ratios {s:?}: {e}")))?;
    let [train, validation, test] = parts[..] else {
        return Err(invalid(format!("ratios {s:?}: expected three comma-separated numbers")));
    };
    SplitRatios::new(train, validation, test).map_err(|e| invalid(e.to_string()))
}

fn cmd_split(a: SplitArgs, out: &mut dyn Write) -> CliResult<()> {
    let ratios = parse_ratios(&a.ratios)?;
    let (file, card_path) = if a.input.is_dir() {
        (a.input.join(SENTENCES_FILE), Some(a.input.join(CARD_FILE)))
    } else {
        (a.input.clone(), None)
    };
    if !file.is_file() {
        return Err(invalid(format!("input {} does not exist", file.display())));
    }
    let name = match (&a.name, card_path.filter(|p| p.is_file())) {
        (Some(n), _) => Some(n.clone()),
        (None, Some(p)) => Some(read_json::<DatasetCard>(&p)?.name),
        (None, None) => None,
    };
    let sents = read_canonical(&file).map_err(runtime)?;
    let split = stratified_split(&sents, ratios, a.seed).map_err(runtime)?;
    write_split(&split, &a.out, name.as_deref()).map_err(runtime)?;
    for (part, s) in [("train", &split.train), ("validation", &split.validation), ("test", &split.test)] {
        let (c, n) = corpus::class_counts(s);
        say(out, format_args!("{part}: {} total, {c} causal", c + n))?;
    }
    Ok(())
}

fn load_vectors(cfg: &ExperimentConfig) -> CliResult<(EmbeddingMatrix, Option<ContextualVectors>)> {
    let path = cfg.embeddings.as_ref().ok_or_else(|| invalid("embeddings are required"))?;
    let matrix = load_word2vec(path, cfg.embeddings_format.into()).map_err(runtime)?;
    let ctx = match &cfg.contextual {
        Some(p) => Some(ContextualVectors::read(p).map_err(runtime)?),
        None => None,
    };
    Ok((matrix, ctx))
}

fn run_dir(output: &Path, seed: u64) -> PathBuf {
    output.join(RUNS_DIR).join(seed.to_string())
}

fn write_history(path: &Path, lines: &[String]) -> CliResult<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

struct RunLine {
    seed: u64,
    best_epoch: Option<usize>,
    val_f1: f64,
}

fn train_neural<T: Real>(
    cfg: &ExperimentConfig,
    seed: u64,
    train_set: &[Example],
    validation: &[Example],
    verbose: bool,
) -> CliResult<RunLine> {
    let config = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let outcome = train::<T>(train_set, validation, &config, |r: &EpochRecord| {
        if verbose {
            eprintln!(
                "seed {seed} epoch {:>3}: lr {:.6} train loss {:.4} val loss {:.4} val F1 {:.2}",
                r.epoch, r.lr, r.train_loss, r.val_loss, r.val_f1
            );
        }
    })
    .map_err(|e| runtime(format!("seed {seed}: {e}")))?;
    let dir = run_dir(&cfg.output, seed);
    create_dir(&dir)?;
    let params = outcome.params.cast::<f32>();
    let preds = infer(&params, validation).map_err(runtime)?;
    save_checkpoint(
        &Checkpoint {
            params,
            config,
            trained_f64: cfg.precision == Precision::F64,
        },
        dir.join(NEURAL_CHECKPOINT),
    )
    .map_err(runtime)?;
    let lines: Vec<String> = outcome
        .history
        .iter()
        .map(|r| serde_json::to_string(r).expect("history serializes"))
        .collect();
    write_history(&dir.join(HISTORY_FILE), &lines)?;
    let validation_report = evaluate(&preds, DEFAULT_THRESHOLD).map_err(runtime)?;
    write_json(
        &dir.join(METRICS_FILE),
        &RunMetrics {
            seed,
            model: cfg.model,
            best_epoch: Some(outcome.best_epoch),
            val_f1: validation_report.f1,
            validation: validation_report.clone(),
        },
    )?;
    Ok(RunLine {
        seed,
        best_epoch: Some(outcome.best_epoch),
        val_f1: validation_report.f1,
    })
}

fn lr_predictions(bundle: &LrBundle, sents: &[LabeledSentence]) -> CliResult<PredictionSet> {
    let records = sents
        .iter()
        .map(|s| {
            Ok(PredictionRecord {
                id: s.id.clone(),
                probability: bundle.predict(&s.text).map_err(|e| runtime(format!("{}: {e}", s.id)))?,
                gold: s.label.as_target(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    PredictionSet::new(records).map_err(runtime)
}

fn train_lr(cfg: &ExperimentConfig, seed: u64, split: &corpus::CorpusSplit) -> CliResult<RunLine> {
    let bundle = LrBundle::fit(&split.train, cfg.l2, cfg.max_iters, cfg.tol).map_err(runtime)?;
    let dir = run_dir(&cfg.output, seed);
    create_dir(&dir)?;
    bundle.save(dir.join(LR_CHECKPOINT)).map_err(runtime)?;
    write_history(
        &dir.join(HISTORY_FILE),
        &[serde_json::to_string(&bundle.stats).expect("stats serialize")],
    )?;
    let report = evaluate(&lr_predictions(&bundle, &split.validation)?, DEFAULT_THRESHOLD).map_err(runtime)?;
    write_json(
        &dir.join(METRICS_FILE),
        &RunMetrics {
            seed,
            model: cfg.model,
            best_epoch: None,
            val_f1: report.f1,
            validation: report.clone(),
        },
    )?;
    Ok(RunLine {
        seed,
        best_epoch: None,
        val_f1: report.f1,
    })
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| invalid(format!("config {}: {e}", a.config.display())))?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let mut cfg = parse_config(&text, base).map_err(CliError::Validation)?;
    if let Some(w) = a.workers {
        if w == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        cfg.workers = w;
    }
    let (split, _) = read_split(&cfg.dataset).map_err(runtime)?;
    create_dir(&cfg.output.join(RUNS_DIR))?;
    write_json(&cfg.output.join(EXPERIMENT_FILE), &cfg)?;

    let seeds: Vec<u64> = (0..cfg.repetitions as u64).map(|k| cfg.seed + k).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(runtime)?;
    let results: Vec<CliResult<RunLine>> = if cfg.model.is_neural() {
        let (matrix, ctx) = load_vectors(&cfg)?;
        let train_set = prepare_examples(&split.train, &matrix, ctx.as_ref()).map_err(runtime)?;
        let validation = prepare_examples(&split.validation, &matrix, ctx.as_ref()).map_err(runtime)?;
        drop(ctx);
        pool.install(|| {
            seeds
                .par_iter()
                .map(|&seed| match cfg.precision {
                    Precision::F32 => train_neural::<f32>(&cfg, seed, &train_set, &validation, a.verbose),
                    Precision::F64 => train_neural::<f64>(&cfg, seed, &train_set, &validation, a.verbose),
                })
                .collect()
        })
    } else {
        pool.install(|| seeds.par_iter().map(|&seed| train_lr(&cfg, seed, &split)).collect())
    };
    for r in results {
        let line = r?;
        match line.best_epoch {
            Some(e) => say(
                out,
                format_args!("seed {}: validation F1 {:.2} (epoch {e})", line.seed, line.val_f1),
            )?,
            None => say(out, format_args!("seed {}: validation F1 {:.2}", line.seed, line.val_f1))?,
        }
    }
    Ok(())
}

/// Run directories under `<output>/runs`, ordered by seed.
fn list_runs(output: &Path) -> CliResult<Vec<(u64, PathBuf)>> {
    let runs = output.join(RUNS_DIR);
    let entries = std::fs::read_dir(&runs).map_err(|e| invalid(format!("{}: {e}", runs.display())))?;
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(runtime)?;
        if let Some(seed) = entry.file_name().to_str().and_then(|s| s.parse::<u64>().ok()) {
            if entry.path().is_dir() {
                found.push((seed, entry.path()));
            }
        }
    }
    if found.is_empty() {
        return Err(invalid(format!("no runs under {}", runs.display())));
    }
    found.sort();
    Ok(found)
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let exp_path = a.runs.join(EXPERIMENT_FILE);
    if !exp_path.is_file() {
        return Err(invalid(format!("{} not found; is this a train output directory?", exp_path.display())));
    }
    let cfg: ExperimentConfig = read_json(&exp_path)?;
    let split_dir = a.split.clone().unwrap_or_else(|| cfg.dataset.clone());
    let (split, _) = read_split(&split_dir).map_err(runtime)?;
    let runs = list_runs(&a.runs)?;

    let test_examples = if cfg.model.is_neural() {
        let (matrix, ctx) = load_vectors(&cfg)?;
        Some(prepare_examples(&split.test, &matrix, ctx.as_ref()).map_err(runtime)?)
    } else {
        None
    };

    let mut reports = Vec::with_capacity(runs.len());
    for (seed, dir) in &runs {
        let preds = match &test_examples {
            Some(examples) => {
                let path = dir.join(NEURAL_CHECKPOINT);
                if !path.is_file() {
                    return Err(runtime(format!("missing checkpoint {}", path.display())));
                }
                let ck = load_checkpoint(&path).map_err(runtime)?;
                infer(&ck.params, examples).map_err(|e| runtime(format!("{}: {e}", path.display())))?
            }
            None => {
                let path = dir.join(LR_CHECKPOINT);
                if !path.is_file() {
                    return Err(runtime(format!("missing checkpoint {}", path.display())));
                }
                lr_predictions(&LrBundle::load(&path).map_err(runtime)?, &split.test)?
            }
        };
        preds.write_jsonl(dir.join(PREDICTIONS_FILE)).map_err(runtime)?;
        let report = evaluate(&preds, DEFAULT_THRESHOLD).map_err(runtime)?;
        write_json(&dir.join(TEST_METRICS_FILE), &report)?;
        say(
            out,
            format_args!(
                "seed {seed}: P {:.2} R {:.2} F1 {:.2} AUC {:.2}",
                report.precision, report.recall, report.f1, report.auc_pr
            ),
        )?;
        reports.push(report);
    }
    if reports.len() >= 2 {
        let summary = aggregate(&reports).map_err(runtime)?;
        let name = system_name(&a.runs);
        let table = format_table(&[(name, summary.clone())]);
        write_json(&a.runs.join(SUMMARY_FILE), &summary)?;
        std::fs::write(a.runs.join(SUMMARY_TABLE), &table).map_err(runtime)?;
        write!(out, "{table}").map_err(runtime)?;
    }
    Ok(())
}

fn system_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

struct Side {
    seed: u64,
    val_f1: f64,
    predictions: PredictionSet,
}

fn best_side(dir: &Path) -> CliResult<Side> {
    let runs = list_runs(dir)?;
    let mut scores = Vec::with_capacity(runs.len());
    for (_, run) in &runs {
        let path = run.join(METRICS_FILE);
        if !path.is_file() {
            return Err(invalid(format!("missing {}", path.display())));
        }
        let m: RunMetrics = read_json(&path)?;
        scores.push(RunScore {
            seed: m.seed,
            val_f1: m.val_f1,
        });
    }
    let best = select_best_run(&scores).map_err(runtime)?;
    let path = runs[best].1.join(PREDICTIONS_FILE);
    if !path.is_file() {
        return Err(invalid(format!("missing {}; run eval first", path.display())));
    }
    Ok(Side {
        seed: scores[best].seed,
        val_f1: scores[best].val_f1,
        predictions: PredictionSet::read_jsonl(&path).map_err(runtime)?,
    })
}

fn cmd_sigtest(a: SigtestArgs, out: &mut dyn Write) -> CliResult<()> {
    let metric: Metric = a.metric.parse().map_err(invalid)?;
    if a.iterations == 0 {
        return Err(invalid("iterations must be positive"));
    }
    let side_a = best_side(&a.a)?;
    let side_b = best_side(&a.b)?;
    let result = approx_randomization(
        &side_a.predictions,
        &side_b.predictions,
        metric,
        a.iterations,
        SWAP_FRACTION,
        a.seed,
    )
    .map_err(runtime)?;
    for (label, dir, side, value) in [("A", &a.a, &side_a, result.metric_a), ("B", &a.b, &side_b, result.metric_b)] {
        say(
            out,
            format_args!(
                "{label}: {} run {} (validation F1 {:.2}), test {metric} {value:.2}",
                dir.display(),
                side.seed,
                side.val_f1
            ),
        )?;
    }
    let marker = significance_marker(result.p_value);
    say(out, format_args!("p = {:.4} {marker}", result.p_value).to_string().trim_end())?;
    if let Some(path) = &a.json {
        write_json(path, &result)?;
    }
    Ok(())
}

fn cmd_report(a: ReportArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut rows: Vec<(String, RepetitionSummary)> = Vec::with_capacity(a.dirs.len());
    let mut missing = Vec::new();
    for dir in &a.dirs {
        let path = dir.join(SUMMARY_FILE);
        if path.is_file() {
            rows.push((system_name(dir), read_json(&path)?));
        } else {
            missing.push(format!("{} not found; run eval first (needs at least 2 runs)", path.display()));
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Validation(missing));
    }
    write!(out, "{}", format_table(&rows)).map_err(runtime)?;
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path).map_err(runtime)?;
        w.write_record(["system", "runs", "p_mean", "p_std", "r_mean", "r_std", "f1_mean", "f1_std", "auc_mean", "auc_std"])
            .map_err(runtime)?;
        for (name, s) in &rows {
            let mut rec = vec![name.clone(), s.count.to_string()];
            for m in [s.precision, s.recall, s.f1, s.auc_pr] {
                rec.push(format!("{:.4}", m.mean));
                rec.push(format!("{:.4}", m.std));
            }
            w.write_record(&rec).map_err(runtime)?;
        }
        w.flush().map_err(runtime)?;
    }
    Ok(())
}
