mod common;

use std::fs;
use std::path::{Path, PathBuf};

use causaldet::cli::run_with;
use causaldet::corpus::DatasetCard;
use causaldet::eval::{MetricsReport, PredictionRecord, PredictionSet, RepetitionSummary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn cli(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("causaldet").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

/// Toy split plus vectors under `dir`, and a config file at `dir/<name>.cfg`.
fn toy_experiment(dir: &Path, name: &str, extra: &str) -> PathBuf {
    if !dir.join("split").exists() {
        common::toy_workspace(dir, 40, 8);
    }
    let cfg = dir.join(format!("{name}.cfg"));
    fs::write(
        &cfg,
        format!(
            "# toy experiment\ndataset = split\nembeddings = vectors.txt\nbatch_size = 8\n\
             epochs = 3\nhidden = 5\noutput = {name}\n{extra}"
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn help_and_usage_errors() {
    let help = cli(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.out.contains("convert"));
    assert_eq!(cli(&["--version"]).code, 0);
    assert_eq!(cli(&[]).code, 1);
    let bad = cli(&["convert", "--kind", "wikipedia", "--input", "x", "--out", "y"]);
    assert_eq!(bad.code, 1);
    assert!(bad.err.contains("wikipedia"));
}

#[test]
fn convert_biocausal_fixture_prints_counts_and_writes_card() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("small.csv");
    fs::write(
        &input,
        "sentence,label\n\"Smoking causes cancer.\",1\n\"IL-6 induces CRP.\",1\n\
         \"Patients were enrolled.\",0\n\"The cohort was followed up.\",0\n",
    )
    .unwrap();
    let before = fs::read(&input).unwrap();
    let out = dir.path().join("bio");
    let r = cli(&["convert", "--kind", "biocausal", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out.trim(), "4 total, 2 causal");
    let card: DatasetCard = serde_json::from_slice(&fs::read(out.join("card.json")).unwrap()).unwrap();
    assert_eq!((card.n_causal, card.n_noncausal), (2, 2));
    assert_eq!(card.name, "biocausal");
    assert_eq!(fs::read(&input).unwrap(), before);

    // idempotent
    let first = fs::read(out.join("sentences.jsonl")).unwrap();
    assert_eq!(cli(&["convert", "--kind", "biocausal", "--input", s(&input), "--out", s(&out)]).code, 0);
    assert_eq!(fs::read(out.join("sentences.jsonl")).unwrap(), first);
}

#[test]
fn convert_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let r = cli(&["convert", "--kind", "biocausal", "--input", s(&missing), "--out", s(dir.path())]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("nope.csv"));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1\t\"no tags here\"\nCause-Effect(e1,e2)\n\n").unwrap();
    let r = cli(&["convert", "--kind", "semeval", "--input", s(&bad), "--out", s(&dir.path().join("o"))]);
    assert_eq!(r.code, 2, "{}", r.err);

    // the same file twice repeats every id
    let ok = dir.path().join("ok.csv");
    fs::write(&ok, "sentence,label\nA causes B.,1\nC and D.,0\n").unwrap();
    let r = cli(&[
        "convert", "--kind", "biocausal", "--input", s(&ok), "--input", s(&ok), "--out", s(&dir.path().join("d")),
    ]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("duplicate"));
}

#[test]
fn split_from_converted_directory() {
    let dir = tempfile::tempdir().unwrap();
    let conv = dir.path().join("conv");
    fs::create_dir(&conv).unwrap();
    causaldet::corpus::write_canonical(&common::toy_corpus(40, 2), conv.join("sentences.jsonl")).unwrap();
    fs::write(conv.join("card.json"), serde_json::to_vec(&json!({"name": "causaltb", "n_causal": 20, "n_noncausal": 20})).unwrap()).unwrap();
    let out = dir.path().join("split");
    let r = cli(&["split", "--input", s(&conv), "--out", s(&out), "--seed", "5"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let (split, manifest) = causaldet::corpus::read_split(&out).unwrap();
    assert_eq!(manifest.name.as_deref(), Some("causaltb"));
    assert_eq!(split.train.len() + split.validation.len() + split.test.len(), 40);
    let again = dir.path().join("split2");
    cli(&["split", "--input", s(&conv), "--out", s(&again), "--seed", "5"]);
    for f in ["train.jsonl", "validation.jsonl", "test.jsonl", "manifest.json"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
    let r = cli(&["split", "--input", s(&conv), "--out", s(&out), "--ratios", "0.5,0.5"]);
    assert_eq!(r.code, 1);
}

#[test]
fn toy_train_run_writes_exactly_three_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(dir.path(), "one", "model = bigruatt\nrepetitions = 1\nseed = 4\n");
    let r = cli(&["train", "--config", s(&cfg)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("seed 4: validation F1"));
    let run = dir.path().join("one/runs/4");
    assert_eq!(files_in(&run), ["checkpoint.bin", "history.jsonl", "metrics.json"]);
    assert_eq!(files_in(&dir.path().join("one/runs")), ["4"]);
    let history = fs::read_to_string(run.join("history.jsonl")).unwrap();
    assert_eq!(history.lines().count(), 3);
}

#[test]
fn config_errors_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(dir.path(), "bad", "model = bigruatt\nrepetitions = 0\nbatch_size = 0\nlr = -1\n");
    // batch_size appears twice in this file
    let r = cli(&["train", "--config", s(&cfg)]);
    assert_eq!(r.code, 1);
    assert!(r.err.lines().count() >= 2, "{}", r.err);

    let cfg = dir.path().join("zero.cfg");
    fs::write(&cfg, "dataset = split\nmodel = bigruatt\nembeddings = vectors.txt\nbatch_size = 0\nrepetitions = 0\n").unwrap();
    let r = cli(&["train", "--config", s(&cfg)]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("batch_size"), "{}", r.err);
    assert!(r.err.contains("repetitions"), "{}", r.err);
    assert!(!dir.path().join("results").exists());

    let r = cli(&["train", "--config", s(&dir.path().join("absent.cfg"))]);
    assert_eq!(r.code, 1);
}

fn read<T: serde::de::DeserializeOwned>(p: &Path) -> T {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

#[test]
fn lr_pipeline_eval_summary_matches_hand_aggregation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(dir.path(), "lr", "model = lr_ngrams\nrepetitions = 3\nl2 = 0.01\n");
    let r = cli(&["train", "--config", s(&cfg), "--workers", "2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(files_in(&dir.path().join("lr/runs/1")), ["checkpoint.json", "history.jsonl", "metrics.json"]);

    let out = dir.path().join("lr");
    let r = cli(&["eval", "--runs", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("±"));

    let summary: RepetitionSummary = read(&out.join("summary.json"));
    let reports: Vec<MetricsReport> = ["1", "2", "3"]
        .iter()
        .map(|seed| read(&out.join("runs").join(seed).join("test_metrics.json")))
        .collect();
    let f1: Vec<f64> = reports.iter().map(|r| r.f1).collect();
    let mean = f1.iter().sum::<f64>() / 3.0;
    let std = (f1.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
    assert!((summary.f1.mean - mean).abs() < 1e-9 && (summary.f1.std - std).abs() < 1e-9);
    // the separable toy corpus is learned perfectly, and LR repetitions agree
    assert_eq!(summary.f1.mean, 100.0);
    assert_eq!(summary.auc_pr.mean, 100.0);
    assert_eq!(summary.f1.std, 0.0);

    let csv = dir.path().join("t.csv");
    let r = cli(&["report", s(&out), "--csv", s(&csv)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("100.00 ± 0.00"));
    assert!(fs::read_to_string(&csv).unwrap().starts_with("system,runs,"));

    // same directory on both sides
    let r = cli(&["sigtest", s(&out), s(&out), "--iterations", "500"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let last = r.out.lines().last().unwrap();
    assert_eq!(last, "p = 1.0000");
}

#[test]
fn neural_eval_with_identical_checkpoints_has_zero_std_and_names_missing_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(dir.path(), "nn", "model = bigruatt\nrepetitions = 2\nprecision = f64\n");
    assert_eq!(cli(&["train", "--config", s(&cfg)]).code, 0);
    let runs = dir.path().join("nn/runs");
    for seed in ["3", "4", "5"] {
        fs::create_dir_all(runs.join(seed)).unwrap();
        fs::copy(runs.join("1/checkpoint.bin"), runs.join(seed).join("checkpoint.bin")).unwrap();
    }
    fs::copy(runs.join("1/checkpoint.bin"), runs.join("2/checkpoint.bin")).unwrap();
    let r = cli(&["eval", "--runs", s(&dir.path().join("nn"))]);
    assert_eq!(r.code, 0, "{}", r.err);
    let summary: RepetitionSummary = read(&dir.path().join("nn/summary.json"));
    assert_eq!(summary.count, 5);
    for m in [summary.precision, summary.recall, summary.f1, summary.auc_pr] {
        assert_eq!(m.std, 0.0);
    }

    fs::remove_file(runs.join("4/checkpoint.bin")).unwrap();
    let r = cli(&["eval", "--runs", s(&dir.path().join("nn"))]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("missing checkpoint") && r.err.contains("4/checkpoint.bin"), "{}", r.err);
}

/// A hand-built experiment directory with one run per seed.
fn fake_side(dir: &Path, runs: &[(u64, f64, &[f64])], gold: &[u8]) {
    for (seed, val_f1, probs) in runs {
        let run = dir.join("runs").join(seed.to_string());
        fs::create_dir_all(&run).unwrap();
        let validation = json!({"precision": 0.0, "recall": 0.0, "f1": val_f1, "auc_pr": 0.0,
                                "threshold": 0.5, "n_pos": 1, "n_neg": 1});
        let metrics = json!({"seed": seed, "model": "lr_ngrams", "best_epoch": null, "val_f1": val_f1,
                             "validation": validation});
        fs::write(run.join("metrics.json"), serde_json::to_vec(&metrics).unwrap()).unwrap();
        let records = probs
            .iter()
            .zip(gold)
            .enumerate()
            .map(|(i, (&p, &g))| PredictionRecord { id: format!("t{i}"), probability: p, gold: g })
            .collect();
        PredictionSet::new(records).unwrap().write_jsonl(run.join("predictions.jsonl")).unwrap();
    }
}

#[test]
fn sigtest_matches_exhaustive_p_on_best_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gold: Vec<u8> = (0..10).map(|i| u8::from(i % 3 != 0)).collect();
    let best_a: Vec<f64> = gold.iter().map(|&g| if g == 1 { rng.gen_range(0.4..1.0) } else { rng.gen_range(0.0..0.6) }).collect();
    let best_b: Vec<f64> = (0..10).map(|_| rng.gen()).collect();
    let decoy = vec![0.5; 10];
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    // the selected runs are seed 2 on A (highest validation F1) and seed 7 on B (tie, lowest seed)
    fake_side(&a, &[(1, 60.0, &decoy), (2, 80.0, &best_a), (3, 70.0, &decoy)], &gold);
    fake_side(&b, &[(7, 50.0, &best_b), (9, 50.0, &decoy)], &gold);

    let r = cli(&["sigtest", s(&a), s(&b), "--metric", "f1", "--seed", "3"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("run 2") && r.out.contains("run 7"), "{}", r.out);
    let last = r.out.lines().last().unwrap();
    let p: f64 = last.trim_start_matches("p = ").trim_end_matches(" *").parse().unwrap();
    let exact = common::exhaustive_art(&best_a, &best_b, &gold);
    assert!((p - exact).abs() <= 0.02, "printed {p}, exhaustive {exact}");
    assert_eq!(last.ends_with('*'), p <= 0.05);

    // sides scored on different test sets
    let c = dir.path().join("c");
    fake_side(&c, &[(1, 50.0, &best_b[..9])], &gold[..9]);
    let r = cli(&["sigtest", s(&a), s(&c)]);
    assert_eq!(r.code, 2);

    let r = cli(&["sigtest", s(&a), s(&b), "--metric", "accuracy"]);
    assert_eq!(r.code, 1);
}

#[test]
fn report_needs_evaluated_directories() {
    let dir = tempfile::tempdir().unwrap();
    let r = cli(&["report", s(dir.path())]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("summary.json"));
}
