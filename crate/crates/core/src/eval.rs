//! Classification metrics, multi-seed aggregation and the approximate
//! randomization significance test.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const ART_ITERATIONS: usize = 10_000;
pub const SWAP_FRACTION: f64 = 0.5;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;
/// Slack in `δ* ≥ δ` so that permutations reproducing the observed difference
/// up to rounding still count.
const DELTA_TOLERANCE: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid predictions: {0}")]
    Invalid(String),
    #[error("AUC-PR is undefined without positive gold labels")]
    NoPositives,
    #[error("prediction sets are not aligned: {0}")]
    Misaligned(String),
    #[error("need at least {need} runs, got {got}")]
    TooFewRuns { need: usize, got: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub id: String,
    pub probability: f64,
    pub gold: u8,
}

/// Scored sentences with unique ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictionSet {
    records: Vec<PredictionRecord>,
}

impl PredictionSet {
    pub fn new(records: Vec<PredictionRecord>) -> std::result::Result<Self, String> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(format!("duplicate id {}", r.id));
            }
            if !(0.0..=1.0).contains(&r.probability) {
                return Err(format!("{}: probability {} outside [0, 1]", r.id, r.probability));
            }
            if r.gold > 1 {
                return Err(format!("{}: gold label {} is not 0 or 1", r.id, r.gold));
            }
        }
        Ok(PredictionSet { records })
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records sorted by id.
    fn sorted(&self) -> Vec<&PredictionRecord> {
        let mut v: Vec<&PredictionRecord> = self.records.iter().collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| EvalError::Io {
            path: path.to_path_buf(),
            source: e,
        };
        let mut w = BufWriter::new(std::fs::File::create(path).map_err(io)?);
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(|e| io(e.into()))?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let io = |e| EvalError::Io {
            path: path.to_path_buf(),
            source: e,
        };
        let reader = BufReader::new(std::fs::File::open(path).map_err(io)?);
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line).map_err(|e| EvalError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        PredictionSet::new(records).map_err(|m| EvalError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: m,
        })
    }
}

/// Percentages at a fixed threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn prf1_slices(probs: &[f64], gold: &[u8], threshold: f64) -> Prf1 {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&p, &g) in probs.iter().zip(gold) {
        match (p >= threshold, g == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Prf1 {
        precision: 100.0 * precision,
        recall: 100.0 * recall,
        f1: 100.0 * f1,
    }
}

/// Precision, recall and F1 of the causal class with `p ≥ threshold`
/// predicted causal. Undefined ratios count as 0.
pub fn prf1(preds: &PredictionSet, threshold: f64) -> Prf1 {
    let probs: Vec<f64> = preds.records.iter().map(|r| r.probability).collect();
    let gold: Vec<u8> = preds.records.iter().map(|r| r.gold).collect();
    prf1_slices(&probs, &gold, threshold)
}

/// Average precision over `probs` sorted descending; ties go to the lower
/// index first, so callers pass records in id order.
fn auc_pr_slices(probs: &[f64], gold: &[u8]) -> Result<f64> {
    let n_pos = gold.iter().filter(|&&g| g == 1).count();
    if n_pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut tp = 0usize;
    let mut sum = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if gold[i] == 1 {
            tp += 1;
            sum += tp as f64 / (k + 1) as f64;
        }
    }
    Ok(100.0 * sum / n_pos as f64)
}

/// Step-form average precision in `[0, 100]`: records ranked by descending
/// probability, ties broken by ascending id.
pub fn auc_pr(preds: &PredictionSet) -> Result<f64> {
    let sorted = preds.sorted();
    let probs: Vec<f64> = sorted.iter().map(|r| r.probability).collect();
    let gold: Vec<u8> = sorted.iter().map(|r| r.gold).collect();
    auc_pr_slices(&probs, &gold)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc_pr: f64,
    pub threshold: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

pub fn evaluate(preds: &PredictionSet, threshold: f64) -> Result<MetricsReport> {
    let m = prf1(preds, threshold);
    let n_pos = preds.records.iter().filter(|r| r.gold == 1).count();
    Ok(MetricsReport {
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        auc_pr: auc_pr(preds)?,
        threshold,
        n_pos,
        n_neg: preds.len() - n_pos,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation. Values are summed in sorted order
    /// so the result does not depend on input order.
    fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        sq.sort_by(f64::total_cmp);
        let std = (sq.iter().sum::<f64>() / (n - 1.0)).sqrt();
        MeanStd { mean, std }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSummary {
    pub count: usize,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub auc_pr: MeanStd,
    pub runs: Vec<MetricsReport>,
}

pub fn aggregate(runs: &[MetricsReport]) -> Result<RepetitionSummary> {
    if runs.len() < 2 {
        return Err(EvalError::TooFewRuns { need: 2, got: runs.len() });
    }
    let stat = |f: fn(&MetricsReport) -> f64| MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(RepetitionSummary {
        count: runs.len(),
        precision: stat(|r| r.precision),
        recall: stat(|r| r.recall),
        f1: stat(|r| r.f1),
        auc_pr: stat(|r| r.auc_pr),
        runs: runs.to_vec(),
    })
}

/// Plain-text table, one row per system, cells `mean ± std`.
pub fn format_table(rows: &[(String, RepetitionSummary)]) -> String {
    let width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>14}  {:>14}  {:>14}  {:>14}",
        "system", "P", "R", "F1", "AUC"
    );
    for (name, s) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>14}  {:>14}  {:>14}  {:>14}",
            name,
            s.precision.to_string(),
            s.recall.to_string(),
            s.f1.to_string(),
            s.auc_pr.to_string()
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    F1,
    Precision,
    Recall,
    AucPr,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Metric::F1),
            "precision" | "p" => Ok(Metric::Precision),
            "recall" | "r" => Ok(Metric::Recall),
            "auc" | "auc_pr" | "auc-pr" => Ok(Metric::AucPr),
            other => Err(format!("unknown metric {other:?} (f1|precision|recall|auc)")),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::F1 => "f1",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::AucPr => "auc_pr",
        })
    }
}

impl Metric {
    /// Records must be in id order (the AUC tie rule depends on it).
    fn on(self, probs: &[f64], gold: &[u8]) -> Result<f64> {
        Ok(match self {
            Metric::F1 => prf1_slices(probs, gold, DEFAULT_THRESHOLD).f1,
            Metric::Precision => prf1_slices(probs, gold, DEFAULT_THRESHOLD).precision,
            Metric::Recall => prf1_slices(probs, gold, DEFAULT_THRESHOLD).recall,
            Metric::AucPr => auc_pr_slices(probs, gold)?,
        })
    }

    pub fn compute(self, preds: &PredictionSet) -> Result<f64> {
        let sorted = preds.sorted();
        let probs: Vec<f64> = sorted.iter().map(|r| r.probability).collect();
        let gold: Vec<u8> = sorted.iter().map(|r| r.gold).collect();
        self.on(&probs, &gold)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub metric: Metric,
    pub metric_a: f64,
    pub metric_b: f64,
    pub observed_delta: f64,
    pub p_value: f64,
    pub iterations: usize,
    pub swap_fraction: f64,
    pub seed: u64,
    pub selection: String,
}

impl SignificanceResult {
    pub fn significant(&self) -> bool {
        self.p_value <= SIGNIFICANCE_LEVEL
    }
}

/// `"*"` when `p ≤ 0.05`, else empty.
pub fn significance_marker(p_value: f64) -> &'static str {
    if p_value <= SIGNIFICANCE_LEVEL {
        "*"
    } else {
        ""
    }
}

/// Aligned (probability A, probability B, gold) triples in id order.
fn align(a: &PredictionSet, b: &PredictionSet) -> Result<(Vec<f64>, Vec<f64>, Vec<u8>)> {
    if a.len() != b.len() {
        return Err(EvalError::Misaligned(format!("{} vs {} records", a.len(), b.len())));
    }
    let (sa, sb) = (a.sorted(), b.sorted());
    let mut gold = Vec::with_capacity(sa.len());
    for (x, y) in sa.iter().zip(&sb) {
        if x.id != y.id {
            return Err(EvalError::Misaligned(format!("id {} has no counterpart {}", x.id, y.id)));
        }
        if x.gold != y.gold {
            return Err(EvalError::Misaligned(format!("gold label of {} differs", x.id)));
        }
        gold.push(x.gold);
    }
    Ok((
        sa.iter().map(|r| r.probability).collect(),
        sb.iter().map(|r| r.probability).collect(),
        gold,
    ))
}

/// Two-tailed paired approximate randomization test.
///
/// Each iteration swaps the two systems' outputs on every sentence
/// independently with probability `swap_fraction`. Iteration `i` draws from
/// stream `i` of a ChaCha8 generator seeded with `seed`, so the iterations can
/// run in any order or in parallel with identical results.
pub fn approx_randomization(
    a: &PredictionSet,
    b: &PredictionSet,
    metric: Metric,
    iterations: usize,
    swap_fraction: f64,
    seed: u64,
) -> Result<SignificanceResult> {
    if iterations == 0 || !(0.0..=1.0).contains(&swap_fraction) {
        return Err(EvalError::Invalid(
            "iterations must be positive and swap_fraction in [0, 1]".into(),
        ));
    }
    let (pa, pb, gold) = align(a, b)?;
    let (ma, mb) = (metric.on(&pa, &gold)?, metric.on(&pb, &gold)?);
    let observed = (ma - mb).abs();

    let hits = (0..iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut xa = pa.clone();
            let mut xb = pb.clone();
            for k in 0..xa.len() {
                if rng.gen::<f64>() < swap_fraction {
                    std::mem::swap(&mut xa[k], &mut xb[k]);
                }
            }
            let delta = (metric.on(&xa, &gold)? - metric.on(&xb, &gold)?).abs();
            Ok(usize::from(delta >= observed - DELTA_TOLERANCE))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();

    Ok(SignificanceResult {
        metric,
        metric_a: ma,
        metric_b: mb,
        observed_delta: observed,
        p_value: (hits + 1) as f64 / (iterations + 1) as f64,
        iterations,
        swap_fraction,
        seed,
        selection: "best validation F1 per system, ties to lowest seed".into(),
    })
}

/// Seed and validation score of one repetition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub seed: u64,
    pub val_f1: f64,
}

/// Index of the run with the highest validation F1; ties go to the lowest seed.
pub fn select_best_run(runs: &[RunScore]) -> Result<usize> {
    runs.iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| x.val_f1.total_cmp(&y.val_f1).then(y.seed.cmp(&x.seed)))
        .map(|(i, _)| i)
        .ok_or(EvalError::TooFewRuns { need: 1, got: 0 })
}
