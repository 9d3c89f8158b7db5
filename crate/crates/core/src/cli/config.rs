//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the directory holding the config file. Required keys:
//! `dataset` (a split directory), `model`, and `embeddings` for the neural
//! models. Everything else falls back to the training defaults, with the batch
//! size chosen from the dataset name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{DEFAULT_L2, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::corpus::{SplitManifest, MANIFEST_FILE};
use crate::embeddings::Word2VecFormat;
use crate::neuralnet::{ResetPlacement, TrainConfig};

pub const DEFAULT_REPETITIONS: usize = 10;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUTPUT: &str = "results";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Bigruatt,
    BigruattCtx,
    LrNgrams,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bigruatt" => Ok(ModelKind::Bigruatt),
            "bigruatt_ctx" => Ok(ModelKind::BigruattCtx),
            "lr_ngrams" => Ok(ModelKind::LrNgrams),
            other => Err(format!("unknown model {other:?} (bigruatt|bigruatt_ctx|lr_ngrams)")),
        }
    }
}

impl ModelKind {
    pub fn is_neural(self) -> bool {
        self != ModelKind::LrNgrams
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!("unknown precision {other:?} (f32|f64)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorFormat {
    Text,
    Binary,
}

impl From<VectorFormat> for Word2VecFormat {
    fn from(f: VectorFormat) -> Self {
        match f {
            VectorFormat::Text => Word2VecFormat::Text,
            VectorFormat::Binary => Word2VecFormat::Binary,
        }
    }
}

/// A validated experiment. Serialized next to the runs so `eval` can find
/// the data and vectors again.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub dataset_name: Option<String>,
    pub model: ModelKind,
    pub embeddings: Option<PathBuf>,
    pub embeddings_format: VectorFormat,
    pub contextual: Option<PathBuf>,
    pub repetitions: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub workers: usize,
    pub precision: Precision,
    pub train: TrainConfig,
    pub l2: f64,
    pub max_iters: usize,
    pub tol: f64,
}

const KEYS: &[&str] = &[
    "dataset",
    "dataset_name",
    "model",
    "embeddings",
    "embeddings_format",
    "contextual",
    "repetitions",
    "seed",
    "output",
    "workers",
    "precision",
    "epochs",
    "batch_size",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "lr_decay",
    "lr_decay_every",
    "clip_norm",
    "dropout",
    "hidden",
    "depth",
    "reset",
    "l2",
    "max_iters",
    "tol",
];

struct Fields {
    map: BTreeMap<String, (usize, String)>,
    errors: Vec<String>,
}

impl Fields {
    fn take_str(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        let (line, raw) = self.map.remove(key)?;
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("line {line}: {key}: {e}"));
                None
            }
        }
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = PathBuf::from(p);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

/// Parses and validates; every problem found is reported.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig, Vec<String>> {
    let mut fields = Fields {
        map: BTreeMap::new(),
        errors: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            fields.errors.push(format!("line {}: expected key = value", i + 1));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            fields.errors.push(format!("line {}: unknown key {key:?}", i + 1));
        } else if fields.map.insert(key.to_string(), (i + 1, value.to_string())).is_some() {
            fields.errors.push(format!("line {}: duplicate key {key:?}", i + 1));
        }
    }

    let dataset = fields.take_str("dataset").map(|p| resolve(base, &p));
    let model: Option<ModelKind> = fields.take("model");
    let model_given = model.is_some() || fields.errors.iter().any(|e| e.contains(": model:"));
    let embeddings = fields.take_str("embeddings").map(|p| resolve(base, &p));
    let embeddings_format = match fields.take_str("embeddings_format") {
        Some(f) => match f.as_str() {
            "text" | "txt" => Some(VectorFormat::Text),
            "binary" | "bin" => Some(VectorFormat::Binary),
            other => {
                fields.errors.push(format!("embeddings_format: unknown format {other:?} (text|binary)"));
                None
            }
        },
        None => Some(match embeddings.as_ref().and_then(|p| p.extension()) {
            Some(ext) if ext == "bin" => VectorFormat::Binary,
            _ => VectorFormat::Text,
        }),
    };
    let contextual = fields.take_str("contextual").map(|p| resolve(base, &p));
    let mut dataset_name = fields.take_str("dataset_name");
    let repetitions = fields.take("repetitions").unwrap_or(DEFAULT_REPETITIONS);
    let seed = fields.take("seed").unwrap_or(DEFAULT_SEED);
    let output = resolve(base, &fields.take_str("output").unwrap_or_else(|| DEFAULT_OUTPUT.into()));
    let workers = fields.take("workers").unwrap_or(1usize);
    let precision = fields.take("precision").unwrap_or(Precision::F32);

    let mut train = TrainConfig::default();
    let batch_size: Option<usize> = fields.take("batch_size");
    macro_rules! set {
        ($field:expr, $key:literal) => {
            if let Some(v) = fields.take($key) {
                $field = v;
            }
        };
    }
    set!(train.epochs, "epochs");
    set!(train.lr, "lr");
    set!(train.adam.beta1, "beta1");
    set!(train.adam.beta2, "beta2");
    set!(train.adam.eps, "eps");
    set!(train.lr_decay, "lr_decay");
    set!(train.lr_decay_every, "lr_decay_every");
    set!(train.clip_norm, "clip_norm");
    set!(train.dropout, "dropout");
    set!(train.hidden, "hidden");
    set!(train.depth, "depth");
    if let Some(r) = fields.take::<ResetPlacement>("reset") {
        train.reset = r;
    }
    let l2 = fields.take("l2").unwrap_or(DEFAULT_L2);
    let max_iters = fields.take("max_iters").unwrap_or(DEFAULT_MAX_ITERS);
    let tol = fields.take("tol").unwrap_or(DEFAULT_TOL);
    let mut errors = fields.errors;

    match &dataset {
        None => errors.push("missing required key dataset".into()),
        Some(d) => {
            let manifest = d.join(MANIFEST_FILE);
            match std::fs::read(&manifest) {
                Err(_) => errors.push(format!("dataset {} has no {MANIFEST_FILE}", d.display())),
                Ok(bytes) => match serde_json::from_slice::<SplitManifest>(&bytes) {
                    Ok(m) => {
                        if dataset_name.is_none() {
                            dataset_name = m.name;
                        }
                    }
                    Err(e) => errors.push(format!("{}: {e}", manifest.display())),
                },
            }
        }
    }
    if model.is_none() && !model_given {
        errors.push("missing required key model".into());
    }
    if let Some(m) = model {
        if m.is_neural() {
            match &embeddings {
                None => errors.push(format!("model {m:?} needs embeddings").to_lowercase()),
                Some(p) if !p.is_file() => errors.push(format!("embeddings file {} does not exist", p.display())),
                _ => {}
            }
        }
        match (m, &contextual) {
            (ModelKind::BigruattCtx, None) => errors.push("model bigruatt_ctx needs contextual".into()),
            (ModelKind::BigruattCtx, Some(p)) if !p.is_file() => {
                errors.push(format!("contextual file {} does not exist", p.display()))
            }
            (ModelKind::Bigruatt | ModelKind::LrNgrams, Some(_)) => {
                errors.push("contextual is only used by model bigruatt_ctx".into())
            }
            _ => {}
        }
    }
    match batch_size.or_else(|| dataset_name.as_deref().and_then(TrainConfig::default_batch_size)) {
        Some(b) => train.batch_size = b,
        None if model.is_some_and(ModelKind::is_neural) => errors.push(format!(
            "batch_size is required: no default for dataset {:?}",
            dataset_name.as_deref().unwrap_or("(unnamed)")
        )),
        None => {}
    }
    if repetitions == 0 {
        errors.push("repetitions must be at least 1".into());
    }
    if workers == 0 {
        errors.push("workers must be at least 1".into());
    }
    if model.is_some_and(ModelKind::is_neural) {
        errors.extend(train.problems());
    } else if model.is_some() {
        if !(l2 >= 0.0 && l2.is_finite()) {
            errors.push("l2 must be non-negative".into());
        }
        if !(tol > 0.0) {
            errors.push("tol must be positive".into());
        }
        if max_iters == 0 {
            errors.push("max_iters must be positive".into());
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(ExperimentConfig {
        dataset: dataset.expect("checked"),
        dataset_name,
        model: model.expect("checked"),
        embeddings,
        embeddings_format: embeddings_format.expect("checked"),
        contextual,
        repetitions,
        seed,
        output,
        workers,
        precision,
        train,
        l2,
        max_iters,
        tol,
    })
}
