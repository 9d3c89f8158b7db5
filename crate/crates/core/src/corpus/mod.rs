//! Source corpora, canonical sentence records, negative subsampling and
//! stratified splitting.
//!
//! Every parser maps a native distribution layout onto [`LabeledSentence`]
//! records; everything downstream (splitting, training, evaluation) only sees
//! the canonical form.

mod biocausal;
mod canonical;
mod catxml;
mod semeval;
mod split;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use biocausal::{parse_biocausal, parse_biocausal_with, BioCausalLayout};
pub use canonical::{
    read_canonical, read_split, write_canonical, write_split, SplitManifest, MANIFEST_FILE,
    TEST_FILE, TRAIN_FILE, VALIDATION_FILE,
};
pub use catxml::{
    parse_causal_timebank, parse_causal_timebank_with, parse_event_storyline, TimebankRule,
};
pub use semeval::{parse_semeval, parse_semeval_str};
pub use split::{stratified_split, subsample_negatives, CorpusSplit, SplitRatios};

/// Subsampling seed used when none is given.
pub const DEFAULT_SUBSAMPLE_SEED: u64 = 13;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: record {record}: {message}")]
    Record {
        file: String,
        record: usize,
        message: String,
    },
    #[error("{doc}: {message}")]
    Document { doc: String, message: String },
    #[error("{file}: row {row}: {message}")]
    Row {
        file: String,
        row: usize,
        message: String,
    },
    #[error("requested {target} negatives but only {available} are available")]
    NotEnoughNegatives { target: usize, available: usize },
    #[error("class {label} has {count} sentences; at least 3 are needed to populate every split")]
    ClassTooSmall { label: Label, count: usize },
    #[error("duplicate sentence id {0:?}")]
    DuplicateId(String),
    #[error("invalid split manifest: {0}")]
    Manifest(String),
    #[error("{0}")]
    Invalid(String),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Causal,
    NonCausal,
}

impl Label {
    pub fn is_causal(self) -> bool {
        self == Label::Causal
    }

    pub fn from_causal(causal: bool) -> Self {
        if causal {
            Label::Causal
        } else {
            Label::NonCausal
        }
    }

    /// 1.0 for causal, 0.0 otherwise.
    pub fn as_target(self) -> u8 {
        u8::from(self.is_causal())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Causal => "causal",
            Label::NonCausal => "non_causal",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Semeval,
    Causaltb,
    Eventsl,
    Biocausal,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Semeval => "semeval",
            Source::Causaltb => "causaltb",
            Source::Eventsl => "eventsl",
            Source::Biocausal => "biocausal",
        })
    }
}

/// One sentence with its binary causal label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledSentence {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub source: Source,
}

impl LabeledSentence {
    /// Builds a record, trimming the text. Fails when nothing is left.
    pub fn new(
        id: impl Into<String>,
        text: &str,
        label: Label,
        source: Source,
    ) -> std::result::Result<Self, String> {
        let text = text.trim();
        if text.is_empty() {
            return Err("empty sentence text".to_string());
        }
        Ok(LabeledSentence {
            id: id.into(),
            text: text.to_string(),
            label,
            source,
        })
    }
}

/// Class counts for a built dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCard {
    pub name: String,
    pub n_causal: usize,
    pub n_noncausal: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample_target: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample_seed: Option<u64>,
}

impl DatasetCard {
    pub fn from_sentences(name: impl Into<String>, sents: &[LabeledSentence]) -> Self {
        let (n_causal, n_noncausal) = class_counts(sents);
        DatasetCard {
            name: name.into(),
            n_causal,
            n_noncausal,
            subsample_target: None,
            subsample_seed: None,
        }
    }

    pub fn total(&self) -> usize {
        self.n_causal + self.n_noncausal
    }
}

/// `(causal, non_causal)` counts.
pub fn class_counts(sents: &[LabeledSentence]) -> (usize, usize) {
    let causal = sents.iter().filter(|s| s.label.is_causal()).count();
    (causal, sents.len() - causal)
}
