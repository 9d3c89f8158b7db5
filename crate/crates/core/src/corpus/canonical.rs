//! Canonical corpus files: one JSON object per line with exactly the fields
//! `id`, `text`, `label`, `source`. A split is a directory holding three such
//! files plus `manifest.json`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{class_counts, CorpusError, CorpusSplit, LabeledSentence, Result, SplitRatios};

pub const TRAIN_FILE: &str = "train.jsonl";
pub const VALIDATION_FILE: &str = "validation.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    /// Dataset name; selects per-dataset training defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub seed: u64,
    pub ratios: SplitRatios,
    /// `[causal, non_causal]` per part.
    #[serde(default)]
    pub counts: Option<[[usize; 2]; 3]>,
}

pub fn write_canonical(sents: &[LabeledSentence], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| CorpusError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for s in sents {
        let line = serde_json::to_string(s).expect("sentence serializes");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_canonical(path: impl AsRef<Path>) -> Result<Vec<LabeledSentence>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |message: String| CorpusError::Row {
            file: path.display().to_string(),
            row: i + 1,
            message,
        };
        let sent: LabeledSentence = serde_json::from_str(&line).map_err(|e| row_err(e.to_string()))?;
        if sent.text.trim().is_empty() {
            return Err(row_err("empty sentence text".into()));
        }
        if !ids.insert(sent.id.clone()) {
            return Err(CorpusError::DuplicateId(sent.id));
        }
        out.push(sent);
    }
    Ok(out)
}

pub fn write_split(split: &CorpusSplit, dir: impl AsRef<Path>, name: Option<&str>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    write_canonical(&split.train, dir.join(TRAIN_FILE))?;
    write_canonical(&split.validation, dir.join(VALIDATION_FILE))?;
    write_canonical(&split.test, dir.join(TEST_FILE))?;
    let counts = [&split.train, &split.validation, &split.test].map(|p| {
        let (c, n) = class_counts(p);
        [c, n]
    });
    let manifest = SplitManifest {
        name: name.map(str::to_string),
        seed: split.seed,
        ratios: split.ratios,
        counts: Some(counts),
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json + "\n").map_err(|e| CorpusError::io(path, e))
}

pub fn read_split(dir: impl AsRef<Path>) -> Result<(CorpusSplit, SplitManifest)> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let raw = std::fs::read_to_string(&path).map_err(|e| CorpusError::io(&path, e))?;
    let manifest: SplitManifest =
        serde_json::from_str(&raw).map_err(|e| CorpusError::Manifest(format!("{}: {e}", path.display())))?;
    let split = CorpusSplit {
        train: read_canonical(dir.join(TRAIN_FILE))?,
        validation: read_canonical(dir.join(VALIDATION_FILE))?,
        test: read_canonical(dir.join(TEST_FILE))?,
        seed: manifest.seed,
        ratios: manifest.ratios,
    };
    let mut ids = HashSet::new();
    for s in split.train.iter().chain(&split.validation).chain(&split.test) {
        if !ids.insert(s.id.as_str()) {
            return Err(CorpusError::DuplicateId(s.id.clone()));
        }
    }
    Ok((split, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Source};

    const GOLDEN: &str = r#"{"id":"semeval-1","text":"The fire was caused by a short circuit.","label":"causal","source":"semeval"}
{"id":"doc#0","text":"Officials met \"today\" .","label":"non_causal","source":"causaltb"}
{"id":"biocausal-3","text":"IL-6 induces CRP — in vivo.","label":"causal","source":"biocausal"}
"#;

    #[test]
    fn golden_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("golden.jsonl");
        std::fs::write(&path, GOLDEN).unwrap();
        let sents = read_canonical(&path).unwrap();
        assert_eq!(sents.len(), 3);
        assert_eq!(sents[1].text, "Officials met \"today\" .");
        assert_eq!(sents[1].label, Label::NonCausal);
        assert_eq!(sents[1].source, Source::Causaltb);
        assert_eq!(sents[2].text, "IL-6 induces CRP — in vivo.");

        let out = dir.path().join("out.jsonl");
        write_canonical(&sents, &out).unwrap();
        assert_eq!(std::fs::read_to_string(out).unwrap(), GOLDEN);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.jsonl");
        let line = GOLDEN.lines().next().unwrap();
        std::fs::write(&path, format!("{line}\n{line}\n")).unwrap();
        assert!(matches!(read_canonical(&path), Err(CorpusError::DuplicateId(id)) if id == "semeval-1"));
    }

    #[test]
    fn unknown_fields_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        std::fs::write(
            &path,
            r#"{"id":"a","text":"t","label":"causal","source":"semeval","extra":1}"#,
        )
        .unwrap();
        assert!(matches!(read_canonical(&path), Err(CorpusError::Row { row: 1, .. })));
    }

    #[test]
    fn manifest_ratios_must_sum_to_one() {
        let dir = tempfile::tempdir().unwrap();
        for f in [TRAIN_FILE, VALIDATION_FILE, TEST_FILE] {
            std::fs::write(dir.path().join(f), "").unwrap();
        }
        std::fs::write(
            dir.path().join(MANIFEST_FILE),
            r#"{"seed": 1, "ratios": [0.7, 0.2, 0.2]}"#,
        )
        .unwrap();
        let err = read_split(dir.path()).unwrap_err();
        assert!(matches!(err, CorpusError::Manifest(_)), "{err}");
    }
}
