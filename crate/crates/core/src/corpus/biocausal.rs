//! Delimited sentence/label files (BioCausal).
//!
//! The published archive's exact column layout is detected from the header:
//! a text column named `sentence` or `text`, a label column named `label`,
//! `causal`, `is_causal` or `class`, and an optional `id` column. Files ending
//! in `.tsv` (or whose header contains a tab) are tab separated.

use std::path::Path;

use super::{CorpusError, Label, LabeledSentence, Result, Source};

const TEXT_COLUMNS: [&str; 2] = ["sentence", "text"];
const LABEL_COLUMNS: [&str; 4] = ["label", "causal", "is_causal", "class"];

/// Explicit column layout; `None` fields are detected from the header.
#[derive(Clone, Debug, Default)]
pub struct BioCausalLayout {
    pub delimiter: Option<u8>,
    pub text_column: Option<String>,
    pub label_column: Option<String>,
    pub id_column: Option<String>,
}

pub fn parse_biocausal(path: impl AsRef<Path>) -> Result<Vec<LabeledSentence>> {
    parse_biocausal_with(path, &BioCausalLayout::default())
}

pub fn parse_biocausal_with(
    path: impl AsRef<Path>,
    layout: &BioCausalLayout,
) -> Result<Vec<LabeledSentence>> {
    let path = path.as_ref();
    let raw = std::fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let content = String::from_utf8_lossy(&raw);
    let content = content.strip_prefix('\u{feff}').unwrap_or(&content);
    let file = path.display().to_string();

    let delimiter = layout.delimiter.unwrap_or_else(|| {
        let header = content.lines().next().unwrap_or("");
        let tsv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("tsv"));
        if tsv || header.contains('\t') {
            b'\t'
        } else {
            b','
        }
    });

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(content.as_bytes());
    let row_err = |row: usize, message: String| CorpusError::Row {
        file: file.clone(),
        row,
        message,
    };

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| row_err(1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let find = |explicit: &Option<String>, candidates: &[&str], what: &str| -> Result<usize> {
        let names: Vec<String> = match explicit {
            Some(name) => vec![name.to_ascii_lowercase()],
            None => candidates.iter().map(|c| c.to_string()).collect(),
        };
        headers
            .iter()
            .position(|h| names.contains(h))
            .ok_or_else(|| row_err(1, format!("no {what} column among {headers:?}")))
    };
    let text_col = find(&layout.text_column, &TEXT_COLUMNS, "sentence")?;
    let label_col = find(&layout.label_column, &LABEL_COLUMNS, "label")?;
    let id_col = match &layout.id_column {
        Some(_) => Some(find(&layout.id_column, &[], "id")?),
        None => headers.iter().position(|h| h == "id"),
    };

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| row_err(row, e.to_string()))?;
        let text = record.get(text_col).unwrap_or("").trim();
        if text.is_empty() {
            return Err(row_err(row, "empty sentence".into()));
        }
        let raw_label = record.get(label_col).unwrap_or("").trim();
        let label = parse_label(raw_label)
            .ok_or_else(|| row_err(row, format!("missing or unrecognised label {raw_label:?}")))?;
        let id = match id_col.and_then(|c| record.get(c)).map(str::trim) {
            Some(id) if !id.is_empty() => format!("biocausal-{id}"),
            _ => format!("biocausal-{}", i + 1),
        };
        let sent = LabeledSentence::new(id, text, label, Source::Biocausal)
            .map_err(|m| row_err(row, m))?;
        out.push(sent);
    }
    Ok(out)
}

fn parse_label(raw: &str) -> Option<Label> {
    match raw.to_ascii_lowercase().replace('-', "_").as_str() {
        "1" | "1.0" | "true" | "yes" | "causal" => Some(Label::Causal),
        "0" | "0.0" | "false" | "no" | "non_causal" | "noncausal" | "not_causal" => {
            Some(Label::NonCausal)
        }
        _ => None,
    }
}
