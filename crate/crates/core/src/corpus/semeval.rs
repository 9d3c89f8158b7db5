//! SemEval-2010 Task 8 distribution format.
//!
//! ```text
//! 8	"The <e1>fire</e1> was caused by a <e2>short circuit</e2>."
//! Cause-Effect(e2,e1)
//! Comment:
//!
//! ```

use std::path::Path;

use super::{CorpusError, Label, LabeledSentence, Result, Source};

const TAGS: [&str; 4] = ["<e1>", "</e1>", "<e2>", "</e2>"];

pub fn parse_semeval(path: impl AsRef<Path>) -> Result<Vec<LabeledSentence>> {
    let path = path.as_ref();
    let raw = std::fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let content = String::from_utf8_lossy(&raw);
    parse_semeval_str(&content, &path.display().to_string())
}

/// Parses file contents; `file` is only used in error messages.
pub fn parse_semeval_str(content: &str, file: &str) -> Result<Vec<LabeledSentence>> {
    let content = content.strip_prefix('\u{feff}').unwrap_or(content);
    let mut lines = content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    let mut out = Vec::new();
    let mut record = 0;
    while let Some((line_no, line)) = lines.next() {
        record += 1;
        let err = |message: String| CorpusError::Record {
            file: file.to_string(),
            record,
            message,
        };

        let (number, quoted) = split_sentence_line(line).ok_or_else(|| {
            err(format!(
                "line {line_no}: expected `<number>\\t\"<sentence>\"`, found {line:?}"
            ))
        })?;

        let relation = match lines.next() {
            Some((_, rel)) if is_relation_line(rel) => rel.trim(),
            Some((n, other)) => {
                return Err(err(format!(
                    "line {n}: missing relation line after sentence {number}, found {other:?}"
                )))
            }
            None => {
                return Err(err(format!(
                    "missing relation line after sentence {number} at end of file"
                )))
            }
        };
        if let Some((_, next)) = lines.peek() {
            if next.trim_start().starts_with("Comment") {
                lines.next();
            }
        }

        let text = strip_entity_tags(quoted).map_err(|m| err(format!("sentence {number}: {m}")))?;
        let label = Label::from_causal(relation.starts_with("Cause-Effect"));
        let sentence = LabeledSentence::new(format!("semeval-{number}"), &text, label, Source::Semeval)
            .map_err(|m| err(format!("sentence {number}: {m}")))?;
        out.push(sentence);
    }
    Ok(out)
}

fn split_sentence_line(line: &str) -> Option<(u64, &str)> {
    let line = line.trim();
    let split_at = line.find(|c: char| c == '\t' || c == ' ')?;
    let number = line[..split_at].parse().ok()?;
    let rest = line[split_at..].trim();
    let quoted = rest.strip_prefix('"')?.strip_suffix('"')?;
    Some((number, quoted))
}

fn is_relation_line(line: &str) -> bool {
    let line = line.trim();
    let name = line.split('(').next().unwrap_or("");
    !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphabetic() || c == '-')
        && match line.find('(') {
            None => true,
            Some(i) => matches!(&line[i..], "(e1,e2)" | "(e2,e1)"),
        }
}

/// Removes the four entity tags, requiring each entity to be tagged exactly
/// once with the opening tag first.
fn strip_entity_tags(sentence: &str) -> std::result::Result<String, String> {
    for (open, close) in [("<e1>", "</e1>"), ("<e2>", "</e2>")] {
        let opens = sentence.matches(open).count();
        let closes = sentence.matches(close).count();
        if opens != 1 || closes != 1 {
            return Err(format!(
                "unbalanced entity tags: {opens} `{open}` vs {closes} `{close}`"
            ));
        }
        if sentence.find(open) > sentence.find(close) {
            return Err(format!("`{close}` precedes `{open}`"));
        }
    }
    let mut text = sentence.to_string();
    for tag in TAGS {
        text = text.replace(tag, "");
    }
    Ok(text)
}
