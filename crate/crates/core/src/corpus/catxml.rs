//! CAT-XML documents (Causal-TimeBank, EventStoryLine).
//!
//! A document carries three layers: `<token t_id sentence>` elements, a
//! `<Markables>` block whose children group tokens through `<token_anchor>`,
//! and a `<Relations>` block whose children link markables through
//! `<source m_id>` / `<target m_id>`. Sentences are rebuilt by joining the
//! tokens of one sentence index with single spaces; one record is emitted per
//! sentence regardless of how many relations touch it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use roxmltree::{Document, Node, ParsingOptions};

use super::{CorpusError, Label, LabeledSentence, Result, Source};

/// Which Causal-TimeBank annotations mark a sentence as causal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TimebankRule {
    /// A C-SIGNAL markable or an intra-sentence CLINK.
    #[default]
    SignalOrClink,
    ClinkOnly,
    SignalOnly,
}

pub fn parse_causal_timebank(dir: impl AsRef<Path>) -> Result<Vec<LabeledSentence>> {
    parse_causal_timebank_with(dir, TimebankRule::default())
}

pub fn parse_causal_timebank_with(
    dir: impl AsRef<Path>,
    rule: TimebankRule,
) -> Result<Vec<LabeledSentence>> {
    let mut out = Vec::new();
    for file in xml_files(dir.as_ref())? {
        let doc = CatDocument::load(&file)?;
        let mut causal = BTreeSet::new();
        if rule != TimebankRule::SignalOnly {
            for rel in doc.relations.iter().filter(|r| r.tag == "CLINK") {
                if let Some(s) = doc.intra_sentence(rel)? {
                    causal.insert(s);
                }
            }
        }
        if rule != TimebankRule::ClinkOnly {
            for m in doc.markables.values().filter(|m| m.tag == "C-SIGNAL") {
                causal.extend(doc.sentences_of(m));
            }
        }
        doc.emit(&causal, Source::Causaltb, &mut out)?;
    }
    Ok(out)
}

pub fn parse_event_storyline(dir: impl AsRef<Path>) -> Result<Vec<LabeledSentence>> {
    let mut out = Vec::new();
    for file in xml_files(dir.as_ref())? {
        let doc = CatDocument::load(&file)?;
        let mut causal = BTreeSet::new();
        for rel in doc
            .relations
            .iter()
            .filter(|r| r.tag == "PLOT_LINK" && is_causal_plot_link(r))
        {
            if let Some(s) = doc.intra_sentence(rel)? {
                causal.insert(s);
            }
        }
        doc.emit(&causal, Source::Eventsl, &mut out)?;
    }
    Ok(out)
}

/// `CAUSES="TRUE"` / `CAUSED_BY="TRUE"` flags, or a relation-type attribute
/// whose value is `CAUSES` / `CAUSED_BY`.
fn is_causal_plot_link(rel: &Relation) -> bool {
    rel.attrs.iter().any(|(k, v)| {
        let key = k.to_ascii_uppercase();
        let val = v.trim().to_ascii_uppercase();
        ((key == "CAUSES" || key == "CAUSED_BY") && val == "TRUE")
            || val == "CAUSES"
            || val == "CAUSED_BY"
    })
}

fn xml_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(CorpusError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| dir.to_path_buf());
            CorpusError::io(path, e.into())
        })?;
        let is_xml = entry
            .path()
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("xml"));
        if entry.file_type().is_file() && is_xml {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

struct Markable {
    tag: String,
    tokens: Vec<String>,
}

struct Relation {
    tag: String,
    id: String,
    attrs: Vec<(String, String)>,
    source: String,
    target: String,
}

struct CatDocument {
    name: String,
    /// sentence index -> tokens in document order
    sentences: BTreeMap<u64, Vec<String>>,
    token_sentence: HashMap<String, u64>,
    markables: HashMap<String, Markable>,
    relations: Vec<Relation>,
}

impl CatDocument {
    fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).map_err(|e| CorpusError::io(path, e))?;
        let text = String::from_utf8_lossy(&raw);
        let fallback = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(&text, &fallback).map_err(|e| match e {
            CorpusError::Document { doc, message } => CorpusError::Document {
                doc: format!("{} ({doc})", path.display()),
                message,
            },
            other => other,
        })
    }

    fn parse(text: &str, fallback_name: &str) -> Result<Self> {
        let opts = ParsingOptions {
            allow_dtd: true,
            ..ParsingOptions::default()
        };
        let xml = Document::parse_with_options(text, opts).map_err(|e| CorpusError::Document {
            doc: fallback_name.to_string(),
            message: format!("unreadable XML: {e}"),
        })?;
        let root = xml.root_element();
        let name = root
            .attribute("doc_name")
            .or_else(|| root.attribute("doc_id"))
            .map(|n| n.trim_end_matches(".xml").to_string())
            .unwrap_or_else(|| fallback_name.to_string());
        let fail = |message: String| CorpusError::Document {
            doc: name.clone(),
            message,
        };

        let mut sentences: BTreeMap<u64, Vec<String>> = BTreeMap::new();
        let mut token_sentence = HashMap::new();
        for tok in root.children().filter(|n| n.has_tag_name("token")) {
            let id = required(tok, "t_id").map_err(&fail)?;
            let sentence: u64 = required(tok, "sentence")
                .map_err(&fail)?
                .parse()
                .map_err(|_| fail(format!("token {id}: non-numeric sentence index")))?;
            let word = tok.text().unwrap_or("").trim();
            if token_sentence.insert(id.to_string(), sentence).is_some() {
                return Err(fail(format!("duplicate token id {id}")));
            }
            if !word.is_empty() {
                sentences.entry(sentence).or_default().push(word.to_string());
            }
        }

        let mut markables = HashMap::new();
        for block in root.children().filter(|n| n.has_tag_name("Markables")) {
            for m in block.children().filter(Node::is_element) {
                let id = required(m, "m_id").map_err(&fail)?;
                let mut tokens = Vec::new();
                for anchor in m.children().filter(|n| n.has_tag_name("token_anchor")) {
                    let t = required(anchor, "t_id").map_err(&fail)?;
                    if !token_sentence.contains_key(t) {
                        return Err(fail(format!("markable {id} references unknown token {t}")));
                    }
                    tokens.push(t.to_string());
                }
                let tag = m.tag_name().name().to_string();
                if markables.insert(id.to_string(), Markable { tag, tokens }).is_some() {
                    return Err(fail(format!("duplicate markable id {id}")));
                }
            }
        }

        let mut relations = Vec::new();
        for block in root.children().filter(|n| n.has_tag_name("Relations")) {
            for r in block.children().filter(Node::is_element) {
                let id = r.attribute("r_id").unwrap_or("?").to_string();
                let endpoint = |tag: &str| -> Result<String> {
                    let node = r
                        .children()
                        .find(|n| n.has_tag_name(tag))
                        .ok_or_else(|| fail(format!("relation {id} has no <{tag}>")))?;
                    let m = required(node, "m_id").map_err(&fail)?;
                    if !markables.contains_key(m) {
                        return Err(fail(format!("relation {id} references unknown markable {m}")));
                    }
                    Ok(m.to_string())
                };
                let source = endpoint("source")?;
                let target = endpoint("target")?;
                relations.push(Relation {
                    tag: r.tag_name().name().to_string(),
                    attrs: r
                        .attributes()
                        .map(|a| (a.name().to_string(), a.value().to_string()))
                        .collect(),
                    id,
                    source,
                    target,
                });
            }
        }

        Ok(CatDocument {
            name,
            sentences,
            token_sentence,
            markables,
            relations,
        })
    }

    fn sentences_of(&self, m: &Markable) -> BTreeSet<u64> {
        m.tokens
            .iter()
            .filter_map(|t| self.token_sentence.get(t).copied())
            .collect()
    }

    /// The one sentence holding every token of both endpoints, if any.
    fn intra_sentence(&self, rel: &Relation) -> Result<Option<u64>> {
        let lookup = |m: &str| {
            self.markables.get(m).ok_or_else(|| CorpusError::Document {
                doc: self.name.clone(),
                message: format!("relation {} references unknown markable {m}", rel.id),
            })
        };
        let mut all = self.sentences_of(lookup(&rel.source)?);
        let target = self.sentences_of(lookup(&rel.target)?);
        if all.is_empty() || target.is_empty() {
            return Ok(None);
        }
        all.extend(target);
        Ok(if all.len() == 1 { all.first().copied() } else { None })
    }

    fn emit(&self, causal: &BTreeSet<u64>, source: Source, out: &mut Vec<LabeledSentence>) -> Result<()> {
        for (idx, tokens) in &self.sentences {
            let id = format!("{}#{idx}", self.name);
            let text = tokens.join(" ");
            let label = Label::from_causal(causal.contains(idx));
            let sent = LabeledSentence::new(id.clone(), &text, label, source).map_err(|message| {
                CorpusError::Document {
                    doc: self.name.clone(),
                    message: format!("sentence {id}: {message}"),
                }
            })?;
            out.push(sent);
        }
        Ok(())
    }
}

fn required<'a>(node: Node<'a, '_>, attr: &str) -> std::result::Result<&'a str, String> {
    node.attribute(attr).ok_or_else(|| {
        format!(
            "<{}> element without `{attr}` attribute",
            node.tag_name().name()
        )
    })
}
