//! Tokenization and word n-gram TF-IDF features.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TextError {
    #[error("sentence has no letter or digit tokens: {0:?}")]
    NoTokens(String),
    #[error("cannot fit TF-IDF on an empty corpus")]
    EmptyCorpus,
}

/// Lowercased tokens of one sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSequence(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercases, then splits into maximal runs of Unicode letters or digits.
/// Everything else separates tokens.
pub fn tokenize(text: &str) -> Result<TokenSequence, TextError> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    if tokens.is_empty() {
        return Err(TextError::NoTokens(text.to_string()));
    }
    Ok(TokenSequence(tokens))
}

/// Sparse row with strictly increasing indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, v)| dense[i] * v)
            .sum()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }
}

/// Fitted word n-gram vocabulary with smoothed idf weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TfidfRepr", into = "TfidfRepr")]
pub struct TfidfModel {
    orders: Vec<usize>,
    terms: Vec<String>,
    idf: Vec<f64>,
    doc_count: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TfidfRepr {
    ngram_orders: Vec<usize>,
    doc_count: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
}

impl From<TfidfRepr> for TfidfModel {
    fn from(r: TfidfRepr) -> Self {
        let index = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TfidfModel {
            orders: r.ngram_orders,
            terms: r.terms,
            idf: r.idf,
            doc_count: r.doc_count,
            index,
        }
    }
}

impl From<TfidfModel> for TfidfRepr {
    fn from(m: TfidfModel) -> Self {
        TfidfRepr {
            ngram_orders: m.orders,
            doc_count: m.doc_count,
            terms: m.terms,
            idf: m.idf,
        }
    }
}

pub const NGRAM_ORDERS: [usize; 3] = [1, 2, 3];

/// All n-grams of the given orders, space-joined, in sentence order.
pub fn ngrams<'a>(tokens: &'a [String], orders: &'a [usize]) -> impl Iterator<Item = String> + 'a {
    orders
        .iter()
        .flat_map(move |&n| tokens.windows(n).map(|w| w.join(" ")))
}

/// Fits on word 1/2/3-grams.
pub fn fit_tfidf(corpus: &[TokenSequence]) -> Result<TfidfModel, TextError> {
    fit_tfidf_orders(corpus, &NGRAM_ORDERS)
}

/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`; vocabulary sorted lexicographically.
pub fn fit_tfidf_orders(corpus: &[TokenSequence], orders: &[usize]) -> Result<TfidfModel, TextError> {
    if corpus.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let mut seen: Vec<String> = ngrams(doc.tokens(), orders).collect();
        seen.sort_unstable();
        seen.dedup();
        for g in seen {
            *df.entry(g).or_default() += 1;
        }
    }
    let n = corpus.len() as f64;
    let (terms, idf): (Vec<String>, Vec<f64>) = df
        .into_iter()
        .map(|(t, d)| {
            let idf = ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0;
            (t, idf)
        })
        .unzip();
    Ok(TfidfRepr {
        ngram_orders: orders.to_vec(),
        doc_count: corpus.len(),
        terms,
        idf,
    }
    .into())
}

impl TfidfModel {
    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Raw count times idf for known n-grams, L2-normalized.
    pub fn transform(&self, tokens: &TokenSequence) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams(tokens.tokens(), &self.orders) {
            if let Some(&i) = self.index.get(&g) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut v = SparseVector {
            indices: Vec::with_capacity(counts.len()),
            values: Vec::with_capacity(counts.len()),
        };
        for (i, tf) in counts {
            v.indices.push(i);
            v.values.push(tf * self.idf[i]);
        }
        let norm = v.norm();
        if norm > 0.0 {
            v.values.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}
