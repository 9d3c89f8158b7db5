//! Frozen pre-trained word vectors and precomputed contextual vectors.
//!
//! Two word2vec layouts are read and written:
//!
//! * text: a `"<V> <d>"` header line, then `V` lines of `word v1 ... vd`;
//! * binary: the same header line, then for every word its UTF-8 bytes, one
//!   space and `d` little-endian `f32` values (an optional newline may follow
//!   each vector).
//!
//! Contextual vectors live in a sidecar file keyed by sentence id:
//!
//! ```text
//! magic "CTXV" | version u32 | dim u32 | count u32
//! per record: id_len u32 | id bytes | n_tokens u32 | n_tokens * dim f32
//! ```
//!
//! All integers and floats are little endian.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::text::TokenSequence;

/// Width of the contextual vectors appended in contextual mode.
pub const CONTEXTUAL_DIM: usize = 1024;

const CTX_MAGIC: &[u8; 4] = b"CTXV";
const CTX_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("sentence {id}: {expected} tokens but {found} contextual vectors")]
    LengthMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("no contextual vectors for sentence {0}")]
    MissingContext(String),
}

type Result<T> = std::result::Result<T, EmbeddingError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Word2VecFormat {
    Text,
    Binary,
}

impl std::str::FromStr for Word2VecFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "text" | "txt" => Ok(Word2VecFormat::Text),
            "binary" | "bin" => Ok(Word2VecFormat::Binary),
            other => Err(format!("unknown embedding format {other:?} (text|binary)")),
        }
    }
}

/// Immutable word vector table.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    duplicates: usize,
}

impl EmbeddingMatrix {
    /// Builds a table from `(word, vector)` rows. Later duplicates of a word
    /// are dropped and counted.
    pub fn from_rows<I, S>(dim: usize, rows: I) -> std::result::Result<Self, String>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut m = EmbeddingMatrix {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            duplicates: 0,
        };
        for (word, vec) in rows {
            m.push(word.into(), &vec)?;
        }
        Ok(m)
    }

    fn push(&mut self, word: String, vec: &[f32]) -> std::result::Result<(), String> {
        if vec.len() != self.dim {
            return Err(format!("word {word:?}: {} values, expected {}", vec.len(), self.dim));
        }
        if let Some(bad) = vec.iter().find(|v| !v.is_finite()) {
            return Err(format!("word {word:?}: non-finite value {bad}"));
        }
        if self.index.contains_key(&word) {
            self.duplicates += 1;
            return Ok(());
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vec);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Number of repeated words skipped while loading (first occurrence wins).
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// FNV-1a over words and value bits; unchanged as long as the table is.
    pub fn checksum(&self) -> u64 {
        let mut h = Fnv::default();
        h.write(&(self.dim as u64).to_le_bytes());
        for w in &self.words {
            h.write(w.as_bytes());
            h.write(&[0]);
        }
        for v in &self.data {
            h.write(&v.to_bits().to_le_bytes());
        }
        h.0
    }
}

struct Fnv(u64);

impl Default for Fnv {
    fn default() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

pub fn load_word2vec(path: impl AsRef<Path>, format: Word2VecFormat) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = BufReader::new(file);
    match format {
        Word2VecFormat::Text => read_text(&mut reader, path),
        Word2VecFormat::Binary => read_binary(&mut reader, path),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> EmbeddingError {
    EmbeddingError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> EmbeddingError {
    EmbeddingError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_header(line: &str, path: &Path) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let mut next = || parts.next().and_then(|p| p.parse::<usize>().ok());
    match (next(), next()) {
        (Some(v), Some(d)) if d > 0 => Ok((v, d)),
        _ => Err(format_err(path, format!("bad header {:?}, expected \"<words> <dim>\"", line.trim()))),
    }
}

fn read_text<R: BufRead>(reader: &mut R, path: &Path) -> Result<EmbeddingMatrix> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err(path, "empty file"))?
        .map_err(|e| io_err(path, e))?;
    let (n_words, dim) = parse_header(&header, path)?;
    let mut m = EmbeddingMatrix::from_rows::<_, String>(dim, []).expect("empty table");
    let mut entries = 0;
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        entries += 1;
        if entries > n_words {
            return Err(format_err(path, format!("header declares {n_words} words but more entries follow")));
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap_or_default().to_string();
        let vec = parts
            .map(str::parse::<f32>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format_err(path, format!("line {}: {e}", i + 2)))?;
        m.push(word, &vec)
            .map_err(|msg| format_err(path, format!("line {}: {msg}", i + 2)))?;
    }
    if entries != n_words {
        return Err(format_err(path, format!("header declares {n_words} words but {entries} entries found")));
    }
    Ok(m)
}

fn read_binary<R: BufRead>(reader: &mut R, path: &Path) -> Result<EmbeddingMatrix> {
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header).map_err(|e| io_err(path, e))?;
    let (n_words, dim) = parse_header(&String::from_utf8_lossy(&header), path)?;
    let mut m = EmbeddingMatrix::from_rows::<_, String>(dim, []).expect("empty table");
    let mut raw = vec![0u8; dim * 4];
    let mut vec = vec![0f32; dim];
    for i in 0..n_words {
        skip_whitespace(reader).map_err(|e| io_err(path, e))?;
        let mut word = Vec::new();
        reader.read_until(b' ', &mut word).map_err(|e| io_err(path, e))?;
        if word.pop() != Some(b' ') {
            return Err(format_err(path, format!("header declares {n_words} words but only {i} entries found")));
        }
        reader.read_exact(&mut raw).map_err(|e| {
            format_err(path, format!("entry {}: truncated vector ({e})", i + 1))
        })?;
        for (v, b) in vec.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        }
        m.push(String::from_utf8_lossy(&word).into_owned(), &vec)
            .map_err(|msg| format_err(path, format!("entry {}: {msg}", i + 1)))?;
    }
    skip_whitespace(reader).map_err(|e| io_err(path, e))?;
    if !reader.fill_buf().map_err(|e| io_err(path, e))?.is_empty() {
        return Err(format_err(path, format!("header declares {n_words} words but more entries follow")));
    }
    Ok(m)
}

fn skip_whitespace<R: BufRead>(reader: &mut R) -> std::io::Result<()> {
    loop {
        let buf = reader.fill_buf()?;
        if buf.is_empty() {
            return Ok(());
        }
        let n = buf.iter().take_while(|b| b.is_ascii_whitespace()).count();
        let done = n < buf.len();
        reader.consume(n);
        if done {
            return Ok(());
        }
    }
}

pub fn write_word2vec(m: &EmbeddingMatrix, path: impl AsRef<Path>, format: Word2VecFormat) -> Result<()> {
    let path = path.as_ref();
    let io = |e| io_err(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{} {}", m.len(), m.dim()).map_err(io)?;
    for (i, word) in m.words().iter().enumerate() {
        match format {
            Word2VecFormat::Text => {
                write!(w, "{word}").map_err(io)?;
                for v in m.row(i) {
                    write!(w, " {v}").map_err(io)?;
                }
            }
            Word2VecFormat::Binary => {
                write!(w, "{word} ").map_err(io)?;
                for v in m.row(i) {
                    w.write_all(&v.to_le_bytes()).map_err(io)?;
                }
            }
        }
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Per-token vectors of one sentence, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSequence {
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingSequence {
    pub fn new(dim: usize, data: Vec<f32>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "ragged embedding sequence");
        EmbeddingSequence { dim, data }
    }

    pub fn from_vectors(vectors: &[Vec<f32>]) -> Self {
        let dim = vectors.first().map_or(0, Vec::len);
        assert!(vectors.iter().all(|v| v.len() == dim), "ragged embedding sequence");
        EmbeddingSequence {
            dim,
            data: vectors.concat(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// Looks up every token; out-of-vocabulary tokens map to the zero vector.
pub fn embed(matrix: &EmbeddingMatrix, tokens: &TokenSequence) -> EmbeddingSequence {
    let dim = matrix.dim();
    let mut data = Vec::with_capacity(tokens.len() * dim);
    for t in tokens.tokens() {
        match matrix.get(t) {
            Some(row) => data.extend_from_slice(row),
            None => data.resize(data.len() + dim, 0.0),
        }
    }
    EmbeddingSequence { dim, data }
}

/// Appends each token's contextual vector to its word vector.
pub fn concat_contextual(
    seq: &EmbeddingSequence,
    ctx: &EmbeddingSequence,
    sentence_id: &str,
) -> Result<EmbeddingSequence> {
    if seq.len() != ctx.len() {
        return Err(EmbeddingError::LengthMismatch {
            id: sentence_id.to_string(),
            expected: seq.len(),
            found: ctx.len(),
        });
    }
    let dim = seq.dim() + ctx.dim();
    let mut data = Vec::with_capacity(seq.len() * dim);
    for (a, b) in seq.vectors().zip(ctx.vectors()) {
        data.extend_from_slice(a);
        data.extend_from_slice(b);
    }
    Ok(EmbeddingSequence { dim, data })
}

/// Contextual vectors keyed by sentence id, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextualVectors {
    dim: usize,
    ids: Vec<String>,
    records: HashMap<String, EmbeddingSequence>,
}

impl ContextualVectors {
    pub fn new(dim: usize) -> Self {
        ContextualVectors {
            dim,
            ids: Vec::new(),
            records: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, seq: EmbeddingSequence) -> std::result::Result<(), String> {
        let id = id.into();
        if seq.dim() != self.dim && !seq.is_empty() {
            return Err(format!("record {id}: dim {} but file dim is {}", seq.dim(), self.dim));
        }
        if self.records.contains_key(&id) {
            return Err(format!("duplicate record {id}"));
        }
        self.ids.push(id.clone());
        self.records.insert(id, seq);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingSequence> {
        self.records.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &EmbeddingSequence)> {
        self.ids.iter().map(|id| (id.as_str(), &self.records[id]))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let mut r = BufReader::new(file);
        let trunc = |e: std::io::Error| format_err(path, format!("truncated file: {e}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(trunc)?;
        if &magic != CTX_MAGIC {
            return Err(format_err(path, "not a contextual vector file (bad magic)"));
        }
        let version = read_u32(&mut r).map_err(trunc)?;
        if version != CTX_VERSION {
            return Err(format_err(path, format!("unsupported version {version}")));
        }
        let dim = read_u32(&mut r).map_err(trunc)? as usize;
        let count = read_u32(&mut r).map_err(trunc)?;
        let mut out = ContextualVectors::new(dim);
        for _ in 0..count {
            let id_len = read_u32(&mut r).map_err(trunc)? as usize;
            let mut id = vec![0u8; id_len];
            r.read_exact(&mut id).map_err(trunc)?;
            let id = String::from_utf8(id).map_err(|_| format_err(path, "record id is not UTF-8"))?;
            let n = read_u32(&mut r).map_err(trunc)? as usize;
            let mut raw = vec![0u8; n * dim * 4];
            r.read_exact(&mut raw).map_err(trunc)?;
            let data: Vec<f32> = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            if data.iter().any(|v| !v.is_finite()) {
                return Err(format_err(path, format!("record {id}: non-finite value")));
            }
            let seq = EmbeddingSequence { dim, data };
            out.insert(id, seq).map_err(|m| format_err(path, m))?;
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| io_err(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        w.write_all(CTX_MAGIC).map_err(io)?;
        for x in [CTX_VERSION, self.dim as u32, self.ids.len() as u32] {
            w.write_all(&x.to_le_bytes()).map_err(io)?;
        }
        for (id, seq) in self.iter() {
            w.write_all(&(id.len() as u32).to_le_bytes()).map_err(io)?;
            w.write_all(id.as_bytes()).map_err(io)?;
            w.write_all(&(seq.len() as u32).to_le_bytes()).map_err(io)?;
            for v in seq.as_slice() {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;
    use proptest::prelude::*;

    fn small() -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(
            3,
            [
                ("smoking", vec![0.5, -1.25, 3.0]),
                ("causes", vec![1e-8, 2.5e7, -0.0]),
                ("cancer", vec![0.1, 0.2, 0.3]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        write_word2vec(&small(), &path, Word2VecFormat::Text).unwrap();
        let m = load_word2vec(&path, Word2VecFormat::Text).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.dim(), 3);
        assert_eq!(m, small());
    }

    #[test]
    fn declared_count_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, "2 2\na 1 2\nb 3 4\nc 5 6\n").unwrap();
        assert!(load_word2vec(&path, Word2VecFormat::Text).is_err());
        std::fs::write(&path, "3 2\na 1 2\nb 3 4\n").unwrap();
        assert!(load_word2vec(&path, Word2VecFormat::Text).is_err());

        let m = EmbeddingMatrix::from_rows(2, [("a", vec![1.0, 2.0]), ("b", vec![3.0, 4.0]), ("c", vec![5.0, 6.0])]).unwrap();
        let bin = dir.path().join("v.bin");
        write_word2vec(&m, &bin, Word2VecFormat::Binary).unwrap();
        let mut bytes = std::fs::read(&bin).unwrap();
        bytes[0] = b'2';
        std::fs::write(&bin, &bytes).unwrap();
        let err = load_word2vec(&bin, Word2VecFormat::Binary).unwrap_err().to_string();
        assert!(err.contains("more entries"), "{err}");
        bytes[0] = b'4';
        std::fs::write(&bin, &bytes).unwrap();
        assert!(load_word2vec(&bin, Word2VecFormat::Binary).is_err());
    }

    #[test]
    fn non_finite_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, "1 2\na NaN 2\n").unwrap();
        assert!(load_word2vec(&path, Word2VecFormat::Text).is_err());
        std::fs::write(&path, "1 2\na inf 2\n").unwrap();
        assert!(load_word2vec(&path, Word2VecFormat::Text).is_err());
    }

    #[test]
    fn duplicate_words_first_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, "3 1\na 1\nb 2\na 3\n").unwrap();
        let m = load_word2vec(&path, Word2VecFormat::Text).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.duplicates(), 1);
        assert_eq!(m.get("a"), Some(&[1.0f32][..]));
    }

    #[test]
    fn binary_without_trailing_newlines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.bin");
        let mut bytes = b"2 2\n".to_vec();
        for (w, v) in [("x", [1.0f32, 2.0]), ("y", [3.0, 4.0])] {
            bytes.extend_from_slice(w.as_bytes());
            bytes.push(b' ');
            for f in v {
                bytes.extend_from_slice(&f.to_le_bytes());
            }
        }
        std::fs::write(&path, bytes).unwrap();
        let m = load_word2vec(&path, Word2VecFormat::Binary).unwrap();
        assert_eq!(m.get("y"), Some(&[3.0f32, 4.0][..]));
    }

    #[test]
    fn embed_policy() {
        let m = small();
        let all_oov = embed(&m, &tokenize("foo bar").unwrap());
        assert_eq!(all_oov.len(), 2);
        assert!(all_oov.as_slice().iter().all(|&v| v == 0.0));

        let seq = embed(&m, &tokenize("Heavy smoking causes lung cancer").unwrap());
        assert_eq!(seq.len(), 5);
        let zero_positions: Vec<usize> = (0..5)
            .filter(|&i| seq.vector(i).iter().all(|&v| v == 0.0))
            .collect();
        assert_eq!(zero_positions, [0, 3]);
        assert_eq!(seq.vector(1), m.get("smoking").unwrap());
        assert_eq!(seq.vector(4), m.get("cancer").unwrap());
    }

    #[test]
    fn contextual_concatenation() {
        let base = EmbeddingSequence::new(200, (0..1000).map(|i| i as f32).collect());
        let ctx = EmbeddingSequence::new(CONTEXTUAL_DIM, vec![0.0; 5 * CONTEXTUAL_DIM]);
        let out = concat_contextual(&base, &ctx, "s1").unwrap();
        assert_eq!(out.dim(), 1224);
        assert_eq!(out.len(), 5);
        for i in 0..5 {
            assert_eq!(&out.vector(i)[..200], base.vector(i));
        }
        let short = EmbeddingSequence::new(CONTEXTUAL_DIM, vec![0.0; 4 * CONTEXTUAL_DIM]);
        match concat_contextual(&base, &short, "s1").unwrap_err() {
            EmbeddingError::LengthMismatch { id, expected, found } => {
                assert_eq!((id.as_str(), expected, found), ("s1", 5, 4))
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn contextual_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctx.bin");
        let mut ctx = ContextualVectors::new(4);
        ctx.insert("b#1", EmbeddingSequence::new(4, (0..8).map(|i| i as f32 * 0.5).collect())).unwrap();
        ctx.insert("a", EmbeddingSequence::new(4, vec![-1.0; 12])).unwrap();
        ctx.write(&path).unwrap();
        let back = ContextualVectors::read(&path).unwrap();
        assert_eq!(back, ctx);
        assert_eq!(back.iter().map(|(id, _)| id).collect::<Vec<_>>(), ["b#1", "a"]);
        assert!(ctx.insert("a", EmbeddingSequence::new(4, vec![0.0; 4])).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip_is_bit_exact(
            dim in 1usize..16,
            words in prop::collection::btree_set("[a-zA-Z0-9_é]{1,12}", 1..20),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<(String, Vec<f32>)> = words
                .into_iter()
                .map(|w| (w, (0..dim).map(|_| f32::from_bits(rng.gen::<u32>() & 0xbf7f_ffff)).collect()))
                .collect();
            let m = EmbeddingMatrix::from_rows(dim, rows).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let bin = dir.path().join("v.bin");
            write_word2vec(&m, &bin, Word2VecFormat::Binary).unwrap();
            let back = load_word2vec(&bin, Word2VecFormat::Binary).unwrap();
            prop_assert_eq!(back.checksum(), m.checksum());
            prop_assert_eq!(&back, &m);

            let txt = dir.path().join("v.txt");
            write_word2vec(&m, &txt, Word2VecFormat::Text).unwrap();
            let from_text = load_word2vec(&txt, Word2VecFormat::Text).unwrap();
            prop_assert_eq!(&from_text, &m);
        }
    }
}
