//! Static word embeddings: storage, the text vector format, cosine similarity
//! and a skip-gram negative-sampling trainer with character n-gram subwords.

pub mod sgns;
pub mod subword;
mod train;

use std::borrow::Cow;
use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

pub use subword::SubwordTable;
pub use train::{train, train_file, TrainConfig};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: duplicate word {word:?}")]
    DuplicateWord { line: usize, word: String },
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("header declares {declared} words but {found} rows were read")]
    CountMismatch { declared: usize, found: usize },
    #[error("word {0:?} is not in the vocabulary and has no known subwords")]
    OutOfVocabulary(String),
    #[error("training corpus has no tokens")]
    EmptyCorpus,
    #[error("no token reaches min_count={0}")]
    VocabularyEmpty(usize),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Vocabulary of dense vectors of one dimension, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    subwords: Option<SubwordTable>,
}

impl EmbeddingSpace {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        EmbeddingSpace { dim, words: Vec::new(), index: HashMap::new(), data: Vec::new(), subwords: None }
    }

    pub fn with_capacity(dim: usize, words: usize) -> Self {
        let mut space = EmbeddingSpace::new(dim);
        space.words.reserve(words);
        space.data.reserve(words * dim);
        space
    }

    pub fn insert(&mut self, word: &str, vector: &[f32]) -> Result<(), EmbeddingError> {
        let line = self.words.len() + 1;
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch { line, expected: self.dim, found: vector.len() });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::MalformedRow { line, reason: "non-finite component".into() });
        }
        if word.is_empty() || word.contains(char::is_whitespace) {
            return Err(EmbeddingError::MalformedRow { line, reason: format!("invalid word {word:?}") });
        }
        if self.index.contains_key(word) {
            return Err(EmbeddingError::DuplicateWord { line, word: word.to_string() });
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.data.extend_from_slice(vector);
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

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.words.iter().map(String::as_str).zip(self.data.chunks_exact(self.dim))
    }

    pub fn subwords(&self) -> Option<&SubwordTable> {
        self.subwords.as_ref()
    }

    pub fn set_subwords(&mut self, table: Option<SubwordTable>) {
        if let Some(t) = &table {
            assert_eq!(t.dim(), self.dim, "subword table dimension differs from space");
        }
        self.subwords = table;
    }

    /// Vocabulary vector, or the mean of the word's known n-gram vectors when
    /// it is out of vocabulary and subwords are enabled.
    pub fn resolve(&self, word: &str) -> Option<Cow<'_, [f32]>> {
        if let Some(v) = self.vector(word) {
            return Some(Cow::Borrowed(v));
        }
        self.subwords.as_ref().and_then(|t| t.compose_oov(word)).map(Cow::Owned)
    }

    pub fn cosine(&self, w1: &str, w2: &str) -> Result<f64, EmbeddingError> {
        let a = self.resolve(w1).ok_or_else(|| EmbeddingError::OutOfVocabulary(w1.to_string()))?;
        let b = self.resolve(w2).ok_or_else(|| EmbeddingError::OutOfVocabulary(w2.to_string()))?;
        Ok(cosine(&a, &b))
    }

    pub fn load_text(path: &Path) -> Result<EmbeddingSpace, EmbeddingError> {
        EmbeddingSpace::read_text(File::open(path)?)
    }

    pub fn save_text(&self, path: &Path) -> Result<(), EmbeddingError> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_text(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Reads `<vocab_size> <dim>` followed by one `<word> <c1> ... <cdim>` row
    /// per word.
    pub fn read_text<R: Read>(input: R) -> Result<EmbeddingSpace, EmbeddingError> {
        let mut lines = BufReader::new(input).lines();
        let header = lines.next().ok_or_else(|| EmbeddingError::MalformedHeader("empty file".into()))??;
        let fields: Vec<&str> = header.split(' ').collect();
        let parse = |s: &str| s.parse::<usize>().ok();
        let (declared, dim) = match fields.as_slice() {
            [n, d] => match (parse(n), parse(d)) {
                (Some(n), Some(d)) if d > 0 => (n, d),
                _ => return Err(EmbeddingError::MalformedHeader(header.clone())),
            },
            _ => return Err(EmbeddingError::MalformedHeader(header.clone())),
        };
        let mut space = EmbeddingSpace::with_capacity(dim, declared);
        let mut buf = Vec::with_capacity(dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or("");
            buf.clear();
            for p in parts {
                let v: f32 = p.parse().map_err(|_| EmbeddingError::MalformedRow {
                    line: lineno,
                    reason: format!("bad component {p:?}"),
                })?;
                buf.push(v);
            }
            space.insert(word, &buf).map_err(|e| relocate(e, lineno))?;
        }
        if space.len() != declared {
            return Err(EmbeddingError::CountMismatch { declared, found: space.len() });
        }
        Ok(space)
    }

    /// Writes the text format with six decimals per component.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        let mut line = String::new();
        for (word, v) in self.iter() {
            line.clear();
            line.push_str(word);
            for c in v {
                use std::fmt::Write as _;
                write!(line, " {c:.6}").unwrap();
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()
    }
}

fn relocate(err: EmbeddingError, line: usize) -> EmbeddingError {
    match err {
        EmbeddingError::DimensionMismatch { expected, found, .. } => {
            EmbeddingError::DimensionMismatch { line, expected, found }
        }
        EmbeddingError::DuplicateWord { word, .. } => EmbeddingError::DuplicateWord { line, word },
        EmbeddingError::MalformedRow { reason, .. } => EmbeddingError::MalformedRow { line, reason },
        other => other,
    }
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

pub fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        return 0.0;
    }
    (dot(a, b) / denom).clamp(-1.0, 1.0)
}
