//! Text normalization, token counting and Zipf frequencies.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: input is not valid UTF-8")]
    InvalidEncoding { line: usize },
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("counts file line {line}: {reason}")]
    MalformedCounts { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Per-token transformation applied after lowercasing, e.g. a stemmer.
pub type StemmerHook<'a> = &'a (dyn Fn(&str) -> String + Sync);

/// Splits text into maximal runs of Unicode letters and digits.
#[derive(Clone, Copy)]
pub struct Tokenizer<'a> {
    pub lowercase: bool,
    pub stemmer: Option<StemmerHook<'a>>,
}

impl Default for Tokenizer<'_> {
    fn default() -> Self {
        Tokenizer { lowercase: true, stemmer: None }
    }
}

impl<'a> Tokenizer<'a> {
    pub fn new(lowercase: bool) -> Self {
        Tokenizer { lowercase, stemmer: None }
    }

    pub fn with_stemmer(mut self, hook: StemmerHook<'a>) -> Self {
        self.stemmer = Some(hook);
        self
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| {
                let t = if self.lowercase { t.to_lowercase() } else { t.to_string() };
                match self.stemmer {
                    Some(hook) => hook(&t),
                    None => t,
                }
            })
            .collect()
    }

    /// Tokenizes `input` line by line, writing one space-joined line per
    /// non-empty input line. Returns the number of tokens written.
    pub fn preprocess<R: Read, W: Write>(&self, input: R, mut out: W) -> Result<u64, CorpusError> {
        let mut reader = BufReader::new(input);
        let mut buf = Vec::new();
        let mut line = 0usize;
        let mut total = 0u64;
        loop {
            buf.clear();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            line += 1;
            let text = std::str::from_utf8(&buf).map_err(|_| CorpusError::InvalidEncoding { line })?;
            let tokens = self.tokenize(text);
            if tokens.is_empty() {
                continue;
            }
            total += tokens.len() as u64;
            out.write_all(tokens.join(" ").as_bytes())?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(total)
    }
}

/// Exact token multiset counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenCounts {
    counts: HashMap<String, u64>,
    total: u64,
}

impl TokenCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts = TokenCounts::new();
        for t in tokens {
            counts.add(t.as_ref(), 1);
        }
        counts
    }

    pub fn add(&mut self, token: &str, n: u64) {
        if n == 0 {
            return;
        }
        match self.counts.get_mut(token) {
            Some(c) => *c += n,
            None => {
                self.counts.insert(token.to_string(), n);
            }
        }
        self.total += n;
    }

    pub fn merge(mut self, other: TokenCounts) -> TokenCounts {
        if self.counts.len() < other.counts.len() {
            return other.merge(self);
        }
        for (t, n) in other.counts {
            *self.counts.entry(t).or_insert(0) += n;
        }
        self.total += other.total;
        self
    }

    /// Counts whitespace-separated tokens of an already preprocessed file,
    /// sharding lines across the rayon pool.
    pub fn count_file(path: &Path) -> Result<TokenCounts, CorpusError> {
        let reader = BufReader::new(File::open(path)?);
        let mut counts = TokenCounts::new();
        let mut chunk = Vec::with_capacity(CHUNK_LINES);
        for (i, line) in reader.lines().enumerate() {
            chunk.push(line.map_err(|e| match e.kind() {
                io::ErrorKind::InvalidData => CorpusError::InvalidEncoding { line: i + 1 },
                _ => CorpusError::Io(e),
            })?);
            if chunk.len() == CHUNK_LINES {
                counts = counts.merge(count_lines(&chunk));
                chunk.clear();
            }
        }
        Ok(counts.merge(count_lines(&chunk)))
    }

    pub fn get(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(t, &n)| (t.as_str(), n))
    }

    /// Entries by descending count, ties by token.
    pub fn sorted(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }

    /// Zipf frequency: log10 of occurrences per billion tokens, clamped to [0, 8].
    pub fn zipf(&self, word: &str) -> Result<f64, CorpusError> {
        if self.total == 0 {
            return Err(CorpusError::EmptyCorpus);
        }
        Ok(zipf_value(self.get(word), self.total))
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# total={}", self.total)?;
        for (t, n) in self.sorted() {
            writeln!(out, "{t}\t{n}")?;
        }
        out.flush()
    }

    pub fn read_tsv<R: Read>(input: R) -> Result<TokenCounts, CorpusError> {
        let mut counts = TokenCounts::new();
        let mut declared = None;
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix("# total=") {
                declared = Some(rest.trim().parse::<u64>().map_err(|_| CorpusError::MalformedCounts {
                    line: lineno,
                    reason: "bad total".into(),
                })?);
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| CorpusError::MalformedCounts { line: lineno, reason: reason.into() };
            let (token, n) = line.split_once('\t').ok_or_else(|| bad("expected <token>\\t<count>"))?;
            let n: u64 = n.parse().map_err(|_| bad("count is not an integer"))?;
            if n == 0 {
                return Err(bad("count must be positive"));
            }
            counts.add(token, n);
        }
        if let Some(total) = declared {
            if total != counts.total {
                return Err(CorpusError::MalformedCounts {
                    line: 1,
                    reason: format!("header total {total} != sum of counts {}", counts.total),
                });
            }
        }
        Ok(counts)
    }
}

const CHUNK_LINES: usize = 16 * 1024;

fn count_lines(lines: &[String]) -> TokenCounts {
    lines
        .par_chunks(1024)
        .map(|ls| TokenCounts::from_tokens(ls.iter().flat_map(|l| l.split_whitespace())))
        .reduce(TokenCounts::new, TokenCounts::merge)
}

pub fn zipf_value(count: u64, total: u64) -> f64 {
    if count == 0 || total == 0 {
        return 0.0;
    }
    let per_billion = count as f64 / total as f64 * 1e9;
    per_billion.log10().clamp(0.0, 8.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_lowercases_and_splits_punctuation() {
        let t = Tokenizer::default();
        assert_eq!(t.tokenize("El Gato, negro."), vec!["el", "gato", "negro"]);
        assert!(t.tokenize("").is_empty());
        assert_eq!(t.tokenize("Ñandú café-2024"), vec!["ñandú", "café", "2024"]);
        assert_eq!(Tokenizer::new(false).tokenize("El Gato"), vec!["El", "Gato"]);
    }

    #[test]
    fn stemmer_hook_applies_per_token() {
        let stem = |t: &str| if t == "etxean" { "etxe".to_string() } else { t.to_string() };
        let t = Tokenizer::default().with_stemmer(&stem);
        assert_eq!(t.tokenize("etxean da"), vec!["etxe", "da"]);
    }

    #[test]
    fn preprocess_rejects_invalid_utf8() {
        let input: &[u8] = b"ok line\nbad \xff byte\n";
        let err = Tokenizer::default().preprocess(input, Vec::new()).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidEncoding { line: 2 }));
    }

    #[test]
    fn preprocess_writes_token_lines() {
        let mut out = Vec::new();
        let n = Tokenizer::default().preprocess("A b.\n\n!!\nC\n".as_bytes(), &mut out).unwrap();
        assert_eq!(n, 3);
        assert_eq!(String::from_utf8(out).unwrap(), "a b\nc\n");
    }

    #[test]
    fn counts_exact() {
        let c = TokenCounts::from_tokens(["a", "b", "a"]);
        assert_eq!(c.get("a"), 2);
        assert_eq!(c.get("b"), 1);
        assert_eq!(c.total(), 3);
        let empty = TokenCounts::from_tokens(Vec::<String>::new());
        assert_eq!(empty.total(), 0);
        assert_eq!(empty.distinct(), 0);
    }

    #[test]
    fn zipf_fixed_points() {
        assert!((zipf_value(1000, 1_000_000_000) - 3.0).abs() < 1e-12);
        assert_eq!(zipf_value(100_000_000, 1_000_000_000), 8.0);
        assert_eq!(zipf_value(900_000_000, 1_000_000_000), 8.0);
        assert_eq!(zipf_value(0, 1_000_000_000), 0.0);
        // once per ten billion clamps at the floor
        assert_eq!(zipf_value(1, 10_000_000_000), 0.0);
        let c = TokenCounts::new();
        assert!(matches!(c.zipf("x"), Err(CorpusError::EmptyCorpus)));
    }

    #[test]
    fn counts_tsv_round_trip() {
        let c = TokenCounts::from_tokens(["x", "y", "x", "z", "x"]);
        let mut buf = Vec::new();
        c.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "# total=5\nx\t3\ny\t1\nz\t1\n");
        assert_eq!(TokenCounts::read_tsv(&buf[..]).unwrap(), c);
        assert!(TokenCounts::read_tsv("# total=4\nx\t3\n".as_bytes()).is_err());
    }
}
