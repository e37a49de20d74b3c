//! Word-similarity evaluation: Spearman correlation between embedding cosines
//! and gold human scores.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::embedding::{cosine, EmbeddingSpace};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("gold line {line}: pair ({a}, {b}) already listed")]
    DuplicatePair { line: usize, a: String, b: String },
    #[error("gold dataset is empty")]
    EmptyGold,
    #[error("only {evaluated} of {total} gold pairs resolvable; need at least 2")]
    InsufficientCoverage { evaluated: usize, total: usize },
    #[error("correlation undefined: one variable is constant")]
    ConstantVariable,
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldPair {
    pub word1: String,
    pub word2: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GoldDataset {
    pub name: String,
    pub entries: Vec<GoldPair>,
}

impl GoldDataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `word1\tword2\tscore` lines; words are lowercased, `#` lines skipped.
pub fn read_gold<R: Read>(name: &str, input: R) -> Result<GoldDataset, EvalError> {
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|source| EvalError::Io { path: name.to_string(), source })?;
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let malformed = |reason: String| EvalError::MalformedLine { line: lineno, reason };
        if f.len() != 3 {
            return Err(malformed(format!("expected 3 fields, found {}", f.len())));
        }
        let (a, b) = (f[0].trim().to_lowercase(), f[1].trim().to_lowercase());
        if a.is_empty() || b.is_empty() {
            return Err(malformed("empty word".into()));
        }
        let score: f64 = f[2]
            .trim()
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| malformed(format!("bad score {:?}", f[2])))?;
        let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        if !seen.insert(key) {
            return Err(EvalError::DuplicatePair { line: lineno, a, b });
        }
        entries.push(GoldPair { word1: a, word2: b, score });
    }
    Ok(GoldDataset { name: name.to_string(), entries })
}

pub fn load_gold(path: &Path) -> Result<GoldDataset, EvalError> {
    let io_err = |source| EvalError::Io { path: path.display().to_string(), source };
    let name = path.file_stem().map_or_else(|| "gold".to_string(), |s| s.to_string_lossy().into_owned());
    read_gold(&name, File::open(path).map_err(io_err)?)
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub rho: f64,
    /// Evaluated pairs over total pairs.
    pub coverage: f64,
    pub evaluated: usize,
    pub total: usize,
    /// Pairs skipped because a word had no vector.
    pub skipped: Vec<(String, String)>,
}

/// Spearman rho between cosines and gold scores over the resolvable pairs.
/// Words resolve through the vocabulary, then through subwords when the
/// space carries a table.
pub fn spearman_eval(space: &EmbeddingSpace, gold: &GoldDataset) -> Result<EvalResult, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let (mut cos, mut scores, mut skipped) = (Vec::new(), Vec::new(), Vec::new());
    for p in &gold.entries {
        match (space.resolve(&p.word1), space.resolve(&p.word2)) {
            (Some(a), Some(b)) => {
                cos.push(cosine(&a, &b));
                scores.push(p.score);
            }
            _ => skipped.push((p.word1.clone(), p.word2.clone())),
        }
    }
    let (evaluated, total) = (cos.len(), gold.len());
    if evaluated < 2 {
        return Err(EvalError::InsufficientCoverage { evaluated, total });
    }
    let rho = spearman(&cos, &scores).ok_or(EvalError::ConstantVariable)?;
    Ok(EvalResult { rho, coverage: evaluated as f64 / total as f64, evaluated, total, skipped })
}

pub const RESULTS_HEADER: &str = "#dataset\tspace\trho\tcoverage";

/// One `dataset\tspace\trho\tcoverage` line.
pub fn write_result<W: Write>(mut out: W, dataset: &str, space: &str, r: &EvalResult) -> io::Result<()> {
    writeln!(out, "{dataset}\t{space}\t{:.6}\t{:.6}", r.rho, r.coverage)
}
